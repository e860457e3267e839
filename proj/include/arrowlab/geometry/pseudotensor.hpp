#pragma once

// Einstein's canonical energy-momentum pseudotensor.
//
//   L = sqrt(-g) g^ik (Gamma^m_il Gamma^l_km - Gamma^l_ik Gamma^m_lm)
//   sqrt(-g) t_m^n = (1/16 pi) [L delta_m^n - (dL/d g_ab,n) g_ab,m]
//   tau_m^n = sqrt(-g) (T_m^n + t_m^n)
//
// With T from the field equations and Lambda = 0, d_n tau_m^n = 0 holds
// identically. Only the row tau_0^n is reported as the energy flux.

#include <array>
#include <cmath>
#include <numbers>

#include "arrowlab/geometry/curvature.hpp"

namespace arrowlab::geometry {

/// Gravitational Lagrangian density from the metric and its first derivatives.
inline double gamma_gamma_lagrangian(const Mat4& g, const MatGradient& dg) {
  const Mat4 g_inv = g.inverse();
  const Christoffel G = christoffel(g_inv, dg);
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int k = 0; k < 4; ++k) {
      if (g_inv(i, k) == 0.0) continue;
      double q = 0.0;
      for (int l = 0; l < 4; ++l) {
        for (int m = 0; m < 4; ++m) q += G[m](i, l) * G[l](k, m) - G[l](i, k) * G[m](l, m);
      }
      s += g_inv(i, k) * q;
    }
  }
  return std::sqrt(-g.determinant()) * s;
}

struct PseudotensorEvaluation {
  Point point;
  double lagrangian = 0.0;
  double sqrt_minus_g = 0.0;
  Mat4 T_mixed;  // T_m^n, row m, column n
  Mat4 t_mixed;  // t_m^n
  Mat4 tau;      // tau_m^n = sqrt(-g) (T_m^n + t_m^n)

  Vec4 energy_row() const { return tau.row(0).transpose(); }
};

struct PseudotensorOptions {
  double h = 1e-3;    // coordinate step for curvature
  double h_p = 1e-5;  // perturbation of the derivative slots
  double Lambda = 0.0;
};

/// dL/d(g_ab,n) g_ab,m for all (m, n); symmetric pairs (a, b), (b, a) are one
/// variable. L is quadratic in the derivatives, so central differences are
/// exact up to rounding.
inline Mat4 canonical_term(const Mat4& g, const MatGradient& dg, double h_p) {
  Mat4 out = Mat4::Zero();
  for (int n = 0; n < 4; ++n) {
    for (int a = 0; a < 4; ++a) {
      for (int b = a; b < 4; ++b) {
        MatGradient up = dg, dn = dg;
        up[n](a, b) += h_p;
        dn[n](a, b) -= h_p;
        if (a != b) {
          up[n](b, a) += h_p;
          dn[n](b, a) -= h_p;
        }
        const double dL = (gamma_gamma_lagrangian(g, up) - gamma_gamma_lagrangian(g, dn)) / (2 * h_p);
        if (!std::isfinite(dL)) throw MetricError("non-finite Lagrangian derivative");
        for (int m = 0; m < 4; ++m) out(m, n) += dL * dg[m](a, b);
      }
    }
  }
  return out;
}

/// Pseudotensor from the metric, its first derivatives and T_mn.
inline PseudotensorEvaluation pseudotensor_from_derivatives(const Mat4& g, const MatGradient& dg, const Mat4& T,
                                                            double h_p = 1e-5) {
  PseudotensorEvaluation e;
  e.sqrt_minus_g = std::sqrt(-g.determinant());
  e.lagrangian = gamma_gamma_lagrangian(g, dg);
  Mat4 C;
  try {
    C = canonical_term(g, dg, h_p);
  } catch (const MetricError&) {
    C = canonical_term(g, dg, 0.5 * h_p);
  }
  const Mat4 sg_t = (e.lagrangian * Mat4::Identity() - C) / (16.0 * std::numbers::pi);
  e.t_mixed = sg_t / e.sqrt_minus_g;
  e.T_mixed = T * g.inverse();  // T_m^n = T_mk g^kn
  e.tau = e.sqrt_minus_g * (e.T_mixed + e.t_mixed);
  return e;
}

inline PseudotensorEvaluation pseudotensor(const MetricField& metric, const Point& x,
                                           const PseudotensorOptions& opt = {}) {
  const auto b = curvature(metric, x, opt.h);
  auto e = pseudotensor_from_derivatives(b.g, b.dg, stress_energy(b, opt.Lambda), opt.h_p);
  e.point = x;
  return e;
}

/// |d_n tau_0^n| by central differences with step h, each tau evaluated with
/// curvature step h.
inline double conservation_residual(const MetricField& metric, const Point& x, double h,
                                    const PseudotensorOptions& base = {}) {
  PseudotensorOptions opt = base;
  opt.h = h;
  double div = 0.0;
  for (int n = 0; n < 4; ++n) {
    const auto up = pseudotensor(metric, shifted(x, n, h), opt);
    const auto dn = pseudotensor(metric, shifted(x, n, -h), opt);
    div += (up.tau(0, n) - dn.tau(0, n)) / (2 * h);
  }
  return std::abs(div);
}

}  // namespace arrowlab::geometry
