#pragma once

// Christoffel symbols and Ricci curvature from central finite differences of
// the metric.
//
// Conventions: Gamma^l_mn = 1/2 g^lk (d_m g_kn + d_n g_km - d_k g_mn),
// R_mn = d_l Gamma^l_mn - d_n Gamma^l_ml + Gamma^l_ls Gamma^s_mn - Gamma^l_ns Gamma^s_ml.
// With signature (+,-,-,-) a flat FLRW metric has R_00 = -3 a''/a.

#include <array>
#include <cmath>
#include <numbers>

#include "arrowlab/geometry/metric.hpp"

namespace arrowlab::geometry {

/// gamma[l](m, n) = Gamma^l_mn
using Christoffel = std::array<Mat4, 4>;
/// d[r] = d_r of a matrix field
using MatGradient = std::array<Mat4, 4>;

/// Metric with first derivatives at a point.
struct Jet1 {
  Mat4 g;
  MatGradient dg;
};

struct CurvatureBundle {
  Point point;
  Mat4 g;
  Mat4 g_inv;
  MatGradient dg;
  Christoffel gamma;
  Mat4 ricci;
  double scalar = 0.0;
  double sqrt_minus_g = 0.0;
};

inline Christoffel christoffel(const Mat4& g_inv, const MatGradient& dg) {
  Christoffel G;
  for (int l = 0; l < 4; ++l) {
    for (int m = 0; m < 4; ++m) {
      for (int n = m; n < 4; ++n) {
        double s = 0.0;
        for (int k = 0; k < 4; ++k) s += g_inv(l, k) * (dg[m](k, n) + dg[n](k, m) - dg[k](m, n));
        G[l](m, n) = G[l](n, m) = 0.5 * s;
      }
    }
  }
  return G;
}

inline Point shifted(const Point& x, int r, double d) {
  Point y = x;
  y[r] += d;
  return y;
}

/// Evaluates the metric, checking the signature at every probe.
inline Mat4 probe(const MetricField& metric, const Point& x) {
  const Mat4 g = metric(x);
  check_lorentzian(g, x);
  return g;
}

/// Central first differences of the metric.
inline Jet1 metric_jet(const MetricField& metric, const Point& x, double h) {
  if (!(h > 0)) throw std::invalid_argument("finite-difference step must be positive");
  Jet1 j;
  j.g = probe(metric, x);
  for (int r = 0; r < 4; ++r) {
    j.dg[r] = (probe(metric, shifted(x, r, h)) - probe(metric, shifted(x, r, -h))) / (2 * h);
  }
  return j;
}

/// Finite-difference curvature at x with step h; O(h^2) accurate.
inline CurvatureBundle curvature(const MetricField& metric, const Point& x, double h) {
  if (!(h > 0)) throw std::invalid_argument("finite-difference step must be positive");
  CurvatureBundle b;
  b.point = x;
  b.g = probe(metric, x);
  std::array<Mat4, 4> plus, minus;
  for (int r = 0; r < 4; ++r) {
    plus[r] = probe(metric, shifted(x, r, h));
    minus[r] = probe(metric, shifted(x, r, -h));
    b.dg[r] = (plus[r] - minus[r]) / (2 * h);
  }
  // ddg[r][s] = d_r d_s g
  std::array<std::array<Mat4, 4>, 4> ddg;
  for (int r = 0; r < 4; ++r) {
    ddg[r][r] = (plus[r] - 2.0 * b.g + minus[r]) / (h * h);
    for (int s = r + 1; s < 4; ++s) {
      const Point pp = shifted(shifted(x, r, h), s, h), pm = shifted(shifted(x, r, h), s, -h);
      const Point mp = shifted(shifted(x, r, -h), s, h), mm = shifted(shifted(x, r, -h), s, -h);
      ddg[r][s] = (probe(metric, pp) - probe(metric, pm) - probe(metric, mp) + probe(metric, mm)) / (4 * h * h);
      ddg[s][r] = ddg[r][s];
    }
  }

  b.g_inv = b.g.inverse();
  b.sqrt_minus_g = std::sqrt(-b.g.determinant());
  b.gamma = christoffel(b.g_inv, b.dg);

  // dgamma[r][l](m, n) = d_r Gamma^l_mn, using d_r g^-1 = -g^-1 (d_r g) g^-1.
  std::array<Christoffel, 4> dgamma;
  for (int r = 0; r < 4; ++r) {
    const Mat4 dginv = -b.g_inv * b.dg[r] * b.g_inv;
    for (int l = 0; l < 4; ++l) {
      for (int m = 0; m < 4; ++m) {
        for (int n = m; n < 4; ++n) {
          double s = 0.0;
          for (int k = 0; k < 4; ++k) {
            const double S = b.dg[m](k, n) + b.dg[n](k, m) - b.dg[k](m, n);
            const double dS = ddg[r][m](k, n) + ddg[r][n](k, m) - ddg[r][k](m, n);
            s += dginv(l, k) * S + b.g_inv(l, k) * dS;
          }
          dgamma[r][l](m, n) = dgamma[r][l](n, m) = 0.5 * s;
        }
      }
    }
  }

  const auto& G = b.gamma;
  for (int m = 0; m < 4; ++m) {
    for (int n = m; n < 4; ++n) {
      double R = 0.0;
      for (int l = 0; l < 4; ++l) {
        R += dgamma[l][l](m, n) - dgamma[n][l](m, l);
        for (int s = 0; s < 4; ++s) R += G[l](l, s) * G[s](m, n) - G[l](n, s) * G[s](m, l);
      }
      b.ricci(m, n) = b.ricci(n, m) = R;
    }
  }
  b.scalar = (b.g_inv.cwiseProduct(b.ricci)).sum();
  return b;
}

/// T_mn = (1/8 pi)(R_mn - 1/2 g_mn R - Lambda g_mn)
inline Mat4 stress_energy(const CurvatureBundle& b, double Lambda = 0.0) {
  return (b.ricci - 0.5 * b.g * b.scalar - Lambda * b.g) / (8.0 * std::numbers::pi);
}

/// Frobenius norm of the connection; a diagnostic for how far the chart is
/// from locally inertial.
inline double christoffel_norm(const Christoffel& G) {
  double s = 0.0;
  for (const auto& m : G) s += m.squaredNorm();
  return std::sqrt(s);
}

}  // namespace arrowlab::geometry
