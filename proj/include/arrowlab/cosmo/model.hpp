#pragma once

// Closed (k = +1) FLRW universe with a minimally coupled massive scalar field,
// V(phi) = m^2 phi^2 / 2, in units G = c = 1.
//
// Phase space is (a, a_dot, phi, phi_dot). The 00 Einstein equation
//   a_dot^2 + k = (8 pi / 3) a^2 rho + (Lambda / 3) a^2
// is a first integral of the evolution equations and removes a, leaving the
// reduced chart (a_dot, phi, phi_dot).

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "arrowlab/ode/reversal.hpp"
#include "arrowlab/ode/trajectory.hpp"

namespace arrowlab::cosmo {

using Vec4 = ode::Vec<4>;

/// The reduced point has no positive solution for the scale factor.
class ConstraintError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The scale factor reached the singularity cutoff.
class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Params {
  double m = 1.0;
  double Lambda = 0.0;
  int k = 1;
  double a_min = 1e-4;
  double t_max = 100.0;
  double tol = 1e-10;
  // Integrator step tolerance is tol * step_tol_factor; per-step control at
  // tol itself lets the constraint drift past tol over long horizons.
  double step_tol_factor = 1e-2;
  // Reconstructed scale factors above this are reported as divergent.
  double a_max = 1e8;

  void validate() const {
    if (!(m > 0) || !std::isfinite(m)) throw std::invalid_argument("cosmo: m must be positive");
    if (!std::isfinite(Lambda)) throw std::invalid_argument("cosmo: Lambda must be finite");
    if (k != 1) throw std::invalid_argument("cosmo: only closed (k = +1) geometry is supported");
    if (!(a_min > 0)) throw std::invalid_argument("cosmo: a_min must be positive");
    if (!(t_max > 0)) throw std::invalid_argument("cosmo: t_max must be positive");
    if (!(tol > 0)) throw std::invalid_argument("cosmo: tol must be positive");
    if (!(step_tol_factor > 0 && step_tol_factor <= 1)) {
      throw std::invalid_argument("cosmo: step_tol_factor must be in (0, 1]");
    }
    if (!(a_max > a_min)) throw std::invalid_argument("cosmo: a_max must exceed a_min");
  }
};

struct State {
  double a = 1.0;
  double a_dot = 0.0;
  double phi = 0.0;
  double phi_dot = 0.0;
  double t = 0.0;

  Vec4 vec() const { return {a, a_dot, phi, phi_dot}; }
  static State from(const Vec4& v, double t = 0.0) { return {v[0], v[1], v[2], v[3], t}; }
};

struct ReducedPoint {
  double a_dot = 0.0;
  double phi = 0.0;
  double phi_dot = 0.0;
};

inline double energy_density(double phi, double phi_dot, double m) {
  return 0.5 * phi_dot * phi_dot + 0.5 * m * m * phi * phi;
}

inline double pressure(double phi, double phi_dot, double m) {
  return 0.5 * phi_dot * phi_dot - 0.5 * m * m * phi * phi;
}

/// Evolution equations as an integrable field. Returns NaN derivatives at or
/// below the singularity cutoff, which the integrator treats as a stop.
struct Field {
  double m = 1.0;
  double Lambda = 0.0;
  double a_min = 1e-4;

  Vec4 operator()(double, const Vec4& x) const {
    const double a = x[0], a_dot = x[1], phi = x[2], phi_dot = x[3];
    if (!(a > a_min)) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      return {nan, nan, nan, nan};
    }
    const double rho = energy_density(phi, phi_dot, m);
    const double p = pressure(phi, phi_dot, m);
    const double a_ddot = -(4.0 * std::numbers::pi / 3.0) * a * (rho + 3.0 * p) + (Lambda / 3.0) * a;
    const double phi_ddot = -3.0 * (a_dot / a) * phi_dot - m * m * phi;
    return {a_dot, a_ddot, phi_dot, phi_ddot};
  }
};

inline Field field(const Params& p) { return Field{p.m, p.Lambda, p.a_min}; }

/// (a_dot, a_ddot, phi_dot, phi_ddot) at s; throws SingularityError for a <= a_min.
inline Vec4 rhs(const State& s, const Params& p) {
  if (!(s.a > p.a_min)) {
    throw SingularityError("scale factor " + std::to_string(s.a) + " at or below a_min " +
                           std::to_string(p.a_min));
  }
  return field(p)(s.t, s.vec());
}

/// Positive root a of the constraint for a reduced point.
inline double solve_constraint_for_a(const ReducedPoint& r, const Params& p) {
  const double rho = energy_density(r.phi, r.phi_dot, p.m);
  const double denom = (8.0 * std::numbers::pi / 3.0) * rho + p.Lambda / 3.0;
  const double numer = r.a_dot * r.a_dot + p.k;
  if (!(denom > 0.0) || !(numer > 0.0)) {
    throw ConstraintError("no positive scale factor solves the constraint (effective density " +
                          std::to_string(denom) + ")");
  }
  const double a = std::sqrt(numer / denom);
  if (!std::isfinite(a) || a > p.a_max) {
    throw ConstraintError("reconstructed scale factor diverges (a = " + std::to_string(a) + ")");
  }
  return a;
}

inline State reconstruct(const ReducedPoint& r, const Params& p, double t = 0.0) {
  return State{solve_constraint_for_a(r, p), r.a_dot, r.phi, r.phi_dot, t};
}

inline ReducedPoint reduce(const State& s) { return {s.a_dot, s.phi, s.phi_dot}; }

/// |a_dot^2 + k - (8 pi / 3) a^2 rho - (Lambda / 3) a^2| / max(1, a_dot^2 + k)
inline double constraint_residual(const State& s, const Params& p) {
  const double rho = energy_density(s.phi, s.phi_dot, p.m);
  const double lhs = s.a_dot * s.a_dot + p.k;
  const double rhs_ = (8.0 * std::numbers::pi / 3.0) * s.a * s.a * rho + (p.Lambda / 3.0) * s.a * s.a;
  return std::abs(lhs - rhs_) / std::max(1.0, lhs);
}

/// (a, a_dot, phi, phi_dot) -> (a, -a_dot, phi, -phi_dot)
inline ode::ReversalInvolution<4> reversal() { return ode::ReversalInvolution<4>({1, -1, 1, -1}); }

/// Reversal combined with phi -> -phi; a symmetry because V is even in phi.
inline ode::ReversalInvolution<4> odd_reversal() { return ode::ReversalInvolution<4>({1, -1, -1, 1}); }

}  // namespace arrowlab::cosmo
