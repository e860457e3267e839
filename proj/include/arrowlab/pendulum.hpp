#pragma once

// Pendulum with H = p^2/2 + (K^2/2) cos(theta).
//
// The potential has its maximum at theta = 0, so the separatrix sits at
// energy K^2/2 and the stable equilibrium at theta = pi.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string_view>

#include "arrowlab/ode/events.hpp"
#include "arrowlab/ode/integrate.hpp"
#include "arrowlab/ode/reversal.hpp"

namespace arrowlab::pendulum {

using Vec2 = ode::Vec<2>;

struct Params {
  double K = 1.0;

  void validate() const {
    if (!(K > 0) || !std::isfinite(K)) throw std::invalid_argument("pendulum: K must be positive");
  }
};

struct State {
  double theta = 0.0;
  double p_theta = 0.0;

  Vec2 vec() const { return {theta, p_theta}; }
};

enum class Class { Reversible, Irreversible, Separatrix, Undetermined };

inline std::string_view to_string(Class c) {
  switch (c) {
    case Class::Reversible: return "reversible";
    case Class::Irreversible: return "irreversible";
    case Class::Separatrix: return "separatrix";
    case Class::Undetermined: return "undetermined";
  }
  return "?";
}

inline double energy(const State& s, const Params& p) {
  return 0.5 * s.p_theta * s.p_theta + 0.5 * p.K * p.K * std::cos(s.theta);
}

inline double separatrix_energy(const Params& p) { return 0.5 * p.K * p.K; }

/// Hamilton's equations: theta' = p, p' = (K^2/2) sin(theta).
struct Field {
  double K = 1.0;
  Vec2 operator()(double, const Vec2& x) const { return {x[1], 0.5 * K * K * std::sin(x[0])}; }
};

/// (theta, p) -> (theta, -p)
inline ode::ReversalInvolution<2> reversal() { return ode::ReversalInvolution<2>({1, -1}); }

inline Class classify_analytic(const State& s, const Params& p) {
  p.validate();
  const double e = energy(s, p);
  const double es = separatrix_energy(p);
  if (std::abs(e - es) <= 1e-9 * p.K * p.K) return Class::Separatrix;
  return e < es ? Class::Reversible : Class::Irreversible;
}

struct NumericOptions {
  double tol = 1e-10;
  // Closed-curve detection radius in phase space.
  double delta = 1e-6;
  // Extra angle beyond 2*pi required for a monotone run to count as rotation.
  double margin = 0.1;
};

struct NumericResult {
  Class cls = Class::Undetermined;
  // First return time for reversible solutions, NaN otherwise.
  double return_time = std::numeric_limits<double>::quiet_NaN();
  // max |E - E0| / max(1, |E0|) over the integration samples.
  double energy_drift = 0.0;
};

/// Classifies by integration alone.
///
/// Reversible: the orbit re-crosses the section through x0 (normal to the
/// flow) in the same direction within delta of x0. Irreversible: theta moves
/// beyond 2*pi + margin from theta0 while p keeps its sign.
inline NumericResult classify_numeric_detail(const State& s, const Params& p, double t_max,
                                             const NumericOptions& opt = {}) {
  p.validate();
  if (!(t_max > 0)) throw std::invalid_argument("classify_numeric: t_max must be positive");
  const Field f{p.K};
  const Vec2 x0 = s.vec();
  const Vec2 v0 = f(0.0, x0);
  const double speed = std::hypot(v0[0], v0[1]);
  NumericResult out;
  if (speed <= 1e-14 * std::max(1.0, p.K * p.K)) {
    // Equilibria are closed (degenerate) curves; the unstable one is the
    // separatrix vertex and never returns through a neighborhood.
    out.cls = std::cos(s.theta) < 0 ? Class::Reversible : Class::Undetermined;
    if (out.cls == Class::Reversible) out.return_time = 0.0;
    return out;
  }

  ode::IntegrateOptions<2> io;
  io.rtol = io.atol = opt.tol;
  const double escape = 2 * std::numbers::pi + opt.margin;
  io.stop = [&](const Vec2& x) { return escape - std::abs(x[0] - x0[0]); };
  const auto run = ode::integrate(f, ode::StateVector<2>{0.0, x0}, t_max, io);
  const auto& tr = run.trajectory;
  const double e0 = energy(s, p);
  for (const auto& smp : tr.samples()) {
    const double e = energy({smp.x[0], smp.x[1]}, p);
    out.energy_drift = std::max(out.energy_drift, std::abs(e - e0) / std::max(1.0, std::abs(e0)));
  }

  if (run.termination == ode::Termination::StopEvent) {
    const auto sign_flips = ode::find_events(tr, [](double, const Vec2& x) { return x[1]; });
    const bool monotone = sign_flips.empty();
    out.cls = monotone ? Class::Irreversible : Class::Undetermined;
    return out;
  }

  auto section = [&](double, const Vec2& x) {
    return (x[0] - x0[0]) * v0[0] + (x[1] - x0[1]) * v0[1];
  };
  for (const auto& ev : ode::find_events(tr, section)) {
    if (ev.t <= 0.0) continue;
    const Vec2 v = f(ev.t, ev.x);
    if (v[0] * v0[0] + v[1] * v0[1] <= 0) continue;
    if (std::hypot(ev.x[0] - x0[0], ev.x[1] - x0[1]) < opt.delta) {
      out.cls = Class::Reversible;
      out.return_time = ev.t;
      return out;
    }
  }
  return out;
}

inline Class classify_numeric(const State& s, const Params& p, double t_max, const NumericOptions& opt = {}) {
  return classify_numeric_detail(s, p, t_max, opt).cls;
}

}  // namespace arrowlab::pendulum
