#pragma once

// Time-symmetry detection for the reduced FLRW phase space.
//
// A solution symmetric about t_S has a_dot(t_S) = 0 and either
// phi_dot(t_S) = 0 (even) or phi(t_S) = 0 (odd): its orbit meets one of the
// axes (0, phi, 0) or (0, 0, phi_dot). The defect measures how far an orbit
// stays from those axes at its turning points.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "arrowlab/cosmo/model.hpp"
#include "arrowlab/ode/events.hpp"
#include "arrowlab/ode/integrate.hpp"

namespace arrowlab::cosmo {

/// Normalization scales for the defect: half-widths of the sampling box.
struct Scales {
  double a_dot = 1.0;
  double phi = 2.0;
  double phi_dot = 2.0;
};

enum class SymmetryKind { Even, Odd, None };

inline std::string_view to_string(SymmetryKind k) {
  switch (k) {
    case SymmetryKind::Even: return "even";
    case SymmetryKind::Odd: return "odd";
    case SymmetryKind::None: return "none";
  }
  return "?";
}

/// Orbit through a reduced point, integrated both ways from t = 0 until the
/// singularity cutoff or the horizon.
struct TwoSidedOrbit {
  ode::Trajectory<4> trajectory;
  ode::Termination past = ode::Termination::Completed;
  ode::Termination future = ode::Termination::Completed;
};

inline ode::IntegrateOptions<4> orbit_options(const Params& p) {
  ode::IntegrateOptions<4> io;
  io.rtol = io.atol = p.tol * p.step_tol_factor;
  const double a_min = p.a_min;
  io.stop = [a_min](const Vec4& x) { return x[0] - a_min; };
  io.underflow_stops = true;
  return io;
}

/// Integrates from state s (at s.t) back to t_lo and forward to t_hi.
inline TwoSidedOrbit integrate_orbit(const State& s, const Params& p, double t_lo, double t_hi) {
  p.validate();
  const auto f = field(p);
  const auto io = orbit_options(p);
  const ode::StateVector<4> x0{s.t, s.vec()};
  TwoSidedOrbit out;
  auto past = ode::integrate(f, x0, t_lo, io);
  auto future = ode::integrate(f, x0, t_hi, io);
  out.past = past.termination;
  out.future = future.termination;
  out.trajectory = ode::Trajectory<4>::splice(past.trajectory, future.trajectory);
  return out;
}

inline TwoSidedOrbit integrate_orbit(const ReducedPoint& r, const Params& p) {
  return integrate_orbit(reconstruct(r, p), p, -p.t_max, p.t_max);
}

struct SymmetryReport {
  double defect = std::numeric_limits<double>::infinity();
  std::optional<double> t_S;
  SymmetryKind kind = SymmetryKind::None;
  std::optional<double> waveform_defect;
  std::size_t turning_points = 0;
  // Set when an integration failure cut the orbit short; the defect then
  // covers only the available window.
  bool partial = false;
  std::string note;
};

/// Phase-space symmetry defect of the orbit through r.
///
/// At each turning point (a_dot = 0) the candidates are |phi_dot|/s_phi_dot
/// (even) and |phi|/s_phi (odd); the defect is the smallest candidate. Orbits
/// without a turning point get min_t max(|a_dot|/s_a_dot, min(|phi_dot|/s_phi_dot,
/// |phi|/s_phi)) and kind None.
inline SymmetryReport symmetry_defect(const ReducedPoint& r, const Params& p, const Scales& sc = {}) {
  SymmetryReport rep;
  TwoSidedOrbit orbit;
  try {
    orbit = integrate_orbit(r, p);
  } catch (const ode::StiffnessError& e) {
    rep.partial = true;
    rep.note = e.what();
    return rep;
  }
  const auto& tr = orbit.trajectory;
  rep.partial = orbit.past == ode::Termination::MaxSteps || orbit.future == ode::Termination::MaxSteps;

  const auto turns = ode::find_events(tr, [](double, const Vec4& x) { return x[1]; });
  rep.turning_points = turns.size();
  for (const auto& ev : turns) {
    const double d_even = std::abs(ev.x[3]) / sc.phi_dot;
    const double d_odd = std::abs(ev.x[2]) / sc.phi;
    const double d = std::min(d_even, d_odd);
    if (d < rep.defect) {
      rep.defect = d;
      rep.t_S = ev.t;
      rep.kind = d_even <= d_odd ? SymmetryKind::Even : SymmetryKind::Odd;
    }
  }
  if (!turns.empty()) return rep;

  auto functional = [&](const Vec4& x) {
    return std::max(std::abs(x[1]) / sc.a_dot,
                    std::min(std::abs(x[3]) / sc.phi_dot, std::abs(x[2]) / sc.phi));
  };
  const auto& smp = tr.samples();
  for (std::size_t i = 0; i < smp.size(); ++i) {
    rep.defect = std::min(rep.defect, functional(smp[i].x));
    if (i + 1 < smp.size()) {
      for (int q = 1; q < 4; ++q) {
        const double t = smp[i].t + (smp[i + 1].t - smp[i].t) * q / 4.0;
        rep.defect = std::min(rep.defect, functional(tr.at(t)));
      }
    }
  }
  rep.kind = SymmetryKind::None;
  return rep;
}

struct WaveformResult {
  double defect = 0.0;
  // Equals the requested window unless a singularity truncated the orbit.
  double effective_window = 0.0;
};

/// Mirror test of the solution about t_S:
///   max_tau |a(t_S+tau) - a(t_S-tau)| / a(t_S) + |phi(t_S+tau) -/+ phi(t_S-tau)|
/// ('-' for even, '+' for odd) on `offsets` uniform tau in [0, window].
inline WaveformResult waveform_symmetry_check(const ReducedPoint& r, double t_S, SymmetryKind kind,
                                              double window, const Params& p, std::size_t offsets = 201) {
  if (kind == SymmetryKind::None) throw std::invalid_argument("waveform check needs an even or odd kind");
  if (!(window >= 0)) throw std::invalid_argument("waveform window must be non-negative");
  offsets = std::max<std::size_t>(offsets, 200);
  const State s0 = reconstruct(r, p);
  const auto orbit = integrate_orbit(s0, p, std::min(0.0, t_S - window), std::max(0.0, t_S + window));
  const auto& tr = orbit.trajectory;
  if (t_S < tr.t_first() || t_S > tr.t_last()) {
    throw ode::RangeError("symmetry time outside the integrable window");
  }
  WaveformResult out;
  out.effective_window = std::min({window, t_S - tr.t_first(), tr.t_last() - t_S});
  const double a_s = tr.at(t_S)[0];
  const double sign = kind == SymmetryKind::Even ? -1.0 : 1.0;
  for (std::size_t j = 0; j < offsets; ++j) {
    const double tau = out.effective_window * static_cast<double>(j) / static_cast<double>(offsets - 1);
    const Vec4 plus = tr.at(std::min(t_S + tau, tr.t_last()));
    const Vec4 minus = tr.at(std::max(t_S - tau, tr.t_first()));
    const double d = std::abs(plus[0] - minus[0]) / a_s + std::abs(plus[2] + sign * minus[2]);
    out.defect = std::max(out.defect, d);
  }
  return out;
}

}  // namespace arrowlab::cosmo
