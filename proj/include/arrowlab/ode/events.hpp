#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "arrowlab/ode/integrate.hpp"
#include "arrowlab/ode/trajectory.hpp"

namespace arrowlab::ode {

template <std::size_t N>
struct Event {
  double t = 0.0;
  Vec<N> x{};
  // Part of a close root pair inside one integration step (tangential crossing).
  bool grazing = false;
};

template <std::size_t N>
struct EventScan {
  std::vector<Event<N>> crossings;
  // Tangential approaches with no sign change, closer to zero than the grazing band.
  std::vector<Event<N>> near_misses;
};

struct EventOptions {
  // Interior probes per sample interval; catches root pairs inside one step.
  int probes = 4;
  // |g| below grazing_band * scale at a local extremum counts as a near miss.
  double grazing_band = 1e-6;
};

/// Scans a trajectory for zero crossings of g(t, x).
///
/// Every sign change between consecutive probes is refined with a
/// bisection/secant hybrid to |g| < 1e-10 * scale, where scale is the largest
/// |g| seen on the probes (at least 1).
template <std::size_t N, typename G>
EventScan<N> scan_events(const Trajectory<N>& traj, G&& g, const EventOptions& opt = {}) {
  EventScan<N> out;
  if (traj.empty()) return out;
  const auto& s = traj.samples();

  // Probe grid: every sample plus interior points on each interval.
  std::vector<double> ts;
  std::vector<std::size_t> owner;  // interval index of each probe
  const int probes = traj.dense() ? std::max(0, opt.probes) : 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    ts.push_back(s[i].t);
    owner.push_back(i == 0 ? 0 : i - 1);
    if (i + 1 < s.size()) {
      for (int p = 1; p <= probes; ++p) {
        ts.push_back(s[i].t + (s[i + 1].t - s[i].t) * p / (probes + 1.0));
        owner.push_back(i);
      }
    }
  }
  std::vector<double> gs(ts.size());
  double scale = 1.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    gs[k] = g(ts[k], traj.at(ts[k]));
    scale = std::max(scale, std::abs(gs[k]));
  }
  auto gt = [&](double t) { return g(t, traj.at(t)); };

  std::vector<double> spacing;  // probe spacing around each root
  auto probe_gap = [&](std::size_t k) {
    return k + 1 < ts.size() ? ts[k + 1] - ts[k] : (k > 0 ? ts[k] - ts[k - 1] : 0.0);
  };
  for (std::size_t k = 0; k < ts.size(); ++k) {
    if (gs[k] == 0.0) {
      out.crossings.push_back(Event<N>{ts[k], traj.at(ts[k]), false});
      spacing.push_back(probe_gap(k));
      continue;
    }
    if (k + 1 < ts.size() && gs[k + 1] != 0.0 && (gs[k] > 0) != (gs[k + 1] > 0)) {
      const double tr = detail::refine_root(gt, ts[k], gs[k], ts[k + 1], gs[k + 1], scale);
      out.crossings.push_back(Event<N>{tr, traj.at(tr), false});
      spacing.push_back(probe_gap(k));
    }
  }
  // Roots closer together than the probe spacing form a tangential pair.
  for (std::size_t r = 0; r + 1 < out.crossings.size(); ++r) {
    if (out.crossings[r + 1].t - out.crossings[r].t < std::max(spacing[r], spacing[r + 1])) {
      out.crossings[r].grazing = true;
      out.crossings[r + 1].grazing = true;
    }
  }

  // Valleys: three probes of one sign whose middle is closest to zero. The
  // signed minimum decides between a hidden root pair and a near miss.
  for (std::size_t k = 1; k + 1 < ts.size(); ++k) {
    if (gs[k - 1] == 0 || gs[k] == 0 || gs[k + 1] == 0) continue;
    const double sgn = gs[k] > 0 ? 1.0 : -1.0;
    if (sgn * gs[k - 1] <= 0 || sgn * gs[k + 1] <= 0) continue;
    if (!(sgn * gs[k] <= sgn * gs[k - 1] && sgn * gs[k] <= sgn * gs[k + 1])) continue;
    auto valley = [&](double t) { return sgn * gt(t); };
    double lo = ts[k - 1], hi = ts[k + 1];
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = valley(x1), f2 = valley(x2);
    for (int it = 0; it < 100 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++it) {
      if (f1 < 0 || f2 < 0) break;
      if (f1 < f2) {
        hi = x2; x2 = x1; f2 = f1; x1 = hi - phi * (hi - lo); f1 = valley(x1);
      } else {
        lo = x1; x1 = x2; f1 = f2; x2 = lo + phi * (hi - lo); f2 = valley(x2);
      }
    }
    const double tm = f1 < f2 ? x1 : x2;
    const double fm = std::min(f1, f2);
    if (fm < 0) {
      const double r0 = detail::refine_root(gt, ts[k - 1], gs[k - 1], tm, sgn * fm, scale);
      const double r1 = detail::refine_root(gt, tm, sgn * fm, ts[k + 1], gs[k + 1], scale);
      out.crossings.push_back(Event<N>{r0, traj.at(r0), true});
      out.crossings.push_back(Event<N>{r1, traj.at(r1), true});
    } else if (fm <= opt.grazing_band * scale) {
      out.near_misses.push_back(Event<N>{tm, traj.at(tm), true});
    }
  }
  std::sort(out.crossings.begin(), out.crossings.end(),
            [](const Event<N>& a, const Event<N>& b) { return a.t < b.t; });
  return out;
}

/// Zero crossings of g along the trajectory, ordered by time.
template <std::size_t N, typename G>
std::vector<Event<N>> find_events(const Trajectory<N>& traj, G&& g, const EventOptions& opt = {}) {
  return scan_events(traj, std::forward<G>(g), opt).crossings;
}

}  // namespace arrowlab::ode
