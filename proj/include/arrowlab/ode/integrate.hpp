#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

#include "arrowlab/ode/trajectory.hpp"

namespace arrowlab::ode {

/// The step size fell below the minimum allowed step.
class StiffnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename F, std::size_t N>
concept VectorField = requires(const F& f, double t, const Vec<N>& x) {
  { f(t, x) } -> std::convertible_to<Vec<N>>;
};

enum class Termination {
  Completed,      // reached t_end
  StopEvent,      // the stop function crossed zero
  Singularity,    // the field stopped returning finite derivatives
  StepUnderflow,  // only when IntegrateOptions::underflow_stops is set
  MaxSteps,
};

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::Completed: return "completed";
    case Termination::StopEvent: return "stop_event";
    case Termination::Singularity: return "singularity";
    case Termination::StepUnderflow: return "step_underflow";
    case Termination::MaxSteps: return "max_steps";
  }
  return "unknown";
}

template <std::size_t N>
struct IntegrateOptions {
  double rtol = 1e-10;
  double atol = 1e-10;
  // Minimum |h| as a fraction of |t_end - t0|.
  double min_step_fraction = 1e-14;
  std::size_t max_steps = 2'000'000;
  // Integration stops where this crosses from positive to non-positive.
  std::function<double(const Vec<N>&)> stop;
  // Report StepUnderflow instead of throwing StiffnessError.
  bool underflow_stops = false;
};

template <std::size_t N>
struct IntegrationResult {
  Trajectory<N> trajectory;
  Termination termination = Termination::Completed;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

namespace detail {

// Dormand-Prince 5(4) tableau and the dense-output weights of dopri5.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                          a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
};

template <std::size_t N>
double error_norm(const Vec<N>& err, const Vec<N>& y0, const Vec<N>& y1, double atol, double rtol) {
  double sum = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double sk = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = err[i] / sk;
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(N));
}

// Locates the zero of g along a dense segment between ta and tb, assuming
// g(ta) and g(tb) have opposite signs (or g(tb) == 0).
template <typename G>
double refine_root(G&& g, double ta, double ga, double tb, double gb, double scale) {
  if (gb == 0.0) return tb;
  if (ga == 0.0) return ta;
  const double g_tol = 1e-10 * scale;
  int side = 0;
  for (int it = 0; it < 200; ++it) {
    const double width = std::abs(tb - ta);
    const double t_tol = 1e-12 * std::max(1.0, std::max(std::abs(ta), std::abs(tb)));
    if (width <= t_tol) break;
    // Illinois-modified false position, bisection when it stalls.
    double tm = (ta * gb - tb * ga) / (gb - ga);
    const double lo = std::min(ta, tb), hi = std::max(ta, tb);
    if (!(tm > lo + 0.01 * width && tm < hi - 0.01 * width)) tm = 0.5 * (ta + tb);
    const double gm = g(tm);
    if (gm == 0.0) return tm;
    if ((gm > 0) == (gb > 0)) {
      tb = tm;
      gb = gm;
      if (side == -1) ga *= 0.5;
      side = -1;
    } else {
      ta = tm;
      ga = gm;
      if (side == 1) gb *= 0.5;
      side = 1;
    }
    if (std::abs(gm) <= g_tol && std::abs(tb - ta) <= 1e-10 * std::max(1.0, std::abs(tm))) return tm;
  }
  return std::abs(ga) < std::abs(gb) ? ta : tb;
}

}  // namespace detail

/// Adaptive Dormand-Prince 5(4) integration from x0 to t_end (either direction).
///
/// Stages that produce non-finite derivatives shrink the step; if that drives
/// the step below the minimum the run ends with Termination::Singularity and
/// the last valid state. Step rejection by error control below the minimum
/// step raises StiffnessError.
template <std::size_t N, VectorField<N> F>
IntegrationResult<N> integrate(const F& f, const StateVector<N>& x0, double t_end,
                               const IntegrateOptions<N>& opt = {}) {
  using T = detail::Dopri5;
  if (!(opt.rtol > 0) || !(opt.atol > 0)) throw std::invalid_argument("integrate: tolerances must be positive");
  if (!all_finite(x0.x) || !std::isfinite(x0.t) || !std::isfinite(t_end)) {
    throw std::invalid_argument("integrate: non-finite initial state");
  }

  IntegrationResult<N> res;
  // Samples are collected in integration order and reversed at the end for
  // backward runs so the trajectory is always increasing in time.
  std::vector<StateVector<N>> samples{x0};
  std::vector<DenseSegment<N>> segments;

  const double span = t_end - x0.t;
  if (span == 0.0) {
    res.trajectory = Trajectory<N>::from_samples(samples);
    return res;
  }
  const double dir = span > 0 ? 1.0 : -1.0;
  const double hmin = opt.min_step_fraction * std::abs(span);

  auto finish = [&](Termination term) {
    res.termination = term;
    Trajectory<N> tr;
    if (dir > 0) {
      tr.push(samples.front());
      for (std::size_t k = 0; k < segments.size(); ++k) tr.push(samples[k + 1], segments[k]);
    } else {
      tr.push(samples.back());
      for (std::size_t k = segments.size(); k-- > 0;) tr.push(samples[k], segments[k]);
    }
    res.trajectory = std::move(tr);
    return res;
  };

  double t = x0.t;
  Vec<N> y = x0.x;
  Vec<N> k1 = f(t, y);
  if (!all_finite(k1)) return finish(Termination::Singularity);

  if (opt.stop && !(opt.stop(y) > 0.0)) return finish(Termination::StopEvent);

  // Initial step guess (Hairer, Norsett & Wanner, II.4).
  double h;
  {
    double d0 = 0, d1 = 0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sk = opt.atol + opt.rtol * std::abs(y[i]);
      d0 += (y[i] / sk) * (y[i] / sk);
      d1 += (k1[i] / sk) * (k1[i] / sk);
    }
    d0 = std::sqrt(d0 / N);
    d1 = std::sqrt(d1 / N);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, std::abs(span));
    Vec<N> y1;
    for (std::size_t i = 0; i < N; ++i) y1[i] = y[i] + dir * h0 * k1[i];
    const Vec<N> f1 = f(t + dir * h0, y1);
    double d2 = 0;
    if (all_finite(f1)) {
      for (std::size_t i = 0; i < N; ++i) {
        const double sk = opt.atol + opt.rtol * std::abs(y[i]);
        d2 += ((f1[i] - k1[i]) / sk) * ((f1[i] - k1[i]) / sk);
      }
      d2 = std::sqrt(d2 / N) / h0;
    } else {
      d2 = 1.0 / h0;
    }
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    h = dir * std::min({100 * h0, h1, std::abs(span)});
  }

  auto underflow = [&]() {
    if (opt.underflow_stops) return finish(Termination::StepUnderflow);
    throw StiffnessError("step size underflow at t=" + std::to_string(t) + " (|h| < " +
                         std::to_string(hmin) + ")");
  };

  bool last_rejected = false;
  std::size_t steps = 0;
  Vec<N> k2, k3, k4, k5, k6, k7, ys, y_new, err;

  while (dir * (t_end - t) > 0) {
    if (++steps > opt.max_steps) return finish(Termination::MaxSteps);
    if (dir * (t + h - t_end) > 0 || std::abs(t_end - (t + h)) < hmin) h = t_end - t;

    auto stage = [&](Vec<N>& out, double c, auto&& combine) {
      for (std::size_t i = 0; i < N; ++i) ys[i] = y[i] + h * combine(i);
      out = f(t + c * h, ys);
      return all_finite(out);
    };
    bool finite =
        stage(k2, T::c2, [&](std::size_t i) { return T::a21 * k1[i]; }) &&
        stage(k3, T::c3, [&](std::size_t i) { return T::a31 * k1[i] + T::a32 * k2[i]; }) &&
        stage(k4, T::c4, [&](std::size_t i) { return T::a41 * k1[i] + T::a42 * k2[i] + T::a43 * k3[i]; }) &&
        stage(k5, T::c5, [&](std::size_t i) {
          return T::a51 * k1[i] + T::a52 * k2[i] + T::a53 * k3[i] + T::a54 * k4[i];
        }) &&
        stage(k6, 1.0, [&](std::size_t i) {
          return T::a61 * k1[i] + T::a62 * k2[i] + T::a63 * k3[i] + T::a64 * k4[i] + T::a65 * k5[i];
        });
    if (finite) {
      for (std::size_t i = 0; i < N; ++i) {
        y_new[i] = y[i] + h * (T::a71 * k1[i] + T::a73 * k3[i] + T::a74 * k4[i] + T::a75 * k5[i] +
                               T::a76 * k6[i]);
      }
      k7 = f(t + h, y_new);
      finite = all_finite(k7) && all_finite(y_new);
    }
    if (!finite) {
      h *= 0.25;
      if (std::abs(h) < hmin) return finish(Termination::Singularity);
      last_rejected = true;
      ++res.rejected;
      continue;
    }

    for (std::size_t i = 0; i < N; ++i) {
      err[i] = h * (T::e1 * k1[i] + T::e3 * k3[i] + T::e4 * k4[i] + T::e5 * k5[i] + T::e6 * k6[i] +
                    T::e7 * k7[i]);
    }
    const double en = detail::error_norm(err, y, y_new, opt.atol, opt.rtol);

    if (en > 1.0) {
      const double fac = std::max(0.2, 0.9 * std::pow(en, -0.2));
      h *= fac;
      ++res.rejected;
      last_rejected = true;
      if (std::abs(h) < hmin) return underflow();
      continue;
    }

    DenseSegment<N> seg;
    seg.t0 = t;
    seg.h = h;
    for (std::size_t i = 0; i < N; ++i) {
      const double ydiff = y_new[i] - y[i];
      const double bspl = h * k1[i] - ydiff;
      seg.coeff[0][i] = y[i];
      seg.coeff[1][i] = ydiff;
      seg.coeff[2][i] = bspl;
      seg.coeff[3][i] = ydiff - h * k7[i] - bspl;
      seg.coeff[4][i] = h * (T::d1 * k1[i] + T::d3 * k3[i] + T::d4 * k4[i] + T::d5 * k5[i] +
                             T::d6 * k6[i] + T::d7 * k7[i]);
    }
    const double t_new = (t + h == t_end || h == t_end - t) ? t_end : t + h;

    if (opt.stop) {
      const double g0 = opt.stop(y);
      const double g1 = opt.stop(y_new);
      if (!(g1 > 0.0)) {
        auto g = [&](double tq) { return opt.stop(seg.value(tq)); };
        const double tr = detail::refine_root(g, t, g0, t_new, g1, std::max(1.0, std::abs(g0)));
        if (tr == t) return finish(Termination::StopEvent);
        samples.push_back(StateVector<N>{tr, seg.value(tr)});
        segments.push_back(seg);
        ++res.accepted;
        return finish(Termination::StopEvent);
      }
    }

    samples.push_back(StateVector<N>{t_new, y_new});
    segments.push_back(seg);
    ++res.accepted;
    t = t_new;
    y = y_new;
    k1 = k7;

    double fac = 0.9 * std::pow(std::max(en, 1e-10), -0.2);
    fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
    h *= fac;
    last_rejected = false;
    if (dir * (t_end - t) > 0 && std::abs(h) < hmin && std::abs(t_end - t) >= hmin) return underflow();
  }
  return finish(Termination::Completed);
}

}  // namespace arrowlab::ode
