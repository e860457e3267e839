#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace arrowlab::ode {

template <std::size_t N>
using Vec = std::array<double, N>;

template <std::size_t N>
struct StateVector {
  double t = 0.0;
  Vec<N> x{};
};

/// Thrown when a trajectory is queried outside of its time span.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

template <std::size_t N>
bool all_finite(const Vec<N>& v) {
  return std::all_of(v.begin(), v.end(), [](double c) { return std::isfinite(c); });
}

/// Quartic continuous extension of one Dormand-Prince step.
///
/// The polynomial is parameterised by theta = (t - t0) / h, so it stays valid
/// for steps taken backwards in time (h < 0) and for segments that were cut
/// short by a stop event.
template <std::size_t N>
struct DenseSegment {
  double t0 = 0.0;
  double h = 0.0;
  std::array<Vec<N>, 5> coeff{};

  Vec<N> value(double t) const {
    const double th = (t - t0) / h;
    const double th1 = 1.0 - th;
    Vec<N> y;
    for (std::size_t i = 0; i < N; ++i) {
      const auto& c = coeff;
      y[i] = c[0][i] + th * (c[1][i] + th1 * (c[2][i] + th * (c[3][i] + th1 * c[4][i])));
    }
    return y;
  }

  Vec<N> derivative(double t) const {
    const double th = (t - t0) / h;
    const double th1 = 1.0 - th;
    Vec<N> d;
    for (std::size_t i = 0; i < N; ++i) {
      const auto& c = coeff;
      const double a = c[3][i] + th1 * c[4][i];
      const double da = -c[4][i];
      const double b = c[2][i] + th * a;
      const double db = a + th * da;
      const double cc = c[1][i] + th1 * b;
      const double dcc = -b + th1 * db;
      d[i] = (cc + th * dcc) / h;
    }
    return d;
  }
};

/// Time-ordered samples of a dynamical system with interpolation.
///
/// Sample times are strictly increasing. When every interval carries a dense
/// segment the trajectory interpolates at order 4, otherwise linearly.
template <std::size_t N>
class Trajectory {
 public:
  Trajectory() = default;

  /// Linear-interpolation trajectory from raw samples.
  static Trajectory from_samples(std::vector<StateVector<N>> samples) {
    Trajectory tr;
    for (auto& s : samples) tr.push(s);
    return tr;
  }

  void push(const StateVector<N>& s) {
    if (!samples_.empty() && !(s.t > samples_.back().t)) {
      throw std::invalid_argument("trajectory sample times must be strictly increasing");
    }
    if (!segments_.empty()) {
      throw std::logic_error("cannot mix dense and sample-only intervals");
    }
    samples_.push_back(s);
  }

  /// Appends a sample together with the dense segment covering the new interval.
  void push(const StateVector<N>& s, const DenseSegment<N>& seg) {
    if (samples_.empty()) throw std::logic_error("dense segment needs a preceding sample");
    if (!(s.t > samples_.back().t)) {
      throw std::invalid_argument("trajectory sample times must be strictly increasing");
    }
    if (segments_.size() + 1 != samples_.size()) {
      throw std::logic_error("cannot mix dense and sample-only intervals");
    }
    samples_.push_back(s);
    segments_.push_back(seg);
  }

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const std::vector<StateVector<N>>& samples() const { return samples_; }
  const std::vector<DenseSegment<N>>& segments() const { return segments_; }
  const StateVector<N>& front() const { return samples_.front(); }
  const StateVector<N>& back() const { return samples_.back(); }
  double t_first() const { return samples_.front().t; }
  double t_last() const { return samples_.back().t; }

  bool dense() const { return samples_.size() > 1 && segments_.size() + 1 == samples_.size(); }
  int interpolation_order() const { return dense() ? 4 : 1; }

  /// Index i of the interval [t_i, t_{i+1}] containing t.
  std::size_t interval(double t) const {
    if (samples_.empty() || t < t_first() || t > t_last() || std::isnan(t)) {
      throw RangeError("trajectory query at t=" + std::to_string(t) + " outside [" +
                       (samples_.empty() ? std::string("empty") :
                        std::to_string(t_first()) + ", " + std::to_string(t_last())) + "]");
    }
    if (samples_.size() == 1) return 0;
    auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                               [](double v, const StateVector<N>& s) { return v < s.t; });
    std::size_t i = static_cast<std::size_t>(it - samples_.begin());
    i = i == 0 ? 0 : i - 1;
    return std::min(i, samples_.size() - 2);
  }

  Vec<N> at(double t) const {
    const std::size_t i = interval(t);
    if (samples_.size() == 1) return samples_[0].x;
    const auto& a = samples_[i];
    const auto& b = samples_[i + 1];
    if (t == a.t) return a.x;
    if (t == b.t) return b.x;
    if (dense()) return segments_[i].value(t);
    const double w = (t - a.t) / (b.t - a.t);
    Vec<N> y;
    for (std::size_t k = 0; k < N; ++k) y[k] = a.x[k] + w * (b.x[k] - a.x[k]);
    return y;
  }

  /// Time derivative of the interpolant.
  Vec<N> derivative_at(double t) const {
    const std::size_t i = interval(t);
    if (samples_.size() == 1) return Vec<N>{};
    if (dense()) return segments_[i].derivative(t);
    const auto& a = samples_[i];
    const auto& b = samples_[i + 1];
    Vec<N> d;
    for (std::size_t k = 0; k < N; ++k) d[k] = (b.x[k] - a.x[k]) / (b.t - a.t);
    return d;
  }

  /// Drops everything after t (t must lie inside the span); the last interval
  /// keeps its dense segment.
  void truncate_after(double t, const Vec<N>& x_at_t) {
    const std::size_t i = interval(t);
    if (t == samples_[i].t) {
      samples_.resize(i + 1);
      if (!segments_.empty()) segments_.resize(i);
      return;
    }
    samples_.resize(i + 2);
    samples_[i + 1] = StateVector<N>{t, x_at_t};
    if (!segments_.empty()) segments_.resize(i + 1);
  }

  /// Trajectory with time running the other way: sample (t, x) becomes (-t, x).
  Trajectory time_reversed() const {
    Trajectory tr;
    for (std::size_t k = samples_.size(); k-- > 0;) {
      tr.samples_.push_back(StateVector<N>{-samples_[k].t, samples_[k].x});
    }
    for (std::size_t k = segments_.size(); k-- > 0;) {
      DenseSegment<N> seg = segments_[k];
      seg.t0 = -seg.t0;
      seg.h = -seg.h;
      tr.segments_.push_back(seg);
    }
    return tr;
  }

  /// Joins a trajectory ending at time t with one starting at the same time
  /// and state. Both must be dense or both sample-only.
  static Trajectory splice(const Trajectory& before, const Trajectory& after) {
    if (before.empty()) return after;
    if (after.empty()) return before;
    if (before.t_last() != after.t_first()) {
      throw std::invalid_argument("spliced trajectories must share their junction time");
    }
    Trajectory tr = before;
    const bool dense_join = (before.size() == 1 || before.dense()) &&
                            (after.size() == 1 || after.dense());
    if (!dense_join && (before.dense() || after.dense())) {
      throw std::invalid_argument("cannot splice dense and sample-only trajectories");
    }
    for (std::size_t k = 1; k < after.size(); ++k) {
      if (after.dense()) {
        tr.samples_.push_back(after.samples_[k]);
        tr.segments_.push_back(after.segments_[k - 1]);
      } else {
        tr.samples_.push_back(after.samples_[k]);
      }
    }
    return tr;
  }

  /// Applies a per-sample map to states; dense coefficients are mapped by the
  /// linear part `lin` (the map must be affine with zero offset on derivatives).
  template <typename LinearMap>
  Trajectory mapped_linear(LinearMap lin) const {
    Trajectory tr;
    for (const auto& s : samples_) tr.samples_.push_back(StateVector<N>{s.t, lin(s.x)});
    for (const auto& seg : segments_) {
      DenseSegment<N> m = seg;
      for (auto& c : m.coeff) c = lin(c);
      tr.segments_.push_back(m);
    }
    return tr;
  }

 private:
  std::vector<StateVector<N>> samples_;
  std::vector<DenseSegment<N>> segments_;
};

/// n samples at equal spacing across the trajectory span; endpoints are the
/// original end samples bit for bit.
template <std::size_t N>
Trajectory<N> resample_uniform(const Trajectory<N>& traj, std::size_t n) {
  if (n < 2) throw std::invalid_argument("resample_uniform needs n >= 2");
  if (traj.size() < 2) throw RangeError("resample_uniform needs a trajectory with a nonzero span");
  const double t0 = traj.t_first();
  const double t1 = traj.t_last();
  std::vector<StateVector<N>> out;
  out.reserve(n);
  out.push_back(traj.front());
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double t = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(n - 1);
    out.push_back(StateVector<N>{t, traj.at(t)});
  }
  out.push_back(traj.back());
  return Trajectory<N>::from_samples(std::move(out));
}

}  // namespace arrowlab::ode
