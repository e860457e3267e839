#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "arrowlab/ode/integrate.hpp"

namespace arrowlab::ode {

/// Diagonal sign involution on phase space, e.g. (q, p) -> (q, -p).
template <std::size_t N>
class ReversalInvolution {
 public:
  explicit ReversalInvolution(const std::array<int, N>& signs) : signs_(signs) {
    for (int s : signs_) {
      if (s != 1 && s != -1) throw std::invalid_argument("reversal signs must be +1 or -1");
    }
  }

  Vec<N> operator()(const Vec<N>& x) const {
    Vec<N> y;
    for (std::size_t i = 0; i < N; ++i) y[i] = signs_[i] < 0 ? -x[i] : x[i];
    return y;
  }

  const std::array<int, N>& signs() const { return signs_; }

 private:
  std::array<int, N> signs_;
};

struct ReversalCheckOptions {
  // Accuracy the check should resolve; flows are integrated at tol * safety.
  double tol = 1e-10;
  double safety = 1e-2;
  std::size_t probes = 101;
};

/// Numerical time-reversal test.
///
/// Flows x0 forward for T, applies R, flows the image forward again and
/// compares it with R applied to the original flow run backwards:
///   max_t | flow_t(R flow_T(x0)) - R flow_{T-t}(x0) |,
/// each component measured relative to max(1, |reference|). For a system
/// invariant under t -> -t with involution R this is at the level of the
/// integration error.
template <std::size_t N, VectorField<N> F>
double check_reversal_property(const F& f, const ReversalInvolution<N>& R, const StateVector<N>& x0,
                               double T, const ReversalCheckOptions& opt = {}) {
  if (T == 0.0) return 0.0;
  if (T < 0.0) throw std::invalid_argument("check_reversal_property: T must be non-negative");
  IntegrateOptions<N> io;
  io.rtol = io.atol = std::max(opt.tol * opt.safety, 1e-14);
  const auto fwd = integrate(f, x0, x0.t + T, io);
  if (fwd.termination != Termination::Completed) {
    throw std::runtime_error(std::string("reversal check: forward flow ended early (") +
                             to_string(fwd.termination) + ")");
  }
  const StateVector<N> z0{x0.t, R(fwd.trajectory.back().x)};
  const auto back = integrate(f, z0, x0.t + T, io);
  if (back.termination != Termination::Completed) {
    throw std::runtime_error(std::string("reversal check: reversed flow ended early (") +
                             to_string(back.termination) + ")");
  }

  double defect = 0.0;
  const std::size_t n = std::max<std::size_t>(opt.probes, 2);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = T * static_cast<double>(k) / static_cast<double>(n - 1);
    const Vec<N> lhs = back.trajectory.at(x0.t + s);
    const Vec<N> rhs = R(fwd.trajectory.at(x0.t + (T - s)));
    for (std::size_t i = 0; i < N; ++i) {
      defect = std::max(defect, std::abs(lhs[i] - rhs[i]) / std::max(1.0, std::abs(rhs[i])));
    }
  }
  return defect;
}

}  // namespace arrowlab::ode
