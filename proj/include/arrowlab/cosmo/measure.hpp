#pragma once

// Monte Carlo estimate of how much of the reduced phase space lies within
// defect eps of the time-symmetric set, and the eps-scaling fit.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "arrowlab/cosmo/symmetry.hpp"
#include "arrowlab/parallel.hpp"
#include "arrowlab/rng.hpp"

namespace arrowlab::cosmo {

struct Interval {
  double lo = -1.0;
  double hi = 1.0;

  double half_width() const { return 0.5 * (hi - lo); }
};

/// Axis-aligned sampling box in (a_dot, phi, phi_dot).
struct Box {
  Interval a_dot{-1.0, 1.0};
  Interval phi{-2.0, 2.0};
  Interval phi_dot{-2.0, 2.0};

  void validate() const {
    for (const auto* iv : {&a_dot, &phi, &phi_dot}) {
      if (!(iv->hi > iv->lo) || !std::isfinite(iv->lo) || !std::isfinite(iv->hi)) {
        throw std::invalid_argument("sampling box intervals must satisfy lo < hi");
      }
    }
  }

  Scales scales() const { return {a_dot.half_width(), phi.half_width(), phi_dot.half_width()}; }

  /// Diameter in scale-normalized coordinates, where the box is [-1, 1]^3.
  double normalized_diameter() const { return 2.0 * std::sqrt(3.0); }
};

inline double draw(SampleStream& rng, const Interval& iv) { return rng.uniform(iv.lo, iv.hi); }

struct Sample {
  ReducedPoint point;
  SymmetryReport report;
  // Draws rejected before this point because the constraint had no solution.
  std::size_t redraws = 0;
};

struct FractionRow {
  double epsilon = 0.0;
  double fraction = 0.0;
};

struct MeasureResult {
  std::vector<Sample> samples;
  std::vector<FractionRow> fractions;
  std::size_t redraws = 0;
  std::size_t partial = 0;
};

struct MeasureOptions {
  unsigned threads = 0;
  std::size_t max_redraws = 1000;
};

inline MeasureResult estimate_symmetric_fraction(std::size_t n, const Box& box, const std::vector<double>& epsilons,
                                                 std::uint64_t seed, const Params& p,
                                                 const MeasureOptions& opt = {}) {
  if (n < 100) throw std::invalid_argument("estimate_symmetric_fraction: n must be at least 100");
  box.validate();
  p.validate();
  const Scales sc = box.scales();
  MeasureResult out;
  out.samples.resize(n);
  parallel_for(n, opt.threads, [&](std::size_t i) {
    SampleStream rng(seed, i);
    Sample& s = out.samples[i];
    for (;;) {
      s.point = {draw(rng, box.a_dot), draw(rng, box.phi), draw(rng, box.phi_dot)};
      try {
        solve_constraint_for_a(s.point, p);
        break;
      } catch (const ConstraintError&) {
        if (++s.redraws > opt.max_redraws) throw std::runtime_error("sampling box is mostly inadmissible");
      }
    }
    s.report = symmetry_defect(s.point, p, sc);
  });
  for (const auto& s : out.samples) {
    out.redraws += s.redraws;
    out.partial += s.report.partial ? 1 : 0;
  }
  for (double eps : epsilons) {
    std::size_t hits = 0;
    for (const auto& s : out.samples) hits += s.report.defect < eps ? 1 : 0;
    out.fractions.push_back({eps, static_cast<double>(hits) / static_cast<double>(n)});
  }
  return out;
}

class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScalingFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t rows = 0;
};

/// Least-squares slope of log(fraction) against log(epsilon) over rows with
/// positive fraction.
inline ScalingFit fit_scaling_exponent(const std::vector<FractionRow>& table) {
  std::vector<double> xs, ys;
  for (const auto& r : table) {
    if (r.fraction > 0 && r.epsilon > 0) {
      xs.push_back(std::log(r.epsilon));
      ys.push_back(std::log(r.fraction));
    }
  }
  const std::size_t n = xs.size();
  if (n < 3) throw InsufficientDataError("scaling fit needs at least 3 rows with positive fraction");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 0)) throw InsufficientDataError("scaling fit needs distinct epsilons");
  ScalingFit f;
  f.exponent = sxy / sxx;
  f.intercept = my - f.exponent * mx;
  f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  f.rows = n;
  return f;
}

/// Rows with epsilon <= eps_max; the scaling law is a small-eps statement.
inline std::vector<FractionRow> rows_below(const std::vector<FractionRow>& table, double eps_max) {
  std::vector<FractionRow> out;
  for (const auto& r : table) {
    if (r.epsilon <= eps_max) out.push_back(r);
  }
  return out;
}

}  // namespace arrowlab::cosmo
