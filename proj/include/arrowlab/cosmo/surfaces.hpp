#pragma once

// The two symmetric surfaces: orbits swept out from the even axis (0, phi, 0)
// and the odd axis (0, 0, phi_dot) of the reduced phase space.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string_view>
#include <vector>

#include "arrowlab/cosmo/symmetry.hpp"

namespace arrowlab::cosmo {

enum class Axis { Even, Odd };

inline std::string_view to_string(Axis a) { return a == Axis::Even ? "even" : "odd"; }

inline ReducedPoint axis_point(Axis axis, double value) {
  return axis == Axis::Even ? ReducedPoint{0.0, value, 0.0} : ReducedPoint{0.0, 0.0, value};
}

/// Seeds on each axis and the propagation times at which points are emitted.
struct AxisGrid {
  std::vector<double> even_seeds;  // phi values
  std::vector<double> odd_seeds;   // phi_dot values
  std::vector<double> times;

  static std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    return v;
  }
};

struct SurfacePoint {
  Axis axis = Axis::Even;
  double seed = 0.0;
  double t = 0.0;
  ReducedPoint point;
};

struct Surfaces {
  std::vector<SurfacePoint> even;
  std::vector<SurfacePoint> odd;
  // Seeds dropped because reconstruction or integration failed.
  std::size_t skipped_seeds = 0;
  // Emission times outside the integrable window of their orbit.
  std::size_t skipped_points = 0;
};

inline Surfaces build_symmetric_surfaces(const AxisGrid& grid, const Params& p) {
  p.validate();
  Surfaces out;
  if (grid.times.empty()) return out;
  const auto [tmin, tmax] = std::minmax_element(grid.times.begin(), grid.times.end());
  auto sweep = [&](Axis axis, const std::vector<double>& seeds, std::vector<SurfacePoint>& dst) {
    for (double v : seeds) {
      TwoSidedOrbit orbit;
      try {
        orbit = integrate_orbit(reconstruct(axis_point(axis, v), p), p, std::min(0.0, *tmin), std::max(0.0, *tmax));
      } catch (const std::exception&) {
        ++out.skipped_seeds;
        continue;
      }
      const auto& tr = orbit.trajectory;
      for (double t : grid.times) {
        if (t < tr.t_first() || t > tr.t_last()) {
          ++out.skipped_points;
          continue;
        }
        const Vec4 x = tr.at(t);
        dst.push_back({axis, v, t, {x[1], x[2], x[3]}});
      }
    }
  };
  sweep(Axis::Even, grid.even_seeds, out.even);
  sweep(Axis::Odd, grid.odd_seeds, out.odd);
  return out;
}

/// Singular values (descending) of the centered k-nearest-neighbour patch
/// around points[center].
inline Eigen::Vector3d local_singular_values(const std::vector<SurfacePoint>& points, std::size_t center,
                                             std::size_t k) {
  const auto& c = points[center].point;
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(points.size());
  for (std::size_t j = 0; j < points.size(); ++j) {
    const auto& q = points[j].point;
    const double dx = q.a_dot - c.a_dot, dy = q.phi - c.phi, dz = q.phi_dot - c.phi_dot;
    dist.emplace_back(dx * dx + dy * dy + dz * dz, j);
  }
  k = std::min(k, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  Eigen::MatrixXd patch(k, 3);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& q = points[dist[i].second].point;
    patch.row(static_cast<Eigen::Index>(i)) << q.a_dot, q.phi, q.phi_dot;
  }
  patch.rowwise() -= patch.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(patch);
  Eigen::Vector3d s = Eigen::Vector3d::Zero();
  s.head(std::min<Eigen::Index>(3, svd.singularValues().size())) = svd.singularValues().head(std::min<Eigen::Index>(3, svd.singularValues().size()));
  return s;
}

struct ProbeWindow {
  double t_abs_max = 0.9;
  double seed_lo = 0.33;
  double seed_hi = 1.47;
};

struct DimensionCheck {
  std::size_t probes = 0;
  std::size_t planar = 0;
  double worst_ratio = 0.0;  // max sigma3 / sigma2 over probes

  double planar_fraction() const { return probes == 0 ? 0.0 : static_cast<double>(planar) / probes; }
};

/// Local PCA at every point inside the probe window; a patch is planar when
/// sigma3 < ratio_max * sigma2. Points near the window edges are left out
/// because their neighbourhoods are one-sided.
inline DimensionCheck surface_dimension_check(const std::vector<SurfacePoint>& points, std::size_t k,
                                              double ratio_max = 0.05, const ProbeWindow& w = {}) {
  DimensionCheck out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& q = points[i];
    if (std::abs(q.t) > w.t_abs_max || q.seed < w.seed_lo || q.seed > w.seed_hi) continue;
    const Eigen::Vector3d sv = local_singular_values(points, i, k);
    const double ratio = sv[1] > 0 ? sv[2] / sv[1] : std::numeric_limits<double>::infinity();
    ++out.probes;
    out.planar += ratio < ratio_max ? 1 : 0;
    out.worst_ratio = std::max(out.worst_ratio, ratio);
  }
  return out;
}

}  // namespace arrowlab::cosmo
