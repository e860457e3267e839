#pragma once

// Spacetime metrics with signature (+, -, -, -) on coordinates (t, x, y, z).

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace arrowlab::geometry {

using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;
using Point = Eigen::Vector4d;

class MetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class Family { Minkowski, FlatFLRW, ClosedFLRW, Custom };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::Minkowski: return "minkowski";
    case Family::FlatFLRW: return "flat-flrw";
    case Family::ClosedFLRW: return "closed-flrw";
    case Family::Custom: return "custom";
  }
  return "?";
}

struct MetricField {
  Family family = Family::Custom;
  std::function<Mat4(const Point&)> evaluator;

  Mat4 operator()(const Point& x) const { return evaluator(x); }
};

inline std::string describe(const Point& x) {
  std::ostringstream os;
  os << "(" << x[0] << ", " << x[1] << ", " << x[2] << ", " << x[3] << ")";
  return os.str();
}

/// Throws MetricError unless g is finite, symmetric and has one positive and
/// three negative eigenvalues.
inline void check_lorentzian(const Mat4& g, const Point& x) {
  if (!g.allFinite()) throw MetricError("non-finite metric at " + describe(x));
  const double scale = g.cwiseAbs().maxCoeff();
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw MetricError("asymmetric metric at " + describe(x));
  }
  // Inertia is invariant under congruence; scaling by diag(1/sqrt|g_ii|)
  // makes the test independent of how the coordinates are normalized
  // (a = 1e8 gives g_ii ~ -1e16 next to g_00 = 1).
  Eigen::Vector4d d;
  for (int i = 0; i < 4; ++i) d[i] = g(i, i) != 0.0 ? 1.0 / std::sqrt(std::abs(g(i, i))) : 1.0 / std::sqrt(scale);
  const Mat4 gs = d.asDiagonal() * g * d.asDiagonal();
  const Eigen::SelfAdjointEigenSolver<Mat4> es(gs, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();  // ascending
  const double tiny = 1e-14 * gs.cwiseAbs().maxCoeff();
  if (!(ev[2] < -tiny && ev[3] > tiny)) {
    throw MetricError("metric is not Lorentzian (+,-,-,-) at " + describe(x));
  }
}

inline MetricField minkowski() {
  return {Family::Minkowski, [](const Point&) { return Mat4(Eigen::Vector4d(1, -1, -1, -1).asDiagonal()); }};
}

/// ds^2 = dt^2 - a(t)^2 (dx^2 + dy^2 + dz^2)
inline MetricField flat_flrw(std::function<double(double)> a) {
  return {Family::FlatFLRW, [a = std::move(a)](const Point& x) {
            const double s = a(x[0]);
            return Mat4(Eigen::Vector4d(1, -s * s, -s * s, -s * s).asDiagonal());
          }};
}

/// Closed FLRW in conformally flat (stereographic) spatial coordinates:
/// ds^2 = dt^2 - a(t)^2 (dx^2 + dy^2 + dz^2) / (1 + r^2/4)^2
inline MetricField closed_flrw(std::function<double(double)> a) {
  return {Family::ClosedFLRW, [a = std::move(a)](const Point& x) {
            const double r2 = x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
            const double w = a(x[0]) / (1.0 + 0.25 * r2);
            return Mat4(Eigen::Vector4d(1, -w * w, -w * w, -w * w).asDiagonal());
          }};
}

inline MetricField custom(std::function<Mat4(const Point&)> g) { return {Family::Custom, std::move(g)}; }

/// a(t) = t^p, defined for t > 0.
inline std::function<double(double)> power_law(double p) {
  return [p](double t) {
    if (!(t > 0)) return std::numeric_limits<double>::quiet_NaN();
    return std::pow(t, p);
  };
}

/// Boost with velocity v along x acting on contravariant components:
/// x'^mu = L^mu_nu x^nu.
inline Mat4 boost_x(double v) {
  if (!(std::abs(v) < 1)) throw std::invalid_argument("boost velocity must satisfy |v| < 1");
  const double gam = 1.0 / std::sqrt(1.0 - v * v);
  Mat4 L = Mat4::Identity();
  L(0, 0) = L(1, 1) = gam;
  L(0, 1) = L(1, 0) = -gam * v;
  return L;
}

inline const Mat4& eta() {
  static const Mat4 m = Eigen::Vector4d(1, -1, -1, -1).asDiagonal();
  return m;
}

}  // namespace arrowlab::geometry
