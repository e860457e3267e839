#pragma once

// Type I (Segre [1,111]) decomposition of a symmetric stress-energy tensor,
//   T_mn = s0 V0_m V0_n + sum_i s_i Vi_m Vi_n,
// with {V0, Vi} a g-orthonormal tetrad, V0 timelike.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "arrowlab/geometry/metric.hpp"

namespace arrowlab::geometry {

/// T is not Type I (complex or defective spectrum, or no timelike eigenvector).
class DecompositionError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct TetradDecomposition {
  double s0 = 0.0;
  std::array<double, 3> s{};
  Vec4 V0 = Vec4::UnitX();          // contravariant components
  std::array<Vec4, 3> V{};          // contravariant components
  Mat4 g = Mat4::Identity();

  /// sum of s_a (g V_a)(g V_a)^T, lower indices
  Mat4 reconstruct() const {
    const Vec4 l0 = g * V0;
    Mat4 T = s0 * l0 * l0.transpose();
    for (int i = 0; i < 3; ++i) {
      const Vec4 li = g * V[i];
      T += s[i] * li * li.transpose();
    }
    return T;
  }

  /// max |g(V_a, V_b) - eta_ab|
  double orthonormality_error() const {
    Eigen::Matrix4d E;
    E.col(0) = V0;
    for (int i = 0; i < 3; ++i) E.col(i + 1) = V[i];
    return (E.transpose() * g * E - eta()).cwiseAbs().maxCoeff();
  }
};

struct DecompositionOptions {
  // Relative tolerance for treating eigenvalues as equal or imaginary parts
  // as zero.
  double tol = 1e-7;
};

/// Solves T^m_n V^n = lambda V^m with T^m_n = g^mk T_kn. Degenerate
/// eigenspaces get a g-Gram-Schmidt basis from the coordinate axes e0..e3
/// projected in index order; V0^0 > 0; spacelike legs are ordered so that leg
/// i is dominated by spatial axis i (positive component).
inline TetradDecomposition type_one_decomposition(const Mat4& T, const Mat4& g,
                                                  const DecompositionOptions& opt = {}) {
  if (!T.allFinite()) throw DecompositionError("non-finite stress-energy tensor");
  if ((T - T.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, T.cwiseAbs().maxCoeff())) {
    throw DecompositionError("stress-energy tensor is not symmetric");
  }
  check_lorentzian(g, Point::Zero());
  const Mat4 g_inv = g.inverse();
  const Mat4 M = g_inv * T;
  const double scale = std::max(M.cwiseAbs().maxCoeff(), 1e-300);

  const Eigen::EigenSolver<Mat4> es(M, false);
  std::vector<double> lambdas;
  for (int i = 0; i < 4; ++i) {
    const auto ev = es.eigenvalues()[i];
    if (std::abs(ev.imag()) > opt.tol * scale) {
      throw DecompositionError("not Type I: complex eigenvalue pair of T^m_n");
    }
    lambdas.push_back(ev.real());
  }
  std::sort(lambdas.begin(), lambdas.end());

  // Cluster equal eigenvalues.
  std::vector<std::pair<double, int>> clusters;  // (mean, multiplicity)
  for (double l : lambdas) {
    if (!clusters.empty() && std::abs(l - clusters.back().first) <= opt.tol * scale) {
      auto& c = clusters.back();
      c.first = (c.first * c.second + l) / (c.second + 1);
      ++c.second;
    } else {
      clusters.emplace_back(l, 1);
    }
  }

  auto gdot = [&](const Vec4& a, const Vec4& b) { return a.dot(g * b); };

  struct Leg {
    Vec4 v;
    double lambda;
  };
  std::vector<Leg> timelike, spacelike;
  for (const auto& [lambda, mult] : clusters) {
    const Mat4 A = M - lambda * Mat4::Identity();
    Eigen::JacobiSVD<Mat4> svd(A, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int null_dim = 0;
    for (int i = 0; i < 4; ++i) null_dim += sv[i] <= opt.tol * scale ? 1 : 0;
    if (null_dim < mult) throw DecompositionError("not Type I: defective eigenspace (null eigenvector)");
    const Eigen::Matrix<double, 4, Eigen::Dynamic> B = svd.matrixV().rightCols(null_dim);
    // g-orthogonal projector onto span(B).
    const Eigen::MatrixXd gram = B.transpose() * g * B;
    // Relative to the Hadamard bound, so badly scaled coordinates are fine.
    double hadamard = 1.0;
    for (int i = 0; i < null_dim; ++i) hadamard *= gram.row(i).norm();
    if (!(std::abs(gram.determinant()) > 1e-14 * hadamard)) {
      throw DecompositionError("not Type I: eigenspace is degenerate (null) with respect to g");
    }
    const Mat4 P = B * gram.inverse() * B.transpose() * g;
    std::vector<Vec4> basis;
    for (int e = 0; e < 4 && static_cast<int>(basis.size()) < null_dim; ++e) {
      Vec4 v = P.col(e);
      const double n0 = v.norm();
      if (n0 <= 1e-12) continue;
      for (const auto& u : basis) v -= gdot(v, u) / gdot(u, u) * u;
      if (v.norm() <= 1e-8 * n0) continue;
      const double q = gdot(v, v);
      // Null means g(v, v) cancels against the size of its terms.
      if (std::abs(q) <= 1e-12 * v.cwiseAbs().dot(g.cwiseAbs() * v.cwiseAbs())) {
        throw DecompositionError("not Type I: null vector in eigenspace");
      }
      v /= std::sqrt(std::abs(q));
      basis.push_back(v);
    }
    if (static_cast<int>(basis.size()) != null_dim) {
      throw DecompositionError("eigenspace basis construction failed");
    }
    for (const auto& v : basis) (gdot(v, v) > 0 ? timelike : spacelike).push_back({v, lambda});
  }
  if (timelike.size() != 1 || spacelike.size() != 3) {
    throw DecompositionError("not Type I: no unique timelike eigenvector");
  }

  TetradDecomposition d;
  d.g = g;
  d.V0 = timelike[0].v[0] < 0 ? Vec4(-timelike[0].v) : timelike[0].v;
  d.s0 = timelike[0].lambda;

  std::array<int, 3> perm{0, 1, 2}, best = perm;
  double best_score = -1.0;
  do {
    double score = 0.0;
    for (int i = 0; i < 3; ++i) score += std::abs(spacelike[perm[i]].v[i + 1]);
    if (score > best_score + 1e-12) {
      best_score = score;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (int i = 0; i < 3; ++i) {
    const auto& leg = spacelike[best[i]];
    d.V[i] = leg.v[i + 1] < 0 ? Vec4(-leg.v) : leg.v;
    d.s[i] = -leg.lambda;
  }
  return d;
}

struct DecCheck {
  bool pass = false;
  double margin = 0.0;
};

/// Dominant energy condition: s0 >= 0 and |s_i| <= s0. `rel_tol` absorbs
/// rounding for tensors on the boundary (e.g. a scalar field with phi = 0,
/// where rho = p exactly).
inline DecCheck dominant_energy_check(const TetradDecomposition& d, double rel_tol = 1e-12) {
  double m = d.s0;
  double scale = std::abs(d.s0);
  for (double s : d.s) {
    m = std::min(m, d.s0 - std::abs(s));
    scale = std::max(scale, std::abs(s));
  }
  return {m >= -rel_tol * scale, m};
}

struct MomentumCheck {
  bool p0_nonneg = false;
  bool causal = false;
};

/// For an energy-flux row tau^{0 mu} in an orthonormal frame: tau^00 >= 0 and
/// (tau^00)^2 - sum_i (tau^0i)^2 >= 0.
inline MomentumCheck momentum_condition_check(const Vec4& row, double rel_tol = 1e-12) {
  const double spatial = row.tail<3>().squaredNorm();
  const double scale = std::max(row[0] * row[0], spatial);
  return {row[0] >= -rel_tol * std::sqrt(scale), row[0] * row[0] - spatial >= -rel_tol * scale};
}

/// Perfect fluid T_mn = (rho + p) u_m u_n - p g_mn for a unit timelike u^m.
inline Mat4 perfect_fluid(double rho, double p, const Vec4& u, const Mat4& g) {
  const Vec4 ul = g * u;
  return (rho + p) * ul * ul.transpose() - p * g;
}

/// Components of a lower-index tensor in the frame x' = L x.
inline Mat4 transform_lower(const Mat4& T, const Mat4& L) {
  const Mat4 Li = L.inverse();
  return Li.transpose() * T * Li;
}

}  // namespace arrowlab::geometry
