#pragma once

// tau_0^n of the canonical pseudotensor with the Lagrangian derivatives taken
// by forward-mode dual numbers instead of finite differences.

#include <array>
#include <cmath>
#include <numbers>

#include "arrowlab/geometry/curvature.hpp"

namespace oracle {

using arrowlab::geometry::Mat4;
using arrowlab::geometry::MatGradient;
using arrowlab::geometry::Vec4;

// Forward-mode dual number: value plus one directional derivative.
struct Dual {
  double v = 0, d = 0;
};
inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.v * b.d + a.d * b.v}; }
inline Dual operator*(double s, Dual a) { return {s * a.v, s * a.d}; }

// L = sqrt(-g) g^ik (G^m_il G^l_km - G^l_ik G^m_lm), written out
// independently of the library, with the derivative slots carried as duals.
inline Dual lagrangian_dual(const Mat4& g, const std::array<std::array<std::array<Dual, 4>, 4>, 4>& dg) {
  const Mat4 gi = g.inverse();
  Dual G[4][4][4];
  for (int l = 0; l < 4; ++l)
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n) {
        Dual s;
        for (int k = 0; k < 4; ++k) s = s + (0.5 * gi(l, k)) * (dg[m][k][n] + dg[n][k][m] - dg[k][m][n]);
        G[l][m][n] = s;
      }
  Dual L;
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k)
      for (int l = 0; l < 4; ++l)
        for (int m = 0; m < 4; ++m) L = L + gi(i, k) * (G[m][i][l] * G[l][k][m] - G[l][i][k] * G[m][l][m]);
  return std::sqrt(-g.determinant()) * L;
}

// tau_0^n via exact forward-mode derivatives of L.
inline Vec4 tau_row_dual(const Mat4& g, const MatGradient& dg, const Mat4& T) {
  std::array<std::array<std::array<Dual, 4>, 4>, 4> base;
  for (int n = 0; n < 4; ++n)
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) base[n][a][b] = {dg[n](a, b), 0.0};
  const double L = lagrangian_dual(g, base).v;
  const double sg = std::sqrt(-g.determinant());
  const Mat4 Tmix = T * g.inverse();
  Vec4 row;
  for (int n = 0; n < 4; ++n) {
    // Direction: move every slot g_ab,n by g_ab,0, i.e. sum_ab dL/dg_ab,n g_ab,0.
    auto dir = base;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) dir[n][a][b].d = dg[0](a, b);
    const double C = lagrangian_dual(g, dir).d;
    row[n] = sg * Tmix(0, n) + ((n == 0 ? L : 0.0) - C) / (16 * std::numbers::pi);
  }
  return row;
}

}  // namespace oracle
