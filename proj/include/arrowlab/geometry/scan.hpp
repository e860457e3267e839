#pragma once

// Per-point energy diagnostics over a coordinate grid.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "arrowlab/geometry/pseudotensor.hpp"
#include "arrowlab/geometry/tetrad.hpp"
#include "arrowlab/io.hpp"
#include "arrowlab/parallel.hpp"

namespace arrowlab::geometry {

struct Axis1 {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n = 1;

  double at(std::size_t i) const { return n <= 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (n - 1); }
};

struct GridSpec {
  Axis1 t{1.0, 2.0, 3}, x, y, z;

  std::size_t size() const { return t.n * x.n * y.n * z.n; }

  Point point(std::size_t idx) const {
    const std::size_t iz = idx % z.n;
    idx /= z.n;
    const std::size_t iy = idx % y.n;
    idx /= y.n;
    const std::size_t ix = idx % x.n;
    const std::size_t it = idx / x.n;
    return Point(t.at(it), x.at(ix), y.at(iy), z.at(iz));
  }
};

struct ScanRow {
  Point x;
  bool type_one = false;
  double s0 = std::numeric_limits<double>::quiet_NaN();
  std::array<double, 3> s{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
                          std::numeric_limits<double>::quiet_NaN()};
  DecCheck dec;
  Vec4 tau_row = Vec4::Zero();
  double conservation = 0.0;
};

struct ScanOptions {
  PseudotensorOptions pseudo;
  double conservation_h = 1e-2;
  unsigned threads = 0;
};

inline std::vector<ScanRow> scan_grid(const MetricField& metric, const GridSpec& grid, const ScanOptions& opt = {}) {
  std::vector<ScanRow> rows(grid.size());
  parallel_for(rows.size(), opt.threads, [&](std::size_t i) {
    ScanRow& r = rows[i];
    r.x = grid.point(i);
    const auto b = curvature(metric, r.x, opt.pseudo.h);
    const Mat4 T = stress_energy(b, opt.pseudo.Lambda);
    try {
      const auto d = type_one_decomposition(T, b.g);
      r.type_one = true;
      r.s0 = d.s0;
      r.s = d.s;
      r.dec = dominant_energy_check(d);
    } catch (const DecompositionError&) {
      r.dec = {false, std::numeric_limits<double>::quiet_NaN()};
    }
    r.tau_row = pseudotensor_from_derivatives(b.g, b.dg, T, opt.pseudo.h_p).energy_row();
    r.conservation = conservation_residual(metric, r.x, opt.conservation_h, opt.pseudo);
  });
  return rows;
}

inline std::string scan_csv(const std::vector<ScanRow>& rows) {
  io::CsvWriter w({"t", "x", "y", "z", "s0", "s1", "s2", "s3", "dec_pass", "dec_margin", "tau00", "tau0x", "tau0y",
                   "tau0z", "conservation_residual"});
  for (const auto& r : rows) {
    w.row_begin();
    for (int k = 0; k < 4; ++k) w.field(r.x[k]);
    w.field(r.s0);
    for (double s : r.s) w.field(s);
    w.field(r.dec.pass);
    w.field(r.dec.margin);
    for (int k = 0; k < 4; ++k) w.field(r.tau_row[k]);
    w.field(r.conservation);
    w.row_end();
  }
  return w.str();
}

}  // namespace arrowlab::geometry
