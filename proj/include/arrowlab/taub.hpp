#pragma once

// Two-sheet constraint of the Taub model,
//
//   H = (sqrt6 p_q + S/sqrt6)(sqrt6 p_q - S/sqrt6) = 6 p_q^2 - S^2/6,
//   S(u, p_u) = sqrt(p_u^2 + (12 pi)^2 e^{6u}),
//
// deparametrized with q as the clock: on the sheet p_q = +-S/6 the reduced
// Hamiltonian is h = -p_q = -+S/6.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "arrowlab/io.hpp"
#include "arrowlab/ode/integrate.hpp"
#include "arrowlab/ode/trajectory.hpp"

namespace arrowlab::taub {

using Vec2 = ode::Vec<2>;

enum class Sheet { Plus, Minus };

inline std::string_view to_string(Sheet s) { return s == Sheet::Plus ? "plus" : "minus"; }
inline Sheet opposite(Sheet s) { return s == Sheet::Plus ? Sheet::Minus : Sheet::Plus; }
inline double sign(Sheet s) { return s == Sheet::Plus ? 1.0 : -1.0; }

/// p_q = 0 is on neither sheet.
class SheetError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct TaubState {
  double q = 0.0;
  double u = 0.0;
  double p_q = 0.0;
  double p_u = 0.0;
};

/// 12 pi e^{3u}; its square is the potential term of S^2.
inline double wall(double u) { return 12.0 * std::numbers::pi * std::exp(3.0 * u); }

inline double S(double u, double p_u) { return std::hypot(p_u, wall(u)); }

inline double hamiltonian(const TaubState& s) {
  const double r6 = std::sqrt(6.0);
  const double sv = S(s.u, s.p_u);
  return (r6 * s.p_q + sv / r6) * (r6 * s.p_q - sv / r6);
}

inline double sheet_solve(double u, double p_u, Sheet sheet) { return sign(sheet) * S(u, p_u) / 6.0; }

inline TaubState on_shell(double q, double u, double p_u, Sheet sheet) {
  return {q, u, sheet_solve(u, p_u, sheet), p_u};
}

struct SheetResidual {
  double residual = 0.0;  // |H| / S^2
  Sheet sheet = Sheet::Plus;
};

inline SheetResidual sheet_residual(const TaubState& s) {
  if (s.p_q == 0.0 || !std::isfinite(s.p_q)) {
    throw SheetError("p_q = 0 lies on neither sheet (off-shell by S/6)");
  }
  const double sv = S(s.u, s.p_u);
  return {std::abs(hamiltonian(s)) / (sv * sv), s.p_q > 0 ? Sheet::Plus : Sheet::Minus};
}

inline double reduced_hamiltonian(const Vec2& x, Sheet sheet) { return -sign(sheet) * S(x[0], x[1]) / 6.0; }

/// (u, p_u)' = (dh/dp_u, -dh/du).
struct ReducedField {
  Sheet sheet = Sheet::Plus;

  Vec2 operator()(double, const Vec2& x) const {
    const double w = wall(x[0]);
    const double sv = std::hypot(x[1], w);
    const double sg = sign(sheet);
    return {-sg * x[1] / (6.0 * sv), sg * w * w / (2.0 * sv)};
  }
};

struct TaubTrajectory {
  ode::Trajectory<2> path;  // x = (u, p_u) over q
  Sheet sheet = Sheet::Plus;

  std::vector<TaubState> states() const {
    std::vector<TaubState> out;
    out.reserve(path.size());
    for (const auto& s : path.samples()) out.push_back(on_shell(s.t, s.x[0], s.x[1], sheet));
    return out;
  }
};

/// Integrates from q0 to q0 + q_span (either direction); tol is the local
/// step tolerance.
inline TaubTrajectory reduced_evolution(const Vec2& x0, Sheet sheet, double q_span, double tol, double q0 = 0.0) {
  if (!(tol > 0)) throw std::invalid_argument("reduced_evolution: tol must be positive");
  ode::IntegrateOptions<2> opt;
  opt.rtol = tol;
  opt.atol = tol;
  auto res = ode::integrate(ReducedField{sheet}, ode::StateVector<2>{q0, x0}, q0 + q_span, opt);
  if (res.termination != ode::Termination::Completed) {
    throw ode::StiffnessError(std::string("taub evolution ended early: ") + ode::to_string(res.termination));
  }
  return {std::move(res.trajectory), sheet};
}

/// Twin on the opposite sheet: (q, u, p_q, p_u) -> (-q, u, -p_q, p_u) per
/// sample, order reversed. On-shell p_q flips exactly since S is unchanged.
inline TaubTrajectory twin_map(const TaubTrajectory& t) { return {t.path.time_reversed(), opposite(t.sheet)}; }

/// max over consecutive samples of the mismatch between the next sample and
/// the sheet flow started from the previous one, relative to max(1, |x|).
inline double evolution_residual(const TaubTrajectory& t, double tol) {
  const auto& s = t.path.samples();
  ode::IntegrateOptions<2> opt;
  opt.rtol = tol * 1e-2;
  opt.atol = tol * 1e-2;
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    const auto r = ode::integrate(ReducedField{t.sheet}, s[k], s[k + 1].t, opt);
    const Vec2 y = r.trajectory.back().x;
    const double scale = std::max({1.0, std::abs(s[k + 1].x[0]), std::abs(s[k + 1].x[1])});
    worst = std::max(worst, std::max(std::abs(y[0] - s[k + 1].x[0]), std::abs(y[1] - s[k + 1].x[1])) / scale);
  }
  return worst;
}

/// max |h(q) - h(q0)| / |h(q0)| over the samples.
inline double hamiltonian_drift(const TaubTrajectory& t) {
  const auto& s = t.path.samples();
  const double h0 = reduced_hamiltonian(s.front().x, t.sheet);
  double worst = 0.0;
  for (const auto& p : s) worst = std::max(worst, std::abs(reduced_hamiltonian(p.x, t.sheet) - h0) / std::abs(h0));
  return worst;
}

inline std::string taub_csv(const TaubTrajectory& t) {
  io::CsvWriter w({"q", "u", "p_u", "p_q", "branch", "H_residual"});
  for (const auto& s : t.states()) {
    w.row_begin();
    w.field(s.q);
    w.field(s.u);
    w.field(s.p_u);
    w.field(s.p_q);
    w.field(to_string(t.sheet));
    w.field(sheet_residual(s).residual);
    w.row_end();
  }
  return w.str();
}

}  // namespace arrowlab::taub
