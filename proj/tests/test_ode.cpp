#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>
#include <sstream>

#include "arrowlab/io.hpp"
#include "arrowlab/ode/events.hpp"
#include "arrowlab/ode/integrate.hpp"
#include "arrowlab/ode/reversal.hpp"

using namespace arrowlab::ode;

namespace {

using V1 = Vec<1>;
using V2 = Vec<2>;

auto exp_field = [](double, const V1& x) { return V1{x[0]}; };
auto clock_field = [](double, const V1&) { return V1{1.0}; };

// H = p^2/2 + (K^2/2) cos(theta) with K = 1.
auto pendulum_field = [](double, const V2& x) { return V2{x[1], 0.5 * std::sin(x[0])}; };
auto damped_field = [](double, const V2& x) { return V2{x[1], -x[0] - 0.1 * x[1]}; };

IntegrateOptions<1> tol1(double tol) {
  IntegrateOptions<1> o;
  o.rtol = o.atol = tol;
  return o;
}

}  // namespace

TEST(Integrate, ZeroFieldIsConstant) {
  auto zero = [](double, const V1&) { return V1{0.0}; };
  const auto r = integrate(zero, StateVector<1>{0.0, {1.0}}, 10.0);
  EXPECT_EQ(r.termination, Termination::Completed);
  for (const auto& s : r.trajectory.samples()) EXPECT_EQ(s.x[0], 1.0);
  EXPECT_EQ(r.trajectory.t_last(), 10.0);
  EXPECT_EQ(r.trajectory.at(3.3)[0], 1.0);
}

TEST(Integrate, ExponentialMatchesClosedForm) {
  const auto r = integrate(exp_field, StateVector<1>{0.0, {1.0}}, 1.0, tol1(1e-10));
  EXPECT_NEAR(r.trajectory.back().x[0], std::numbers::e, 1e-8);
  EXPECT_EQ(r.trajectory.t_last(), 1.0);
}

TEST(Integrate, BackwardRunIsStoredInIncreasingTime) {
  const auto r = integrate(exp_field, StateVector<1>{1.0, {std::numbers::e}}, 0.0, tol1(1e-10));
  const auto& tr = r.trajectory;
  EXPECT_EQ(tr.t_first(), 0.0);
  EXPECT_EQ(tr.t_last(), 1.0);
  EXPECT_NEAR(tr.front().x[0], 1.0, 1e-9);
  for (double t = 0.0; t <= 1.0; t += 0.0137) EXPECT_NEAR(tr.at(t)[0], std::exp(t), 1e-9);
}

TEST(Integrate, PendulumStableEquilibriumStaysPut) {
  const StateVector<2> x0{0.0, {std::numbers::pi, 0.0}};
  const auto r = integrate(pendulum_field, x0, 10.0);
  for (const auto& s : r.trajectory.samples()) {
    EXPECT_NEAR(s.x[0], std::numbers::pi, 1e-12);
    EXPECT_NEAR(s.x[1], 0.0, 1e-12);
  }
}

TEST(Integrate, NonFiniteFieldStopsAtLastValidState) {
  auto blowup = [](double, const V1& x) {
    return x[0] > 100.0 ? V1{std::numeric_limits<double>::quiet_NaN()} : V1{x[0] * x[0]};
  };
  const auto r = integrate(blowup, StateVector<1>{0.0, {1.0}}, 2.0, tol1(1e-10));
  EXPECT_EQ(r.termination, Termination::Singularity);
  EXPECT_LE(r.trajectory.back().x[0], 100.0);
  EXPECT_LT(r.trajectory.t_last(), 1.0);
  // x(t) = 1 / (1 - t)
  EXPECT_NEAR(r.trajectory.back().x[0], 1.0 / (1.0 - r.trajectory.t_last()), 1e-6);
}

TEST(Integrate, StepUnderflowRaisesStiffnessError) {
  auto square = [](double, const V1& x) { return V1{x[0] * x[0]}; };
  auto opt = tol1(1e-10);
  opt.min_step_fraction = 1e-6;
  EXPECT_THROW(integrate(square, StateVector<1>{0.0, {1.0}}, 2.0, opt), StiffnessError);
  opt.underflow_stops = true;
  const auto r = integrate(square, StateVector<1>{0.0, {1.0}}, 2.0, opt);
  EXPECT_EQ(r.termination, Termination::StepUnderflow);
  EXPECT_LT(r.trajectory.t_last(), 1.0);
}

TEST(Integrate, StopFunctionTruncatesAtCrossing) {
  auto opt = tol1(1e-10);
  opt.stop = [](const V1& x) { return 2.0 - x[0]; };
  const auto r = integrate(exp_field, StateVector<1>{0.0, {1.0}}, 5.0, opt);
  EXPECT_EQ(r.termination, Termination::StopEvent);
  EXPECT_NEAR(r.trajectory.t_last(), std::log(2.0), 1e-9);
  EXPECT_NEAR(r.trajectory.back().x[0], 2.0, 1e-9);
}

TEST(Integrate, RejectsNonPositiveTolerance) {
  EXPECT_THROW(integrate(exp_field, StateVector<1>{0.0, {1.0}}, 1.0, tol1(0.0)), std::invalid_argument);
}

TEST(Integrate, IdenticalInputsGiveBitIdenticalTrajectories) {
  const StateVector<2> x0{0.0, {1.0, 0.5}};
  const auto a = integrate(pendulum_field, x0, 25.0);
  const auto b = integrate(pendulum_field, x0, 25.0);
  ASSERT_EQ(a.trajectory.size(), b.trajectory.size());
  for (std::size_t k = 0; k < a.trajectory.size(); ++k) {
    const auto& sa = a.trajectory.samples()[k];
    const auto& sb = b.trajectory.samples()[k];
    EXPECT_EQ(std::memcmp(&sa, &sb, sizeof sa), 0);
  }
}

TEST(Trajectory, QueryOutsideSpanIsRangeError) {
  const auto r = integrate(exp_field, StateVector<1>{0.0, {1.0}}, 1.0);
  EXPECT_THROW(r.trajectory.at(1.5), RangeError);
  EXPECT_THROW(r.trajectory.at(-0.1), RangeError);
  EXPECT_EQ(r.trajectory.interpolation_order(), 4);
}

TEST(Trajectory, RejectsNonMonotoneSamples) {
  std::vector<StateVector<1>> s{{0.0, {1.0}}, {0.0, {2.0}}};
  EXPECT_THROW(Trajectory<1>::from_samples(s), std::invalid_argument);
}

TEST(Resample, LinearTwoPointGetsMidpoint) {
  const auto tr = Trajectory<1>::from_samples({{0.0, {1.0}}, {2.0, {3.0}}});
  EXPECT_EQ(tr.interpolation_order(), 1);
  const auto r = resample_uniform(tr, 3);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r.samples()[1].t, 1.0);
  EXPECT_EQ(r.samples()[1].x[0], 2.0);
}

TEST(Resample, TwoPointsKeepsEndpointsExactly) {
  const auto res = integrate(exp_field, StateVector<1>{0.0, {1.0}}, 1.0);
  const auto r = resample_uniform(res.trajectory, 2);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r.front().x[0], res.trajectory.front().x[0]);
  EXPECT_EQ(r.back().x[0], res.trajectory.back().x[0]);
  EXPECT_EQ(r.back().t, res.trajectory.back().t);
  EXPECT_THROW(resample_uniform(res.trajectory, 1), std::invalid_argument);
}

TEST(Resample, DenseExponentialInterpolationError) {
  const auto res = integrate(exp_field, StateVector<1>{0.0, {1.0}}, 1.0, tol1(1e-10));
  const auto r = resample_uniform(res.trajectory, 101);
  double worst = 0.0;
  for (const auto& s : r.samples()) worst = std::max(worst, std::abs(s.x[0] - std::exp(s.t)));
  // Quartic dense output on steps accepted at 1e-10 local error.
  EXPECT_LT(worst, 1e-8);
}

TEST(Events, SineCrossingsOnClockTrajectory) {
  const auto res = integrate(clock_field, StateVector<1>{0.0, {0.0}}, 7.0);
  const auto ev = find_events(res.trajectory, [](double, const V1& x) { return std::sin(x[0]); });
  ASSERT_EQ(ev.size(), 3u);
  EXPECT_NEAR(ev[0].t, 0.0, 1e-10);
  EXPECT_NEAR(ev[1].t, std::numbers::pi, 1e-10);
  EXPECT_NEAR(ev[2].t, 2 * std::numbers::pi, 1e-10);
  EXPECT_FALSE(ev[1].grazing);
}

TEST(Events, StrictlyPositiveEventHasNoCrossings) {
  const auto res = integrate(clock_field, StateVector<1>{0.0, {0.0}}, 7.0);
  const auto scan = scan_events(res.trajectory, [](double, const V1& x) { return 1.5 + std::sin(x[0]); });
  EXPECT_TRUE(scan.crossings.empty());
  EXPECT_TRUE(scan.near_misses.empty());
}

TEST(Events, CountMatchesAnalyticCrossings) {
  auto osc = [](double, const V2& x) { return V2{x[1], -x[0]}; };
  const auto res = integrate(osc, StateVector<2>{0.0, {0.0, 1.0}}, 30.0);
  const auto ev = find_events(res.trajectory, [](double, const V2& x) { return x[0]; });
  // sin(t) on [0, 30]: zeros at k*pi for k = 0..9.
  ASSERT_EQ(ev.size(), 10u);
  for (std::size_t k = 0; k < ev.size(); ++k) EXPECT_NEAR(ev[k].t, k * std::numbers::pi, 1e-8);
}

TEST(Events, GrazingDoubleRootIsFlagged) {
  auto osc = [](double, const V2& x) { return V2{x[1], -x[0]}; };
  const auto res = integrate(osc, StateVector<2>{0.0, {0.0, 1.0}}, 3.0);
  for (double delta : {1e-9, 1e-7}) {
    // x = sin t crosses 1 - delta twice, close to pi/2.
    const double level = 1.0 - delta;
    const auto ev = find_events(res.trajectory, [&](double, const V2& x) { return x[0] - level; });
    ASSERT_EQ(ev.size(), 2u) << delta;
    EXPECT_TRUE(ev[0].grazing);
    EXPECT_TRUE(ev[1].grazing);
    // Closed-form roots; a state error e moves a root by e / |slope| with
    // slope = sqrt(2 delta), so the time tolerance is scaled by it.
    const double r0 = std::asin(level);
    const double t_tol = 1e-9 / std::sqrt(2 * delta);
    EXPECT_NEAR(ev[0].t, r0, t_tol);
    EXPECT_NEAR(ev[1].t, std::numbers::pi - r0, t_tol);
  }
  // Just missing the level: no crossing, one near miss.
  const auto scan = scan_events(res.trajectory, [](double, const V2& x) { return x[0] - (1.0 + 1e-9); });
  EXPECT_TRUE(scan.crossings.empty());
  ASSERT_EQ(scan.near_misses.size(), 1u);
  EXPECT_NEAR(scan.near_misses[0].t, std::numbers::pi / 2, 1e-4);
}

TEST(Reversal, InvolutionAppliedTwiceIsIdentity) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  const ReversalInvolution<4> R({1, -1, 1, -1});
  for (int k = 0; k < 1000; ++k) {
    const Vec<4> x{u(rng), u(rng), u(rng), u(rng)};
    EXPECT_EQ(R(R(x)), x);
  }
  EXPECT_THROW(ReversalInvolution<2>({1, 0}), std::invalid_argument);
}

TEST(Reversal, PendulumIsTimeReversalInvariant) {
  const ReversalInvolution<2> R({1, -1});
  const double d = check_reversal_property(pendulum_field, R, StateVector<2>{0.0, {1.0, 0.5}}, 10.0);
  EXPECT_LT(d, 1e-6);
}

TEST(Reversal, ZeroHorizonHasZeroDefect) {
  const ReversalInvolution<2> R({1, -1});
  EXPECT_EQ(check_reversal_property(damped_field, R, StateVector<2>{0.0, {1.0, 0.0}}, 0.0), 0.0);
}

TEST(Reversal, DampedOscillatorFailsTheCheck) {
  const ReversalInvolution<2> R({1, -1});
  const double d = check_reversal_property(damped_field, R, StateVector<2>{0.0, {1.0, 0.0}}, 10.0);
  EXPECT_GT(d, 0.01);
}

TEST(Reversal, DefectScalesWithTolerance) {
  const ReversalInvolution<2> R({1, -1});
  for (double tol : {1e-8, 1e-10}) {
    ReversalCheckOptions opt;
    opt.tol = tol;
    const double d = check_reversal_property(pendulum_field, R, StateVector<2>{0.0, {1.0, 0.5}}, 10.0, opt);
    EXPECT_LT(d, 10 * tol) << "tol=" << tol;
  }
}

TEST(Csv, TrajectoryHeaderAndFullPrecision) {
  const auto tr = Trajectory<2>::from_samples({{0.0, {0.1, 1.0 / 3.0}}, {0.5, {2.0, -1e-300}}});
  const std::string csv = arrowlab::io::trajectory_csv(tr);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,c0,c1");
  std::getline(in, line);
  EXPECT_EQ(line, "0,0.10000000000000001,0.33333333333333331");
  // Every printed value parses back to the same double.
  EXPECT_EQ(std::stod("0.33333333333333331"), 1.0 / 3.0);
}
