#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <random>

#include "arrowlab/geometry/curvature.hpp"
#include "arrowlab/geometry/tetrad.hpp"
#include "arrowlab/orientation.hpp"
#include "oracles/cycles.hpp"

using namespace arrowlab::orientation;
using oracle::enumerate_cycles;

namespace {

Complex random_connected(std::mt19937_64& rng, std::size_t n, std::size_t extra, double flip_prob) {
  Complex c;
  c.cells = n;
  std::bernoulli_distribution flip(flip_prob);
  for (std::size_t v = 1; v < n; ++v) {
    std::uniform_int_distribution<std::size_t> pick(0, v - 1);
    c.add_edge(pick(rng), v, flip(rng));
  }
  std::uniform_int_distribution<std::size_t> any(0, n - 1);
  for (std::size_t k = 0; k < extra; ++k) {
    const std::size_t i = any(rng), j = any(rng);
    try {
      c.add_edge(i, j, flip(rng));
    } catch (const std::invalid_argument&) {
    }
  }
  return c;
}

void expect_consistent_signs(const Complex& c, const Assignment& a) {
  ASSERT_TRUE(a.consistent);
  ASSERT_EQ(a.sign.size(), c.cells);
  for (const auto& e : c.edges) {
    EXPECT_EQ(a.sign[e.i], e.flip ? -a.sign[e.j] : a.sign[e.j]) << e.i << "-" << e.j;
  }
}

}  // namespace

TEST(Orientation, PlainRingIsConsistent) {
  const auto c = ring(8);
  for (int root_sign : {1, -1}) {
    const auto a = assign_orientation(c, 3, root_sign);
    expect_consistent_signs(c, a);
    for (int s : a.sign) EXPECT_EQ(s, root_sign);
  }
}

TEST(Orientation, MobiusRingReturnsWholeRingAsWitness) {
  const auto c = ring(8, {5});
  const auto a = assign_orientation(c, 0);
  EXPECT_FALSE(a.consistent);
  EXPECT_TRUE(a.sign.empty());
  ASSERT_EQ(a.witness_cycle.size(), 8u);
  EXPECT_EQ(a.witness_cycle.front(), 0u);
  EXPECT_EQ(flip_parity(c, a.witness_cycle), 1u);
  auto sorted = a.witness_cycle;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(Orientation, TwoFlipsCancel) {
  const auto c = ring(8, {1, 6});
  const auto a = assign_orientation(c, 0);
  expect_consistent_signs(c, a);
  EXPECT_EQ(a.sign[0], 1);
  EXPECT_EQ(a.sign[2], -1);
  EXPECT_EQ(a.sign[7], 1);
}

TEST(Orientation, FlippedSelfLoopIsAnOddCycle) {
  const auto c = build_complex("cell 0\ncell 1\nedge 0 1 flip=0\nedge 1 1 flip=1\n");
  const auto a = assign_orientation(c, 0);
  EXPECT_FALSE(a.consistent);
  EXPECT_EQ(a.witness_cycle, std::vector<std::size_t>{1});
}

TEST(Orientation, WitnessIsShortestAndTieBrokenBySmallestCell) {
  // Two odd triangles {2,3,4} and {5,6,7} joined to a long odd ring through 0.
  Complex c;
  c.cells = 8;
  c.add_edge(0, 1, false);
  c.add_edge(1, 2, false);
  c.add_edge(2, 3, false);
  c.add_edge(3, 4, true);
  c.add_edge(4, 2, false);
  c.add_edge(4, 5, false);
  c.add_edge(5, 6, true);
  c.add_edge(6, 7, false);
  c.add_edge(7, 5, false);
  const auto a = assign_orientation(c, 0);
  ASSERT_FALSE(a.consistent);
  EXPECT_EQ(a.witness_cycle, (std::vector<std::size_t>{2, 3, 4}));
}

TEST(Orientation, DisconnectedComplexIsRejected) {
  Complex c;
  c.cells = 4;
  c.add_edge(0, 1, false);
  c.add_edge(2, 3, false);
  EXPECT_THROW(assign_orientation(c, 0), ConnectivityError);
  EXPECT_THROW(assign_orientation(ring(4), 9), std::out_of_range);
  EXPECT_THROW(assign_orientation(ring(4), 0, 0), std::invalid_argument);
}

TEST(Orientation, MatchesExhaustiveCycleParity) {
  std::mt19937_64 rng(2024);
  int inconsistent = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = 2 + trial % 11;  // up to 12 cells
    const std::size_t extra = trial % 7;
    const auto c = random_connected(rng, n, extra, trial % 3 == 0 ? 0.1 : 0.35);
    const auto info = enumerate_cycles(c);
    const auto a = assign_orientation(c, trial % n);
    ASSERT_EQ(a.consistent, !info.any_odd) << "trial " << trial;
    if (a.consistent) {
      expect_consistent_signs(c, a);
    } else {
      ++inconsistent;
      EXPECT_EQ(flip_parity(c, a.witness_cycle), 1u) << "trial " << trial;
      EXPECT_EQ(a.witness_cycle.size(), info.min_odd_length) << "trial " << trial;
      auto u = a.witness_cycle;
      std::sort(u.begin(), u.end());
      EXPECT_TRUE(std::adjacent_find(u.begin(), u.end()) == u.end()) << "witness repeats a cell";
    }
  }
  EXPECT_GT(inconsistent, 50);
  EXPECT_LT(inconsistent, 350);
}

TEST(Orientation, RootSignFlipNegatesEverySign) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = random_connected(rng, 10, 0, 0.5);  // trees are always consistent
    const auto p = assign_orientation(c, 4, 1);
    const auto m = assign_orientation(c, 4, -1);
    ASSERT_TRUE(p.consistent);
    for (std::size_t i = 0; i < c.cells; ++i) EXPECT_EQ(p.sign[i], -m.sign[i]);
  }
}

TEST(BuildComplex, RingDescriptor) {
  const auto c = build_complex("ring 4\n");
  EXPECT_EQ(c.cells, 4u);
  ASSERT_EQ(c.edges.size(), 4u);
  for (const auto& e : c.edges) EXPECT_FALSE(e.flip);
  const auto f = build_complex("# comment\nring 5 flips=0,3\n");
  EXPECT_TRUE(f.edges[0].flip);
  EXPECT_FALSE(f.edges[1].flip);
  EXPECT_TRUE(f.edges[3].flip);
}

TEST(BuildComplex, MobiusInTime) {
  const auto c = build_complex("grid 3 3 periodic_t=1 flip_t=1\n");
  EXPECT_EQ(c.cells, 9u);
  EXPECT_EQ(c.edges.size(), 12u + 3u);
  const auto a = assign_orientation(c, 0);
  EXPECT_FALSE(a.consistent);
  EXPECT_EQ(flip_parity(c, a.witness_cycle), 1u);
  // Periodic without flip is a cylinder and orientable.
  EXPECT_TRUE(assign_orientation(build_complex("grid 3 3 periodic_t=1 periodic_x=1"), 0).consistent);
}

TEST(BuildComplex, ExplicitListRoundTrips) {
  const std::string text = "cell 0\ncell 1\ncell 2\nedge 0 1 flip=1\nedge 1 2 flip=0\n";
  const auto c = build_complex(text);
  EXPECT_EQ(to_text(c), text);
}

TEST(BuildComplex, MalformedDescriptorsReportLine) {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      build_complex(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("cell 0\ncell 1\nedge 0 1 flip=0\nedge 1 0 flip=1\n"), 4u);  // duplicate edge
  EXPECT_EQ(line_of("cell 0\nedge 0 1 flip=0\n"), 2u);
  EXPECT_EQ(line_of("cell 0\ncell 1\nedge 0 1 flip=2\n"), 3u);
  EXPECT_EQ(line_of("cell 0\ncell 0\n"), 2u);
  EXPECT_EQ(line_of("cell 0\n\nbogus 1\n"), 3u);
  EXPECT_EQ(line_of("ring 2\n"), 1u);
  EXPECT_EQ(line_of("ring 4 flips=4\n"), 1u);
  EXPECT_EQ(line_of("grid 3 3 flip_t=1\n"), 1u);
  EXPECT_EQ(line_of("ring 4\ncell 0\n"), 2u);
  EXPECT_EQ(line_of("cell -1\n"), 1u);
  EXPECT_GT(line_of("cell 0\ncell 2\n"), 0u);
  EXPECT_GT(line_of(""), 0u);
}

TEST(LabelCones, FollowsTheField) {
  const auto c = ring(6);
  std::vector<Eigen::Vector4d> up(6, Eigen::Vector4d(1, 0.2, 0, 0));
  const auto plus = label_cones(assign_orientation(c, 0, 1), up);
  const auto minus = label_cones(assign_orientation(c, 0, -1), up);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(plus[i], Lobe::Upper);
    EXPECT_EQ(minus[i], Lobe::Lower);
  }
}

TEST(LabelCones, FlippedFieldOnFlippedEdgesStaysUniform) {
  // A field that itself reverses across the flipped edges: after orientation
  // the oriented field is continuous, so every cell gets the same lobe.
  const auto c = ring(6, {1, 4});
  const auto a = assign_orientation(c, 0);
  std::vector<Eigen::Vector4d> field;
  for (std::size_t i = 0; i < 6; ++i) field.emplace_back(a.sign[i] * 2.0, 0.1, 0, 0);
  for (auto l : label_cones(a, field)) EXPECT_EQ(l, Lobe::Upper);
}

TEST(LabelCones, RefusesInconsistentOrientation) {
  const auto c = ring(5, {0});
  const auto a = assign_orientation(c, 0);
  std::vector<Eigen::Vector4d> f(5, Eigen::Vector4d(1, 0, 0, 0));
  EXPECT_THROW(label_cones(a, f), std::logic_error);
}

TEST(LabelCones, FlrwGridFromTetradLegIsUniform) {
  using namespace arrowlab::geometry;
  const auto metric = closed_flrw(power_law(2.0 / 3.0));
  const auto c = build_complex("grid 4 5\n");
  std::vector<Eigen::Vector4d> field;
  for (std::size_t it = 0; it < 5; ++it) {
    for (std::size_t ix = 0; ix < 4; ++ix) {
      const Point x(1.0 + 0.3 * it, -0.4 + 0.25 * ix, 0.1, -0.2);
      const auto b = curvature(metric, x, 1e-3);
      const auto d = type_one_decomposition(stress_energy(b, 0.0), b.g);
      field.push_back(d.V0);
    }
  }
  for (int root_sign : {1, -1}) {
    const auto labels = label_cones(assign_orientation(c, 7, root_sign), field);
    for (auto l : labels) EXPECT_EQ(l, root_sign > 0 ? Lobe::Upper : Lobe::Lower);
  }
}

TEST(Orientation, JsonResult) {
  const auto c = ring(4, {2});
  const auto j = to_json(c, assign_orientation(c, 0));
  EXPECT_FALSE(j["consistent"].get<bool>());
  EXPECT_EQ(j["witness_length"].get<std::size_t>(), 4u);
  const auto k = to_json(ring(4), assign_orientation(ring(4), 0));
  EXPECT_EQ(k["signs"].size(), 4u);
}
