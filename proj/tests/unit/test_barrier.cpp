#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "layersafe/barrier.hpp"
#include "layersafe/errors.hpp"

using namespace layersafe;

namespace {

BarrierFn case_barrier() {
  return BarrierFn(ObstacleField({{Vec2(-0.1, 0.3), 0.5}, {Vec2(1.3, -0.3), 0.5}}));
}

std::vector<Vec2> safe_samples(const BarrierFn& b, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> X(-1.5, 2.5), Y(-1.5, 1.5);
  std::vector<Vec2> out;
  while (static_cast<int>(out.size()) < n) {
    const Vec2 z(X(rng), Y(rng));
    if (b.value(z) > 0.0) out.push_back(z);
  }
  return out;
}

}  // namespace

TEST(ObstacleField, RejectsEmptyAndBadRadius) {
  EXPECT_THROW(ObstacleField({}), ConfigError);
  EXPECT_THROW(ObstacleField({{Vec2(0, 0), 0.0}}), ConfigError);
  EXPECT_THROW(ObstacleField({{Vec2(0, 0), -1.0}}), ConfigError);
}

TEST(Barrier, ValueAtDocumentedPoints) {
  const BarrierFn b = case_barrier();
  EXPECT_NEAR(b.value(Vec2(-0.1, 1.3)), 0.5, 1e-15);
  EXPECT_NEAR(b.value(Vec2(0.4, 0.3)), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(b.value(Vec2(-0.1, 0.3)), -0.5);
  EXPECT_EQ(barrier_value(b, Vec2(-0.1, 1.3)), b.value(Vec2(-0.1, 1.3)));
}

TEST(Barrier, NearestPicksActiveObstacle) {
  const BarrierFn b = case_barrier();
  EXPECT_EQ(b.nearest(Vec2(2.0, -0.3)).index, 1u);
  EXPECT_EQ(b.nearest(Vec2(-1.0, 0.3)).index, 0u);
  // equidistant from both centers: lowest index wins
  const BarrierFn pair(ObstacleField({{Vec2(-1, 0), 0.5}, {Vec2(1, 0), 0.5}}));
  EXPECT_EQ(pair.nearest(Vec2(0, 0.5)).index, 0u);
}

TEST(Barrier, GradientAtDocumentedPoint) {
  const BarrierFn b = case_barrier();
  const Vec2 g = b.gradient(Vec2(-0.1, 1.3));
  EXPECT_NEAR(g[0], 0.0, 1e-15);
  EXPECT_NEAR(g[1], 1.0, 1e-15);
}

TEST(Barrier, GradientIsUnitOnRandomSafePoints) {
  const BarrierFn b = case_barrier();
  for (const auto& z : safe_samples(b, 1000, 3)) {
    ASSERT_NEAR(b.gradient(z).norm(), 1.0, 1e-12);
  }
  EXPECT_EQ(b.grad_bound(), 1.0);
}

TEST(Barrier, GradientMatchesCentralDifference) {
  const BarrierFn b = case_barrier();
  const double eps = 1e-6;
  for (const auto& z : safe_samples(b, 200, 5)) {
    const Vec2 fd((b.value(z + Vec2(eps, 0)) - b.value(z - Vec2(eps, 0))) / (2 * eps),
                  (b.value(z + Vec2(0, eps)) - b.value(z - Vec2(0, eps))) / (2 * eps));
    // skip samples straddling the switching surface between obstacles
    if (b.nearest(z + Vec2(eps, eps)).index != b.nearest(z - Vec2(eps, eps)).index) continue;
    ASSERT_NEAR((fd - b.gradient(z)).norm(), 0.0, 1e-7);
  }
}

TEST(Barrier, IsOneLipschitz) {
  const BarrierFn b = case_barrier();
  const auto pts = safe_samples(b, 400, 9);
  for (std::size_t i = 0; i + 1 < pts.size(); i += 2) {
    const double lhs = std::abs(b.value(pts[i]) - b.value(pts[i + 1]));
    ASSERT_LE(lhs, (pts[i] - pts[i + 1]).norm() * (1 + 1e-12));
  }
}

TEST(Barrier, GradientAtCenterIsSingular) {
  const BarrierFn b = case_barrier();
  EXPECT_THROW(b.gradient(Vec2(1.3, -0.3)), SingularGradientError);
}

TEST(Barrier, EstimatedGradBoundIsOne) {
  const BarrierFn b = case_barrier();
  const double c = estimate_grad_bound([&](const Vec2& z) { return b.gradient(z); }, safe_samples(b, 500, 1));
  EXPECT_NEAR(c, 1.0, 1e-12);
}

TEST(CbfCondition, SingleIntegratorLargeCandidatesAllValid) {
  const BarrierFn b = case_barrier();
  const ModelPair rom = double_integrator_pair();
  const auto grid = safe_samples(b, 300, 2);
  std::vector<Vec2> candidates;
  for (int k = 0; k < 16; ++k) {
    const double th = 2 * M_PI * k / 16;
    candidates.emplace_back(50 * std::cos(th), 50 * std::sin(th));
  }
  const auto rep = check_cbf_condition(b, rom, 0.5, grid, candidates);
  EXPECT_EQ(rep.valid, grid.size());
  EXPECT_EQ(rep.invalid, 0u);
  EXPECT_FALSE(rep.note.empty());
}

TEST(CbfCondition, DenseSafeGridFullyValid) {
  const BarrierFn b = case_barrier();
  const ModelPair rom = double_integrator_pair();
  std::vector<Vec2> grid;
  for (int i = 0; grid.size() < 10000; ++i) {
    const Vec2 z(-1.5 + 4.0 * ((i * 0.6180339887) - std::floor(i * 0.6180339887)),
                 -1.5 + 3.0 * ((i * 0.7548776662) - std::floor(i * 0.7548776662)));
    if (b.value(z) > 0.0) grid.push_back(z);
  }
  // v = grad h always makes the condition positive; add a few others
  std::vector<Vec2> candidates = {Vec2(1, 0), Vec2(-1, 0), Vec2(0, 1), Vec2(0, -1)};
  const auto rep = check_cbf_condition(b, rom, 0.5, grid, candidates);
  EXPECT_EQ(rep.valid_fraction(), 1.0);
}

TEST(CbfCondition, EmptyCandidateSetIsInvalidEverywhere) {
  const BarrierFn b = case_barrier();
  const auto rep = check_cbf_condition(b, double_integrator_pair(), 0.5, {Vec2(-1, -1), Vec2(2, 1)}, {});
  EXPECT_EQ(rep.invalid, 2u);
  for (const auto& p : rep.points) {
    EXPECT_FALSE(p.valid);
    EXPECT_EQ(p.best, -std::numeric_limits<double>::infinity());
  }
}
