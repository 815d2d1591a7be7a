#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/SVD>

#include "layersafe/certify.hpp"
#include "layersafe/errors.hpp"
#include "support.hpp"

using namespace layersafe;

namespace {

CertifyOptions options(double alpha, VelocityMode mode, int workers = 1) {
  CertifyOptions o;
  o.alpha = alpha;
  o.velocity = mode;
  o.workers = workers;
  return o;
}

Scenario short_case(double horizon) {
  Scenario s = lstest::case_study_scenario();
  s.integrator.horizon = horizon;
  return s;
}

double op_norm(const Mat& A) {
  const Eigen::MatrixXd dense = A;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(dense);
  return svd.singularValues()[0];
}

}  // namespace

TEST(Grid, PointsRunFirstAxisFastest) {
  Grid g{Vec2(0, 0), Vec2(1, 2), {3, 2}};
  ASSERT_EQ(g.size(), 6u);
  EXPECT_EQ(Vec2(g.point(0)), Vec2(0, 0));
  EXPECT_EQ(Vec2(g.point(1)), Vec2(0.5, 0));
  EXPECT_EQ(Vec2(g.point(3)), Vec2(0, 2));
  EXPECT_EQ(Vec2(g.point(5)), Vec2(1, 2));
}

TEST(Grid, Validation) {
  EXPECT_THROW((Grid{Vec2(0, 0), Vec2(0, 1), {3, 3}}.validate()), ConfigError);
  EXPECT_THROW((Grid{Vec2(0, 0), Vec2(1, 1), {1, 3}}.validate()), ConfigError);
  EXPECT_THROW((Grid{Vec2(0, 0), Vec2(1, 1), {3}}.validate()), ConfigError);
}

TEST(Grid, SpecParsing) {
  const auto s = lstest::case_study_scenario();
  const Grid p = parse_grid_spec("pos:40x30", s);
  EXPECT_EQ(p.counts, (std::vector<int>{40, 30}));
  EXPECT_EQ(Vec2(p.lower), s.certify.lower);
  const Grid st = parse_grid_spec("state:3x3x2x2", s, 0.5);
  EXPECT_EQ(st.dims(), 4);
  EXPECT_EQ(st.upper[3], 0.5);
  for (const char* bad : {"pos:40", "pos:4x", "grid:3x3", "state:3x3", "40x40", "pos:ax3"}) {
    EXPECT_THROW(parse_grid_spec(bad, s), ConfigError) << bad;
  }
}

TEST(Certify, GridInsideObstacleIsAllOutside) {
  const auto s = short_case(1.0);
  const Grid g{Vec2(-0.3, 0.1), Vec2(0.1, 0.5), {5, 5}};
  const auto rep = certify_initial_set(s, g, 1.0, options(0.5, VelocityMode::zero));
  EXPECT_EQ(rep.count(Verdict::outside_S_V), 25u);
  for (const auto& p : rep.per_point) {
    EXPECT_FALSE(p.rolled_out);
    EXPECT_LT(p.h0, 0.0);
  }
}

TEST(Certify, ResultsIndependentOfWorkerCount) {
  const auto s = short_case(4.0);
  const Grid g{Vec2(-1.5, -1.0), Vec2(2.0, 1.2), {7, 5}};
  const auto a = certify_initial_set(s, g, 4.0, options(1.0, VelocityMode::zero, 1));
  const auto b = certify_initial_set(s, g, 4.0, options(1.0, VelocityMode::zero, 3));
  ASSERT_EQ(a.per_point.size(), b.per_point.size());
  for (std::size_t i = 0; i < a.per_point.size(); ++i) {
    ASSERT_EQ(a.per_point[i].verdict, b.per_point[i].verdict);
    ASSERT_EQ(a.per_point[i].min_h, b.per_point[i].min_h);
    ASSERT_EQ(a.per_point[i].point, b.per_point[i].point);
  }
  EXPECT_EQ(a.scenario_digest, s.digest());
}

TEST(Certify, SafeAlphaHasNoUnsafeStartInRecurrentSet) {
  const auto s = lstest::case_study_scenario();
  const Grid g{s.certify.lower, s.certify.upper, {12, 10}};
  const auto rep = certify_initial_set(s, g, s.integrator.horizon, options(0.5, VelocityMode::zero, 2));
  EXPECT_EQ(rep.unsafe_in_s_v(), 0u);
  EXPECT_GT(rep.count(Verdict::certified_safe), 0u);
  for (const auto& p : rep.per_point) {
    if (p.verdict == Verdict::certified_safe) {
      EXPECT_TRUE(p.in_s_v);
      EXPECT_GE(p.min_h, -kSafetyTol);
    }
  }
  for (const auto& u : find_unsafe_initial_states(rep)) EXPECT_FALSE(u.in_s_v);
}

TEST(Certify, LargeAlphaWitnessesReplayAtFinerStep) {
  const auto s = lstest::case_study_scenario();
  const Grid g{s.certify.lower, s.certify.upper, {10, 8}};
  const auto rep = certify_initial_set(s, g, s.integrator.horizon, options(5.0, VelocityMode::zero, 2));
  ASSERT_GT(rep.count(Verdict::unsafe_witness), 0u);
  int replayed = 0;
  for (const auto& p : rep.per_point) {
    if (p.verdict != Verdict::unsafe_witness) continue;
    ASSERT_TRUE(p.witness);
    ASSERT_TRUE(p.first_violation_t);
    EXPECT_LT(replay_witness(s, *p.witness), 0.0);
    if (++replayed == 3) break;
  }
  // beta > alpha fails at alpha = 5, so no recurrent set exists
  EXPECT_FALSE(rep.notes.empty());
  EXPECT_TRUE(std::isnan(rep.per_point.front().h_V0));
}

TEST(Certify, DesiredVelocityWitnessesInRecurrentSetBreakTheEnvelope) {
  const auto s = lstest::case_study_scenario();
  const Grid g{s.certify.lower, s.certify.upper, {12, 10}};
  const auto rep = certify_initial_set(s, g, s.integrator.horizon, options(0.5, VelocityMode::desired, 2));
  for (const auto& p : rep.per_point) {
    if (p.verdict == Verdict::unsafe_witness && p.in_s_v) {
      EXPECT_FALSE(p.envelope_holds);
    }
  }
}

TEST(Certify, StateGridTakesVelocityFromLattice) {
  const auto s = short_case(1.0);
  const Grid g = parse_grid_spec("state:2x2x2x2", s, 0.25);
  const auto rep = certify_initial_set(s, g, 1.0, options(0.5, VelocityMode::zero));
  ASSERT_EQ(rep.per_point.size(), 16u);
  for (const auto& p : rep.per_point) EXPECT_EQ(p.x0, p.point);
}

TEST(Oracle, AlwaysTrueReturnsEveryFineSample) {
  const auto s = lstest::case_study_scenario();
  const auto times = brute_force_containment_oracle(s, 0.5, s.initial_state(), whole_space(), 0.5, 1e-4);
  ASSERT_EQ(times.size(), 5000u);
  EXPECT_NEAR(times.front(), 1e-4, 1e-15);
  EXPECT_THROW(brute_force_containment_oracle(s, 0.5, s.initial_state(), whole_space(), 0.5, 5e-4),
               ConfigError);
}

TEST(Oracle, ContainmentGap) {
  EXPECT_EQ(containment_gap({}, {0.1}), 0.0);
  EXPECT_EQ(containment_gap({0.1}, {}), std::numeric_limits<double>::infinity());
  EXPECT_NEAR(containment_gap({0.1, 0.5}, {0.12, 0.45, 0.9}), 0.05, 1e-15);
}

TEST(Lipschitz, LinearFieldApproachesOperatorNormFromBelow) {
  Mat A(4, 4);
  A << 1, 2, 0, -1, 0, -3, 1, 0, 2, 0, 0.5, 1, 0, 1, -1, 4;
  const double norm = op_norm(A);
  Vec lo = Vec::Constant(4, -1), hi = Vec::Constant(4, 1);
  const Grid region{lo, hi, {2, 2, 2, 2}};
  const auto f = [&](const Vec& x) { return Vec(A * x); };
  const double few = estimate_lipschitz(f, region, 50, 1);
  const double many = estimate_lipschitz(f, region, 20000, 1);
  EXPECT_LE(few, norm * (1 + 1e-12));
  EXPECT_LE(many, norm * (1 + 1e-12));
  EXPECT_GE(many, few);
  EXPECT_GE(many, 0.9 * norm);
}

TEST(Lipschitz, ConstantFieldAndDegenerateRegion) {
  const Grid region{Vec2(0, 0), Vec2(1, 1), {2, 2}};
  EXPECT_EQ(estimate_lipschitz([](const Vec&) { return Vec(Vec2(3, 4)); }, region, 100, 2), 0.0);
  const Grid flat{Vec2(0, 0), Vec2(1, 0), {2, 2}};
  EXPECT_THROW(estimate_lipschitz([](const Vec& x) { return x; }, flat, 100, 2), ConfigError);
}

TEST(Lipschitz, ClosedLoopWithInactiveFilter) {
  const auto s = lstest::open_field_scenario();
  const auto pair = s.model();
  const auto law = s.law();
  // filter inactive near the goal: xdot = [vel; -k_d (vel + k_p pos)]
  Mat A = Mat::Zero(4, 4);
  A(0, 2) = A(1, 3) = 1.0;
  A(2, 0) = A(3, 1) = -8.0 * 1.8;
  A(2, 2) = A(3, 3) = -8.0;
  Vec lo(4), hi(4);
  lo << -1, -1, -1, -1;
  hi << 1, 1, 1, 1;
  const Grid region{lo, hi, {2, 2, 2, 2}};
  const auto f = [&](const Vec& x) { return pair.fom_field(x, law.u_of_x(x)); };
  const double est = estimate_lipschitz(f, region, 5000, 4);
  EXPECT_LE(est, op_norm(A) * (1 + 1e-9));
  EXPECT_GE(est, 0.8 * op_norm(A));
}
