#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "layersafe/controller.hpp"
#include "layersafe/dynamics.hpp"
#include "layersafe/errors.hpp"
#include "support.hpp"

using namespace layersafe;

namespace {

// u = -k vel; reports a zero safe velocity so e_dot = vel.
class DampingLaw final : public ClosedLoop {
 public:
  explicit DampingLaw(double k) : k_(k) {}
  LawOutput evaluate(const Vec& x) const override {
    LawOutput out;
    out.u = -k_ * x.tail(2);
    out.z_dot_d = Vec::Zero(2);
    out.z_dot_s = Vec::Zero(2);
    out.h = 1.0;
    out.grad_h = Vec::Zero(2);
    return out;
  }

 private:
  double k_;
};

class BlowUpLaw final : public ClosedLoop {
 public:
  LawOutput evaluate(const Vec& x) const override {
    LawOutput out;
    out.u = Vec::Constant(2, 1e300 * (1.0 + x.squaredNorm()));
    out.z_dot_d = Vec::Zero(2);
    out.z_dot_s = Vec::Zero(2);
    out.h = 1.0;
    out.grad_h = Vec::Zero(2);
    return out;
  }
};

// unit thrust along x1 until x1 reaches c, then unit braking
class BangLaw final : public ClosedLoop {
 public:
  BangLaw(double c, bool report_mode) : c_(c), report_(report_mode) {}
  LawOutput evaluate(const Vec& x) const override { return evaluate_in_mode(x, x[0] < c_ ? 0 : 1); }
  LawOutput evaluate_in_mode(const Vec& /*x*/, int mode) const override {
    LawOutput out;
    out.u = Vec::Zero(2);
    out.u[0] = mode == 0 ? 1.0 : -1.0;
    out.z_dot_d = Vec::Zero(2);
    out.z_dot_s = Vec::Zero(2);
    out.h = 1.0;
    out.grad_h = Vec::Zero(2);
    return out;
  }
  int mode(const Vec& x) const override { return report_ ? (x[0] < c_ ? 0 : 1) : -1; }

 private:
  double c_;
  bool report_;
};

Vec state(double a, double b, double c, double d) {
  Vec x(4);
  x << a, b, c, d;
  return x;
}

}  // namespace

TEST(DoubleIntegrator, ZeroInputFieldMovesPositionOnly) {
  const ModelPair p = double_integrator_pair();
  const Vec dx = p.fom_field(state(0, 0, 1, 2), Vec::Zero(2));
  EXPECT_EQ(dx, state(1, 2, 0, 0));
}

TEST(DoubleIntegrator, ProjectionsReadCoordinates) {
  const ModelPair p = double_integrator_pair();
  const Vec x = state(0, 0, 1, 2);
  EXPECT_EQ(p.project_input(x), Vec2(1, 2));
  EXPECT_EQ(p.project_state(x), Vec2(0, 0));
}

TEST(DoubleIntegrator, RelativeDegreeAtDocumentedPoint) {
  const ModelPair p = double_integrator_pair();
  const Vec x = state(0.3, -0.1, 0.5, 0.5);
  const Vec u = Vec2(1, -1);
  const Vec lhs = p.project_state_jacobian(x) * p.fom_field(x, u);
  EXPECT_EQ(lhs, Vec2(0.5, 0.5));
  EXPECT_EQ(p.rom_field(p.project_state(x), p.project_input(x)), Vec2(0.5, 0.5));
}

TEST(DoubleIntegrator, RelativeDegreeResidualIsExactlyZero) {
  const ModelPair p = double_integrator_pair();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-10, 10);
  for (int i = 0; i < 1000; ++i) {
    const Vec x = state(U(rng), U(rng), U(rng), U(rng));
    const Vec u = Vec2(U(rng), U(rng));
    ASSERT_EQ(relative_degree_residual(p, x, u), 0.0);
  }
}

TEST(DoubleIntegrator, DimensionMismatchIsConfigError) {
  ModelDims d;
  d.fom_state = 6;
  EXPECT_THROW(double_integrator_pair(d), ConfigError);
}

TEST(IntegratorConfig, Validation) {
  IntegratorConfig c;
  c.dt = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.dt = 0.1;
  c.horizon = 0.05;
  EXPECT_THROW(c.validate(), ConfigError);
  c.horizon = 1.0;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.steps(), 10u);
}

TEST(Integrate, EquilibriumStaysPut) {
  const ModelPair p = double_integrator_pair();
  const DampingLaw law(0.0);
  IntegratorConfig cfg;
  cfg.horizon = 1.0;
  const Trajectory tr = integrate(p, law, Vec::Zero(4), cfg);
  EXPECT_EQ(tr.size(), 1001u);
  for (const auto& s : tr.samples()) ASSERT_EQ(s.x, Vec::Zero(4));
}

TEST(Integrate, VelocityDampingMatchesClosedForm) {
  const ModelPair p = double_integrator_pair();
  const DampingLaw law(8.0);
  IntegratorConfig cfg;
  cfg.horizon = 0.5;
  const Trajectory tr = integrate(p, law, state(0, 0, 1, 0), cfg);
  EXPECT_NEAR(tr.back().t, 0.5, 1e-15);
  EXPECT_NEAR(tr.back().x.tail(2).norm(), std::exp(-4.0), 1e-6);
}

TEST(Integrate, FourthOrderConvergence) {
  const auto s = lstest::open_field_scenario(2.0);
  Vec x0 = state(0.8, -0.6, 0.3, 0.9);
  auto final_state = [&](double dt) {
    IntegratorConfig cfg = s.integrator;
    cfg.dt = dt;
    return integrate(s.model(), s.law(), x0, cfg).back().x;
  };
  const Vec ref = final_state(0.02 / 32);
  const double e1 = (final_state(0.02) - ref).norm();
  const double e2 = (final_state(0.01) - ref).norm();
  EXPECT_GE(std::log2(e1 / e2), 3.5);
}

TEST(Integrate, BitIdenticalReruns) {
  const auto s = lstest::case_study_scenario();
  const Trajectory a = integrate(s.model(), s.law(), s.initial_state(), s.integrator);
  const Trajectory b = integrate(s.model(), s.law(), s.initial_state(), s.integrator);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    ASSERT_EQ(a[k].x, b[k].x);
    ASSERT_EQ(a[k].z_s, b[k].z_s);
  }
}

TEST(Integrate, SamplesAreSelfConsistent) {
  const auto s = lstest::case_study_scenario();
  const ModelPair p = s.model();
  const Trajectory tr = integrate(p, s.law(), s.initial_state(), s.integrator);
  EXPECT_EQ(tr.front().z_s, tr.front().z);
  for (const auto& smp : tr.samples()) {
    ASSERT_EQ(smp.z, p.project_state(smp.x));
    ASSERT_EQ(smp.e, smp.z - smp.z_s);
    ASSERT_EQ(smp.e_dot, smp.z_dot - smp.z_s_dot);
  }
  for (std::size_t k = 1; k < tr.size(); ++k) ASSERT_GT(tr[k].t, tr[k - 1].t);
}

TEST(Integrate, ReferenceAccelerationIsForwardDifference) {
  const auto s = lstest::case_study_scenario();
  const Trajectory tr = integrate(s.model(), s.law(), s.initial_state(), s.integrator);
  const double dt = tr.dt();
  for (std::size_t k = 0; k + 1 < tr.size(); k += 997) {
    ASSERT_EQ(tr[k].z_s_ddot, (tr[k + 1].z_s_dot - tr[k].z_s_dot) / dt);
  }
  EXPECT_EQ(tr.back().z_s_ddot, tr[tr.size() - 2].z_s_ddot);
}

TEST(Integrate, DivergenceNamesFirstBadStep) {
  const ModelPair p = double_integrator_pair();
  const BlowUpLaw law;
  IntegratorConfig cfg;
  cfg.horizon = 1.0;
  try {
    integrate(p, law, Vec::Zero(4), cfg);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_GE(e.step(), 1u);
    EXPECT_NEAR(e.time(), static_cast<double>(e.step()) * cfg.dt, 1e-12);
  }
}

TEST(Integrate, AdditiveInputDisturbance) {
  const ModelPair p = double_integrator_pair();
  const DampingLaw law(0.0);
  IntegratorConfig cfg;
  cfg.horizon = 1.0;
  RolloutOptions opts;
  opts.disturbance = [](double) { return Vec(Vec2(0.5, -0.25)); };
  const Trajectory tr = integrate(p, law, Vec::Zero(4), cfg, opts);
  EXPECT_NEAR(tr.back().x[2], 0.5, 1e-12);
  EXPECT_NEAR(tr.back().x[3], -0.25, 1e-12);
  EXPECT_NEAR(tr.back().x[0], 0.25, 1e-12);
  // the logged input is the commanded one
  EXPECT_EQ(tr.back().u, Vec::Zero(2));
}

TEST(Trajectory, RejectsNonUniformSpacing) {
  std::vector<Sample> v(3);
  v[0].t = 0.0;
  v[1].t = 0.1;
  v[2].t = 0.25;
  EXPECT_THROW(Trajectory(0.1, v), ConfigError);
}

TEST(ReachableTube, EquilibriumSeedIsItsOwnTube) {
  const ModelPair p = double_integrator_pair();
  const DampingLaw law(0.0);
  const PointCloud c = reachable_tube_estimate(p, law, {Vec::Zero(4)}, 1.0, IntegratorConfig{});
  ASSERT_EQ(c.points.size(), 1u);
  EXPECT_EQ(c.points[0], Vec::Zero(4));
}

TEST(ReachableTube, StraightLineBoundingBox) {
  const ModelPair p = double_integrator_pair();
  const DampingLaw law(0.0);
  const PointCloud c = reachable_tube_estimate(p, law, {state(0, 0, 1, 0)}, 1.0, IntegratorConfig{});
  EXPECT_DOUBLE_EQ(c.lower[0], 0.0);
  EXPECT_NEAR(c.upper[0], 1.0, 1e-12);
  EXPECT_EQ(c.lower[1], 0.0);
  EXPECT_EQ(c.upper[1], 0.0);
}

TEST(ReachableTube, SupersetOfSeedsContainsSubsetTube) {
  const auto s = lstest::open_field_scenario();
  const ModelPair p = s.model();
  const auto law = s.law();
  IntegratorConfig cfg;
  const std::vector<Vec> small = {state(0.5, 0.5, 0, 0)};
  const std::vector<Vec> big = {state(0.5, 0.5, 0, 0), state(-0.3, 0.2, 0.1, 0)};
  const PointCloud a = reachable_tube_estimate(p, law, small, 0.5, cfg);
  const PointCloud b = reachable_tube_estimate(p, law, big, 0.5, cfg);
  for (const auto& q : a.points) {
    ASSERT_TRUE(std::binary_search(b.points.begin(), b.points.end(), q, [](const Vec& l, const Vec& r) {
      return std::lexicographical_compare(l.data(), l.data() + l.size(), r.data(), r.data() + r.size());
    }));
  }
  EXPECT_THROW(reachable_tube_estimate(p, law, {}, 0.5, cfg), ConfigError);
}

TEST(Integrate, StepAcrossModeChangeIsSplitAtTheSwitch) {
  // exact: x1 = t^2/2 up to t* = sqrt(2c), then decelerates from speed t*
  const double c = 0.37, ts = std::sqrt(2 * c), T = 1.5;
  const double x_exact = c + ts * (T - ts) - 0.5 * (T - ts) * (T - ts);
  const double v_exact = ts - (T - ts);
  IntegratorConfig cfg;
  cfg.dt = 0.01;
  cfg.horizon = T;
  const ModelPair p = double_integrator_pair();
  const auto split = integrate(p, BangLaw(c, true), Vec::Zero(4), cfg);
  const auto plain = integrate(p, BangLaw(c, false), Vec::Zero(4), cfg);
  EXPECT_NEAR(split.back().x[0], x_exact, 1e-9);
  EXPECT_NEAR(split.back().x[2], v_exact, 1e-9);
  // stepping blindly over the jump leaves an error of order dt
  EXPECT_GT(std::abs(plain.back().x[2] - v_exact), 1e-4);
  EXPECT_EQ(split.size(), plain.size());
  EXPECT_NEAR(split.back().t, T, 1e-12);
}
