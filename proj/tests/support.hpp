#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "layersafe/dynamics.hpp"
#include "layersafe/recurrence.hpp"
#include "layersafe/scenario.hpp"

namespace lstest {

namespace ls = layersafe;

inline std::string scenario_path(const std::string& name) {
  return std::string(LAYERSAFE_SCENARIO_DIR) + "/" + name;
}

inline ls::Scenario case_study_scenario() { return ls::load_scenario(scenario_path("paper_fig2.scn")); }

/// Case-study gains and constants, one obstacle far from a goal at the origin, so
/// small excursions around the goal never wake the filter.
inline ls::Scenario open_field_scenario(double horizon = 3.0) {
  ls::Scenario s = ls::parse_scenario(R"(
obstacle.0.center = (20, 20)
obstacle.0.radius = 0.5
start = (0, 0)
goal = (0, 0)
gains.kp = 1.8
gains.kd = 8
gains.alpha = 0.5
rtf.beta = 2.45
rtf.M = 3.24
)");
  s.integrator.horizon = horizon;
  return s;
}

/// Rollout from rest offset on the goal with initial velocity error edot0.
inline ls::Trajectory goal_rollout(const ls::Scenario& s, const ls::Vec2& edot0,
                                   const ls::RolloutOptions& opts = {}) {
  ls::Vec x0(4);
  x0 << s.goal[0], s.goal[1], edot0[0], edot0[1];
  return ls::integrate(s.model(), s.law(), x0, s.integrator, opts);
}

/// Hand-built trajectory with the given tracking error and barrier value;
/// V = ||edot|| and h_V = -V + alpha_e h when alpha_e is finite.
inline ls::Trajectory synthetic(double dt, std::size_t n,
                                const std::function<ls::Vec2(double)>& e_dot,
                                const std::function<double(double)>& h,
                                double alpha_e = std::nan("")) {
  std::vector<ls::Sample> samples;
  samples.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    ls::Sample s;
    s.t = static_cast<double>(k) * dt;
    s.x = ls::Vec::Zero(4);
    s.z = ls::Vec::Zero(2);
    s.z_dot = ls::Vec::Zero(2);
    s.z_s = ls::Vec::Zero(2);
    s.z_s_dot = ls::Vec::Zero(2);
    s.z_s_ddot = ls::Vec::Zero(2);
    s.z_dot_d = ls::Vec::Zero(2);
    s.e = ls::Vec::Zero(2);
    s.e_dot = e_dot(s.t);
    s.u = ls::Vec::Zero(2);
    s.h = h(s.t);
    s.grad_h = ls::Vec::Zero(2);
    s.V = s.e_dot.norm();
    s.h_V = std::isnan(alpha_e) ? std::nan("") : -s.V + alpha_e * s.h;
    samples.push_back(std::move(s));
  }
  return ls::Trajectory(dt, std::move(samples));
}

}  // namespace lstest

namespace lstest {

/// Nearest point to w_d in {w : n^T w >= b}, by sampling the boundary line
/// and refining around the best sample, or w_d itself when feasible.
inline ls::Vec2 projection_oracle(const ls::Vec2& n, double b, const ls::Vec2& w_d) {
  if (n.dot(w_d) >= b) return w_d;
  const ls::Vec2 base = b * n;  // n is unit
  const ls::Vec2 along(-n[1], n[0]);
  double half = w_d.norm() + std::abs(b) + 1.0;
  double center = 0.0;
  for (int level = 0; level < 8; ++level) {
    constexpr int kSamples = 400;
    const double step = 2.0 * half / kSamples;
    double best_s = center;
    double best_d = (base + center * along - w_d).norm();
    for (int i = 0; i <= kSamples; ++i) {
      const double s = center - half + step * i;
      const double d = (base + s * along - w_d).norm();
      if (d < best_d) {
        best_d = d;
        best_s = s;
      }
    }
    center = best_s;
    half = step;
  }
  return base + center * along;
}

}  // namespace lstest
