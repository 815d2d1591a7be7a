#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "layersafe/dynamics.hpp"

namespace layersafe {

using Vec2 = Eigen::Vector2d;

struct Obstacle {
  Vec2 center;
  double radius = 0.0;  // m
};

/// Non-empty set of closed disks.
class ObstacleField {
 public:
  explicit ObstacleField(std::vector<Obstacle> obstacles);
  const std::vector<Obstacle>& obstacles() const noexcept { return obstacles_; }
  std::size_t size() const noexcept { return obstacles_.size(); }
  const Obstacle& operator[](std::size_t i) const { return obstacles_[i]; }

 private:
  std::vector<Obstacle> obstacles_;
};

struct NearestObstacle {
  std::size_t index = 0;
  double center_distance = 0.0;  // ||z - o_i||
  double value = 0.0;            // ||z - o_i|| - r_i
};

/// h(z) = min_i ||z - o_i|| - r_i. Piecewise smooth; on ties the lowest index is active.
class BarrierFn {
 public:
  explicit BarrierFn(ObstacleField field);

  const ObstacleField& field() const noexcept { return field_; }
  NearestObstacle nearest(const Vec2& z) const;
  double value(const Vec2& z) const { return nearest(z).value; }
  /// Unit normal from the active obstacle center toward z.
  /// Throws SingularGradientError at the active center.
  Vec2 gradient(const Vec2& z) const;
  /// C_h. Exactly 1 for the min-distance barrier.
  double grad_bound() const noexcept { return 1.0; }

 private:
  ObstacleField field_;
};

double barrier_value(const BarrierFn& b, const Vec2& z);
Vec2 barrier_gradient(const BarrierFn& b, const Vec2& z);

/// Max sampled gradient norm, for barriers without an analytic C_h.
double estimate_grad_bound(const std::function<Vec2(const Vec2&)>& gradient,
                           const std::vector<Vec2>& samples);

struct CbfPointVerdict {
  Vec2 z;
  double best = 0.0;  // max_v grad_h(z)^T f(z,v) + alpha h(z); -inf without candidates
  bool valid = false;
};

struct ValidityReport {
  std::vector<CbfPointVerdict> points;
  std::size_t valid = 0;
  std::size_t invalid = 0;
  std::string note;
  double valid_fraction() const {
    return points.empty() ? 0.0 : static_cast<double>(valid) / static_cast<double>(points.size());
  }
};

/// Sampled check of max_v grad_h^T f(z,v) + alpha h(z) >= 0 at each grid point.
ValidityReport check_cbf_condition(const BarrierFn& b, const ModelPair& rom, double alpha,
                                   const std::vector<Vec2>& grid,
                                   const std::vector<Vec2>& v_candidates);

}  // namespace layersafe
