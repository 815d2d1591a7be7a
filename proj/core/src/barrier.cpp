#include "layersafe/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "layersafe/errors.hpp"

namespace layersafe {

ObstacleField::ObstacleField(std::vector<Obstacle> obstacles) : obstacles_(std::move(obstacles)) {
  if (obstacles_.empty()) throw ConfigError("obstacle field needs at least one obstacle");
  for (std::size_t i = 0; i < obstacles_.size(); ++i) {
    const auto& o = obstacles_[i];
    if (!(o.radius > 0.0) || !std::isfinite(o.radius) || !o.center.allFinite()) {
      throw ConfigError("obstacle." + std::to_string(i) + ".radius must be finite and > 0");
    }
  }
}

BarrierFn::BarrierFn(ObstacleField field) : field_(std::move(field)) {}

NearestObstacle BarrierFn::nearest(const Vec2& z) const {
  NearestObstacle best;
  best.value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < field_.size(); ++i) {
    const double d = (z - field_[i].center).norm();
    const double v = d - field_[i].radius;
    // strict comparison keeps the lowest index on ties
    if (v < best.value) {
      best.index = i;
      best.center_distance = d;
      best.value = v;
    }
  }
  return best;
}

Vec2 BarrierFn::gradient(const Vec2& z) const {
  const NearestObstacle n = nearest(z);
  if (!(n.center_distance > 0.0)) {
    throw SingularGradientError("barrier gradient undefined at center of obstacle " +
                                std::to_string(n.index));
  }
  return (z - field_[n.index].center) / n.center_distance;
}

double barrier_value(const BarrierFn& b, const Vec2& z) { return b.value(z); }

Vec2 barrier_gradient(const BarrierFn& b, const Vec2& z) { return b.gradient(z); }

double estimate_grad_bound(const std::function<Vec2(const Vec2&)>& gradient,
                           const std::vector<Vec2>& samples) {
  double bound = 0.0;
  for (const auto& z : samples) bound = std::max(bound, gradient(z).norm());
  return bound;
}

ValidityReport check_cbf_condition(const BarrierFn& b, const ModelPair& rom, double alpha,
                                   const std::vector<Vec2>& grid,
                                   const std::vector<Vec2>& v_candidates) {
  if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
  if (grid.empty()) throw ConfigError("CBF check needs a non-empty grid");

  ValidityReport report;
  report.points.reserve(grid.size());
  for (const auto& z : grid) {
    CbfPointVerdict pv;
    pv.z = z;
    pv.best = -std::numeric_limits<double>::infinity();
    const NearestObstacle nearest = b.nearest(z);
    if (!(nearest.center_distance > 0.0)) {
      report.invalid += 1;
      report.points.push_back(pv);
      continue;
    }
    const Vec2 grad = b.gradient(z);
    const double margin = alpha * nearest.value;
    for (const auto& v : v_candidates) {
      const Vec zdot = rom.rom_field(Vec(z), Vec(v));
      pv.best = std::max(pv.best, grad.dot(Vec2(zdot)) + margin);
    }
    pv.valid = pv.best >= 0.0;
    (pv.valid ? report.valid : report.invalid) += 1;
    report.points.push_back(pv);
  }
  if (rom.rom_single_integrator) {
    report.note =
        "single-integrator RoM with unconstrained v: the condition holds at every z "
        "(choose v = c * grad_h with c large); sampled verdicts reflect the candidate set only";
  }
  return report;
}

}  // namespace layersafe
