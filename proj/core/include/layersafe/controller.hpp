#pragma once

#include "layersafe/barrier.hpp"
#include "layersafe/dynamics.hpp"

namespace layersafe {

struct Gains {
  double k_p = 1.8;    // 1/s
  double k_d = 8.0;    // 1/s
  double alpha = 0.5;  // 1/s, linear class-K slope

  /// Throws ConfigError naming the first non-positive gain.
  void validate() const;
};

/// zdot_d = -k_p (z - goal)
Vec2 desired_velocity(const Vec2& goal, double k_p, const Vec2& z);

struct SafeVelocity {
  Vec2 z_dot_s;
  bool active = false;
  double h = 0.0;
  Vec2 normal;
};

/// Closed-form minimiser of ||w - zdot_d||^2 subject to n^T w >= -alpha h(z),
/// with n the unit normal of the nearest obstacle.
SafeVelocity safe_velocity(const BarrierFn& b, double alpha, const Vec2& z, const Vec2& z_dot_d);

/// u = -k_d (zdot - zdot_s)
Vec2 tracking_control(double k_d, const Vec2& z_dot, const Vec2& z_dot_s);

/// Desired velocity -> safety filter -> velocity tracking, composed through Pi and Psi.
class ClosedLoopLaw final : public ClosedLoop {
 public:
  ClosedLoopLaw(ModelPair pair, BarrierFn barrier, Gains gains, Vec2 goal);

  LawOutput evaluate(const Vec& x) const override;
  // index of the nearest obstacle; the filtered velocity jumps when it changes
  int mode(const Vec& x) const override;
  LawOutput evaluate_in_mode(const Vec& x, int mode) const override;
  Vec u_of_x(const Vec& x) const { return evaluate(x).u; }

  const ModelPair& pair() const noexcept { return pair_; }
  const BarrierFn& barrier() const noexcept { return barrier_; }
  const Gains& gains() const noexcept { return gains_; }
  const Vec2& goal() const noexcept { return goal_; }

 private:
  LawOutput evaluate_against(const Vec& x, std::size_t obstacle) const;

  ModelPair pair_;
  BarrierFn barrier_;
  Gains gains_;
  Vec2 goal_;
};

ClosedLoopLaw assemble_closed_loop(const ModelPair& pair, const BarrierFn& b, const Gains& gains,
                                   const Vec2& goal);

/// Rate/overshoot pair with ||edot(t)|| <= m_overshoot e^{-beta t} ||edot(0)||.
struct TrackingConstants {
  double beta = 0.0;
  double m_overshoot = 0.0;
};

/// Filter-inactive error dynamics per axis, state (z - goal, edot):
///   A = [[-k_p, 1], [-k_p^2, k_p - k_d]].
Eigen::Matrix2d tracking_error_matrix(double k_p, double k_d);

/// The (edot, edot) entry of exp(A t): the edot response to an initial
/// velocity error when the position offset starts at zero.
double tracking_response(double k_p, double k_d, double t);

/// sup_t |tracking_response(t)| e^{beta t}; +inf when beta exceeds the slowest
/// excited mode.
double envelope_overshoot(double k_p, double k_d, double beta);

/// Slowest excited mode of the error response and the tight overshoot for it.
/// Throws NoCertificateError when that mode is not strictly stable.
TrackingConstants linear_tracking_constants(const Gains& gains);

}  // namespace layersafe
