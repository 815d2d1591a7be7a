#include "layersafe/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "layersafe/errors.hpp"

namespace layersafe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Modal form of the (edot, edot) response for s^2 + k_d s + k_p k_d = 0.
struct ErrorModes {
  enum class Kind { distinct, complex, repeated } kind;
  double lambda_slow = 0.0;  // distinct: larger root; repeated: the root
  double lambda_fast = 0.0;
  double r_slow = 0.0;       // residues, r_slow + r_fast = 1
  double r_fast = 0.0;
  double sigma = 0.0;        // complex: real part
  double omega = 0.0;        //          imaginary part
  double c = 0.0;            // complex: sin coefficient; repeated: t coefficient
};

ErrorModes error_modes(double k_p, double k_d) {
  const double a22 = k_p - k_d;
  const double disc = k_d * k_d - 4.0 * k_p * k_d;
  const double scale = std::max(1.0, k_d * k_d);
  ErrorModes m{};
  if (disc > 1e-12 * scale) {
    m.kind = ErrorModes::Kind::distinct;
    const double root = std::sqrt(disc);
    m.lambda_slow = 0.5 * (-k_d + root);
    m.lambda_fast = 0.5 * (-k_d - root);
    m.r_slow = (a22 - m.lambda_fast) / (m.lambda_slow - m.lambda_fast);
    m.r_fast = (m.lambda_slow - a22) / (m.lambda_slow - m.lambda_fast);
  } else if (disc < -1e-12 * scale) {
    m.kind = ErrorModes::Kind::complex;
    m.sigma = -0.5 * k_d;
    m.omega = 0.5 * std::sqrt(-disc);
    m.c = (a22 - m.sigma) / m.omega;
  } else {
    m.kind = ErrorModes::Kind::repeated;
    m.lambda_slow = -0.5 * k_d;
    m.c = a22 - m.lambda_slow;
  }
  return m;
}

void require_stabilizing(double k_p, double k_d) {
  if (!(k_d > 0.0) || !(k_p >= 0.0) || !std::isfinite(k_p) || !std::isfinite(k_d)) {
    throw NoCertificateError("tracking error dynamics are not Hurwitz for k_p=" +
                             std::to_string(k_p) + ", k_d=" + std::to_string(k_d));
  }
}

}  // namespace

void Gains::validate() const {
  if (!(k_p > 0.0) || !std::isfinite(k_p)) throw ConfigError("gains.k_p must be > 0");
  if (!(k_d > 0.0) || !std::isfinite(k_d)) throw ConfigError("gains.k_d must be > 0");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("gains.alpha must be > 0");
}

Vec2 desired_velocity(const Vec2& goal, double k_p, const Vec2& z) { return -k_p * (z - goal); }

namespace {

SafeVelocity filter_against(const Obstacle& o, std::size_t index, double alpha, const Vec2& z,
                            const Vec2& z_dot_d) {
  const double dist = (z - o.center).norm();
  if (!(dist > 0.0)) {
    throw SingularGradientError("safety filter evaluated at the center of obstacle " +
                                std::to_string(index));
  }
  SafeVelocity out;
  out.h = dist - o.radius;
  out.normal = (z - o.center) / dist;
  const double correction = -out.normal.dot(z_dot_d) - alpha * out.h;
  out.active = correction > 0.0;
  out.z_dot_s = out.active ? Vec2(z_dot_d + correction * out.normal) : z_dot_d;
  return out;
}

}  // namespace

SafeVelocity safe_velocity(const BarrierFn& b, double alpha, const Vec2& z, const Vec2& z_dot_d) {
  const std::size_t i = b.nearest(z).index;
  return filter_against(b.field()[i], i, alpha, z, z_dot_d);
}

Vec2 tracking_control(double k_d, const Vec2& z_dot, const Vec2& z_dot_s) {
  return -k_d * (z_dot - z_dot_s);
}

ClosedLoopLaw::ClosedLoopLaw(ModelPair pair, BarrierFn barrier, Gains gains, Vec2 goal)
    : pair_(std::move(pair)), barrier_(std::move(barrier)), gains_(gains), goal_(std::move(goal)) {
  gains_.validate();
  if (pair_.dims.rom_state != 2 || pair_.dims.rom_input != 2 || pair_.dims.fom_input != 2) {
    throw ConfigError("closed loop requires a planar RoM (n=m=2) and M=2 inputs");
  }
  if (!goal_.allFinite()) throw ConfigError("goal must be finite");
}

LawOutput ClosedLoopLaw::evaluate(const Vec& x) const {
  return evaluate_against(x, barrier_.nearest(Vec2(pair_.project_state(x))).index);
}

LawOutput ClosedLoopLaw::evaluate_in_mode(const Vec& x, int mode) const {
  if (mode < 0 || static_cast<std::size_t>(mode) >= barrier_.field().size()) return evaluate(x);
  return evaluate_against(x, static_cast<std::size_t>(mode));
}

LawOutput ClosedLoopLaw::evaluate_against(const Vec& x, std::size_t obstacle) const {
  const Vec2 z = pair_.project_state(x);
  const Vec2 z_dot = pair_.project_input(x);
  const Vec2 z_dot_d = desired_velocity(goal_, gains_.k_p, z);
  const SafeVelocity sv = filter_against(barrier_.field()[obstacle], obstacle, gains_.alpha, z, z_dot_d);
  LawOutput out;
  out.u = tracking_control(gains_.k_d, z_dot, sv.z_dot_s);
  out.z_dot_d = z_dot_d;
  out.z_dot_s = sv.z_dot_s;
  out.active = sv.active;
  out.h = sv.h;
  out.grad_h = sv.normal;
  return out;
}

int ClosedLoopLaw::mode(const Vec& x) const {
  return static_cast<int>(barrier_.nearest(Vec2(pair_.project_state(x))).index);
}

ClosedLoopLaw assemble_closed_loop(const ModelPair& pair, const BarrierFn& b, const Gains& gains,
                                   const Vec2& goal) {
  return ClosedLoopLaw(pair, b, gains, goal);
}

Eigen::Matrix2d tracking_error_matrix(double k_p, double k_d) {
  Eigen::Matrix2d A;
  A << -k_p, 1.0, -k_p * k_p, k_p - k_d;
  return A;
}

double tracking_response(double k_p, double k_d, double t) {
  const ErrorModes m = error_modes(k_p, k_d);
  switch (m.kind) {
    case ErrorModes::Kind::distinct:
      return m.r_slow * std::exp(m.lambda_slow * t) + m.r_fast * std::exp(m.lambda_fast * t);
    case ErrorModes::Kind::complex:
      return std::exp(m.sigma * t) * (std::cos(m.omega * t) + m.c * std::sin(m.omega * t));
    case ErrorModes::Kind::repeated:
      return std::exp(m.lambda_slow * t) * (1.0 + m.c * t);
  }
  return 0.0;
}

double envelope_overshoot(double k_p, double k_d, double beta) {
  require_stabilizing(k_p, k_d);
  const ErrorModes m = error_modes(k_p, k_d);
  constexpr double kExcited = 1e-12;

  switch (m.kind) {
    case ErrorModes::Kind::distinct: {
      const double p1 = m.lambda_slow + beta;
      const double p2 = m.lambda_fast + beta;
      const bool slow_excited = std::abs(m.r_slow) > kExcited;
      const bool fast_excited = std::abs(m.r_fast) > kExcited;
      if ((slow_excited && p1 > 0.0) || (fast_excited && p2 > 0.0)) return kInf;
      auto g = [&](double t) {
        return (slow_excited ? m.r_slow * std::exp(p1 * t) : 0.0) +
               (fast_excited ? m.r_fast * std::exp(p2 * t) : 0.0);
      };
      double sup = std::abs(g(0.0));
      const double limit = (slow_excited && p1 == 0.0 ? m.r_slow : 0.0) +
                           (fast_excited && p2 == 0.0 ? m.r_fast : 0.0);
      sup = std::max(sup, std::abs(limit));
      // g' = r1 p1 e^{p1 t} + r2 p2 e^{p2 t} has at most one root.
      if (slow_excited && fast_excited && p1 != 0.0 && p2 != 0.0) {
        const double ratio = -(m.r_fast * p2) / (m.r_slow * p1);
        if (ratio > 0.0) {
          const double t_star = std::log(ratio) / (p1 - p2);
          if (t_star > 0.0 && std::isfinite(t_star)) sup = std::max(sup, std::abs(g(t_star)));
        }
      }
      return sup;
    }
    case ErrorModes::Kind::repeated: {
      const double delta = -(m.lambda_slow + beta);
      if (delta < 0.0) return kInf;
      if (delta == 0.0) return m.c == 0.0 ? 1.0 : kInf;
      double sup = 1.0;
      if (m.c != 0.0) {
        const double t_star = 1.0 / delta - 1.0 / m.c;
        if (t_star > 0.0) sup = std::max(sup, std::abs(1.0 + m.c * t_star) * std::exp(-delta * t_star));
      }
      return sup;
    }
    case ErrorModes::Kind::complex: {
      const double growth = m.sigma + beta;
      const double amplitude = std::sqrt(1.0 + m.c * m.c);
      if (growth > 0.0) return kInf;
      if (growth == 0.0) return amplitude;
      // Decaying oscillation: beyond t_end the envelope is below |g(0)| = 1.
      const double t_end = std::log(amplitude) / -growth;
      auto g = [&](double t) {
        return std::abs(std::exp(growth * t) * (std::cos(m.omega * t) + m.c * std::sin(m.omega * t)));
      };
      double sup = 1.0;
      double best_t = 0.0;
      const double step = (2.0 * M_PI / m.omega) / 4096.0;
      for (double t = 0.0; t <= t_end + step; t += step) {
        const double v = g(t);
        if (v > sup) {
          sup = v;
          best_t = t;
        }
      }
      // golden-section polish around the best sample
      double lo = std::max(0.0, best_t - step);
      double hi = best_t + step;
      const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
      for (int it = 0; it < 80; ++it) {
        const double a = hi - phi * (hi - lo);
        const double b = lo + phi * (hi - lo);
        if (g(a) > g(b)) hi = b; else lo = a;
      }
      return std::max(sup, g(0.5 * (lo + hi)));
    }
  }
  return kInf;
}

TrackingConstants linear_tracking_constants(const Gains& gains) {
  require_stabilizing(gains.k_p, gains.k_d);
  const ErrorModes m = error_modes(gains.k_p, gains.k_d);
  TrackingConstants out;
  switch (m.kind) {
    case ErrorModes::Kind::distinct:
      out.beta = std::abs(m.r_slow) > 1e-12 ? -m.lambda_slow : -m.lambda_fast;
      break;
    case ErrorModes::Kind::complex:
      out.beta = -m.sigma;
      break;
    case ErrorModes::Kind::repeated:
      // exact rate carries a secular t e^{lambda t} term; back off by 10%
      out.beta = m.c == 0.0 ? -m.lambda_slow : -0.9 * m.lambda_slow;
      break;
  }
  if (!(out.beta > 0.0)) {
    throw NoCertificateError("slowest excited tracking-error mode is not strictly stable");
  }
  out.m_overshoot = envelope_overshoot(gains.k_p, gains.k_d, out.beta);
  if (!std::isfinite(out.m_overshoot)) {
    throw NoCertificateError("no finite overshoot constant for the tracking-error response");
  }
  return out;
}

}  // namespace layersafe
