#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "layersafe/barrier.hpp"
#include "layersafe/controller.hpp"
#include "layersafe/recurrence.hpp"
#include "layersafe/robustness.hpp"

namespace layersafe {

/// How the initial FoM velocity is chosen for a start position: the desired
/// velocity, rest, or the filtered velocity (zero initial tracking error).
enum class VelocityMode { desired, zero, safe };

VelocityMode parse_velocity_mode(const std::string& s);
std::string to_string(VelocityMode mode);

struct RtfConstants {
  double a1 = 1.0;
  double a2 = 1.0;
  double beta = 0.0;  // 1/s
  double tau = 1.0;   // s
  double m_overshoot = 0.0;
};

/// `expect.<metric>[@alpha] <op> <value>`
struct Expectation {
  enum class Op { ge, gt, le, lt, eq };
  std::string metric;
  std::optional<double> alpha;
  Op op = Op::ge;
  double value = 0.0;

  bool accepts(double observed) const;
  std::string text() const;
};

struct CertifySettings {
  VelocityMode velocity = VelocityMode::desired;
  int nx = 40;
  int ny = 40;
  Vec2 lower{-1.5, -1.5};
  Vec2 upper{2.5, 1.5};
};

struct Scenario {
  std::vector<Obstacle> obstacles;
  Vec2 start{0.0, 0.0};
  VelocityMode start_velocity = VelocityMode::desired;
  Vec2 goal{0.0, 0.0};
  Gains gains;
  RtfConstants rtf;
  IntegratorConfig integrator;
  int workers = 1;
  std::uint64_t seed = 1;
  CertifySettings certify;
  DisturbanceSpec disturbance;
  std::optional<double> iss_gain;  // mu(r) = gain * r; calibrated when absent
  std::vector<Expectation> expectations;

  ModelPair model() const;
  BarrierFn barrier() const;
  /// Closed loop with gains.alpha replaced by `alpha`.
  ClosedLoopLaw law(double alpha) const;
  ClosedLoopLaw law() const { return law(gains.alpha); }
  Rtf rtf_fn() const;
  /// Throws HypothesisError when rtf.beta <= alpha.
  RecurrentCbf rcbf(double alpha) const;

  /// FoM state at position z0 with the velocity chosen by `mode`; the safe
  /// mode filters with `alpha`.
  Vec initial_state(const Vec2& z0, VelocityMode mode, double alpha) const;
  Vec initial_state(const Vec2& z0, VelocityMode mode) const {
    return initial_state(z0, mode, gains.alpha);
  }
  Vec initial_state() const { return initial_state(start, start_velocity); }

  /// Canonical key = value listing of every setting, parseable by parse_scenario.
  std::string resolved_text() const;
  /// FNV-1a 64 of resolved_text(), 16 hex digits.
  std::string digest() const;
};

/// Flat `key = value` text, `#` comments. Throws ParseError with the line for
/// malformed input and ConfigError naming the field for invalid values.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

/// Throws ConfigError naming the offending field.
void validate(const Scenario& s);

std::string format_double(double v);
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace layersafe
