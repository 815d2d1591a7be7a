#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "layersafe/controller.hpp"
#include "layersafe/recurrence.hpp"

namespace layersafe {

enum class DisturbanceKind { none, constant, sine, random };

DisturbanceKind parse_disturbance_kind(const std::string& s);
std::string to_string(DisturbanceKind kind);

struct DisturbanceSpec {
  DisturbanceKind kind = DisturbanceKind::none;
  double amplitude = 0.0;  // sup norm of the signal
  double frequency = 1.0;  // Hz; random: hold rate
  std::uint64_t seed = 1;
};

/// Deterministic bounded input disturbance with ||signal(t)|| <= sup_norm.
struct Disturbance {
  DisturbanceSpec spec;
  InputSignal signal;  // empty for kind none
  double sup_norm = 0.0;
};

/// constant: amplitude along (1,..,1)/sqrt(M); sine: amplitude * (sin, cos, 0, ..);
/// random: piecewise-constant, uniform in the ball, re-drawn every 1/frequency s.
Disturbance make_disturbance(const DisturbanceSpec& spec, int input_dim);

using ClassK = std::function<double(double)>;

/// mu(r) = gain * r
ClassK linear_class_k(double gain);

/// ISS tracking bound ||edot(t)|| <= M ||edot(0)|| e^{-beta t} + mu(||d||_inf) and the
/// derived offsets iota = a2 e^{beta tau} mu(||d||_inf) / M, gamma = iota / alpha_e.
struct IssEnvelope {
  double m_overshoot = 0.0;
  double beta = 0.0;
  ClassK mu;
  double d_sup = 0.0;
  double mu_value = 0.0;  // mu(d_sup)
  double iota = 0.0;
  double gamma_margin = 0.0;
};

IssEnvelope make_iss_envelope(const RecurrentCbf& rcbf, ClassK mu, double d_sup);

struct IssCheck {
  bool holds = false;
  double worst_excess = 0.0;  // max_t ||edot(t)|| - bound(t)
  std::optional<double> worst_t;
};

IssCheck check_iss_envelope(const Trajectory& traj, const IssEnvelope& env);

/// min e^{beta t} (V(t) - iota) <= V(0) - iota over containment times in (0, tau].
RtfRecurrence check_practical_rtf(const Rtf& rtf, const Trajectory& traj, const IssEnvelope& env,
                                  const SamplePredicate& in_set = whole_space());

/// h_V(z, edot) - gamma >= 0
bool in_robust_set(const RecurrentCbf& rcbf, const IssEnvelope& env, const Vec& z,
                   const Vec& e_dot);

/// sup ||zddot_s|| over samples, optionally only where the safety filter is active.
double reference_acceleration_sup(const Trajectory& traj, bool active_only);

/// Sample indices k at which the active obstacle changes between k-1 and k,
/// detected as a jump of the barrier normal. zdot_s may jump there, so
/// zddot_s has no finite sup across a switch.
std::vector<std::size_t> barrier_switch_indices(const Trajectory& traj, double threshold = 0.5);

/// Constant and sinusoidal (several frequencies) probes plus one random signal.
std::vector<DisturbanceSpec> default_calibration_disturbances(double amplitude, std::uint64_t seed);

/// Linear ISS gain c for mu(r) = c r: max over calibration rollouts of
/// ||edot(t)|| / ||d||_inf, starting at rest on the goal so the transient term vanishes.
double estimate_iss_gain(const ClosedLoopLaw& law, const std::vector<DisturbanceSpec>& calibration,
                         const IntegratorConfig& cfg);

}  // namespace layersafe
