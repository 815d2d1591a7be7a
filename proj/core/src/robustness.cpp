#include "layersafe/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "layersafe/errors.hpp"

namespace layersafe {

namespace {

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// splitmix64 finaliser; decorrelates (seed, hold index) pairs
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

DisturbanceKind parse_disturbance_kind(const std::string& s) {
  if (s == "none") return DisturbanceKind::none;
  if (s == "constant") return DisturbanceKind::constant;
  if (s == "sine") return DisturbanceKind::sine;
  if (s == "random") return DisturbanceKind::random;
  throw ConfigError("disturbance.kind must be one of none|constant|sine|random (got '" + s + "')");
}

std::string to_string(DisturbanceKind kind) {
  switch (kind) {
    case DisturbanceKind::none: return "none";
    case DisturbanceKind::constant: return "constant";
    case DisturbanceKind::sine: return "sine";
    case DisturbanceKind::random: return "random";
  }
  return "none";
}

Disturbance make_disturbance(const DisturbanceSpec& spec, int input_dim) {
  if (input_dim < 1) throw ConfigError("disturbance needs input_dim >= 1");
  if (!(spec.amplitude >= 0.0) || !std::isfinite(spec.amplitude)) {
    throw ConfigError("disturbance.amplitude must be finite and >= 0");
  }
  Disturbance d;
  d.spec = spec;
  if (spec.kind == DisturbanceKind::none || spec.amplitude == 0.0) {
    d.spec.kind = DisturbanceKind::none;
    return d;
  }
  const double a = spec.amplitude;
  const int dim = input_dim;
  d.sup_norm = a;
  switch (spec.kind) {
    case DisturbanceKind::constant: {
      const Vec value = Vec::Constant(dim, a / std::sqrt(static_cast<double>(dim)));
      d.signal = [value](double) { return value; };
      break;
    }
    case DisturbanceKind::sine: {
      if (!(spec.frequency > 0.0)) throw ConfigError("disturbance.frequency must be > 0 for sine");
      const double w = 2.0 * M_PI * spec.frequency;
      d.signal = [a, w, dim](double t) {
        Vec v = Vec::Zero(dim);
        v[0] = a * std::sin(w * t);
        if (dim > 1) v[1] = a * std::cos(w * t);
        return v;
      };
      break;
    }
    case DisturbanceKind::random: {
      if (!(spec.frequency > 0.0)) throw ConfigError("disturbance.frequency must be > 0 for random");
      const double hold = 1.0 / spec.frequency;
      const std::uint64_t seed = spec.seed;
      d.signal = [a, hold, dim, seed](double t) {
        const auto slot = static_cast<std::uint64_t>(std::floor(std::max(0.0, t) / hold));
        std::mt19937_64 rng(mix(seed ^ mix(slot)));
        // rejection sample the unit ball
        Vec v(dim);
        do {
          for (int i = 0; i < dim; ++i) v[i] = 2.0 * unit_uniform(rng) - 1.0;
        } while (v.squaredNorm() > 1.0);
        return Vec(a * v);
      };
      break;
    }
    case DisturbanceKind::none:
      break;
  }
  return d;
}

ClassK linear_class_k(double gain) {
  if (!(gain >= 0.0) || !std::isfinite(gain)) throw ConfigError("ISS gain must be finite and >= 0");
  return [gain](double r) { return gain * r; };
}

IssEnvelope make_iss_envelope(const RecurrentCbf& rcbf, ClassK mu, double d_sup) {
  if (!(d_sup >= 0.0)) throw ConfigError("disturbance sup norm must be >= 0");
  IssEnvelope env;
  env.m_overshoot = rcbf.m_overshoot;
  env.beta = rcbf.rtf.beta;
  env.mu = std::move(mu);
  env.d_sup = d_sup;
  env.mu_value = env.mu(d_sup);
  env.iota = rcbf.rtf.a2 * std::exp(rcbf.rtf.beta * rcbf.rtf.tau) * env.mu_value / rcbf.m_overshoot;
  env.gamma_margin = env.iota / rcbf.alpha_e;
  return env;
}

IssCheck check_iss_envelope(const Trajectory& traj, const IssEnvelope& env) {
  const Sample& s0 = traj.front();
  const double e0 = s0.e_dot.norm();
  IssCheck out;
  out.holds = true;
  out.worst_excess = -std::numeric_limits<double>::infinity();
  for (const auto& s : traj.samples()) {
    const double transient = env.m_overshoot * std::exp(-env.beta * (s.t - s0.t)) * e0;
    const double err = s.e_dot.norm();
    const double excess = err - (transient + env.mu_value);
    if (excess > out.worst_excess) {
      out.worst_excess = excess;
      out.worst_t = s.t;
    }
    if (err - env.mu_value > (1.0 + 1e-9) * transient) out.holds = false;
  }
  return out;
}

RtfRecurrence check_practical_rtf(const Rtf& rtf, const Trajectory& traj, const IssEnvelope& env,
                                  const SamplePredicate& in_set) {
  return check_shifted_recurrence(rtf, traj, env.iota, in_set);
}

bool in_robust_set(const RecurrentCbf& rcbf, const IssEnvelope& env, const Vec& z,
                   const Vec& e_dot) {
  return rcbf.value(z, e_dot) - env.gamma_margin >= 0.0;
}

double reference_acceleration_sup(const Trajectory& traj, bool active_only) {
  double sup = 0.0;
  for (const auto& s : traj.samples()) {
    if (active_only && !s.filter_active) continue;
    sup = std::max(sup, s.z_s_ddot.norm());
  }
  return sup;
}

std::vector<std::size_t> barrier_switch_indices(const Trajectory& traj, double threshold) {
  std::vector<std::size_t> out;
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const Vec& a = traj[k - 1].grad_h;
    const Vec& b = traj[k].grad_h;
    if (a.size() == b.size() && a.size() > 0 && (b - a).norm() > threshold) out.push_back(k);
  }
  return out;
}

std::vector<DisturbanceSpec> default_calibration_disturbances(double amplitude, std::uint64_t seed) {
  std::vector<DisturbanceSpec> out;
  out.push_back({DisturbanceKind::constant, amplitude, 1.0, seed});
  for (double f : {0.1, 0.25, 0.5, 1.0, 2.0, 4.0}) out.push_back({DisturbanceKind::sine, amplitude, f, seed});
  out.push_back({DisturbanceKind::random, amplitude, 2.0, seed});
  return out;
}

double estimate_iss_gain(const ClosedLoopLaw& law, const std::vector<DisturbanceSpec>& calibration,
                         const IntegratorConfig& cfg) {
  if (calibration.empty()) throw ConfigError("ISS gain calibration needs at least one disturbance");
  const ModelPair& pair = law.pair();
  Vec x0 = Vec::Zero(pair.dims.fom_state);
  x0.head<2>() = law.goal();
  double gain = 0.0;
  for (const auto& spec : calibration) {
    const Disturbance d = make_disturbance(spec, pair.dims.fom_input);
    if (d.sup_norm == 0.0) continue;
    RolloutOptions opts;
    opts.disturbance = d.signal;
    const Trajectory traj = integrate(pair, law, x0, cfg, opts);
    for (const auto& s : traj.samples()) gain = std::max(gain, s.e_dot.norm() / d.sup_norm);
  }
  return gain;
}

}  // namespace layersafe
