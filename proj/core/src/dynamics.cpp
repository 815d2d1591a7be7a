#include "layersafe/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "layersafe/errors.hpp"

namespace layersafe {

namespace {

bool all_finite(const Vec& v) { return v.allFinite(); }

bool lex_less(const Vec& a, const Vec& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

}  // namespace

ModelPair double_integrator_pair(const ModelDims& dims) {
  if (dims.fom_state != 4 || dims.rom_state != 2 || dims.fom_input != 2 || dims.rom_input != 2) {
    throw ConfigError("double integrator requires N=4, n=2, M=2, m=2 (got N=" +
                      std::to_string(dims.fom_state) + ", n=" + std::to_string(dims.rom_state) +
                      ", M=" + std::to_string(dims.fom_input) +
                      ", m=" + std::to_string(dims.rom_input) + ")");
  }
  ModelPair pair;
  pair.dims = dims;
  pair.fom_field = [](const Vec& x, const Vec& u) {
    Vec dx(4);
    dx << x[2], x[3], u[0], u[1];
    return dx;
  };
  pair.rom_field = [](const Vec& /*z*/, const Vec& v) { return v; };
  pair.project_state = [](const Vec& x) -> Vec { return x.head<2>(); };
  pair.project_input = [](const Vec& x) -> Vec { return x.segment<2>(2); };
  pair.project_state_jacobian = [](const Vec& /*x*/) {
    Mat J = Mat::Zero(2, 4);
    J(0, 0) = 1.0;
    J(1, 1) = 1.0;
    return J;
  };
  pair.rom_single_integrator = true;
  return pair;
}

double relative_degree_residual(const ModelPair& pair, const Vec& x, const Vec& u) {
  const Vec lhs = pair.project_state_jacobian(x) * pair.fom_field(x, u);
  const Vec rhs = pair.rom_field(pair.project_state(x), pair.project_input(x));
  return (lhs - rhs).norm();
}

void IntegratorConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("sim.dt must be > 0");
  if (!(horizon >= dt) || !std::isfinite(horizon)) throw ConfigError("sim.horizon must be >= sim.dt");
}

std::size_t IntegratorConfig::steps() const {
  return static_cast<std::size_t>(std::llround(horizon / dt));
}

Trajectory::Trajectory(double dt, std::vector<Sample> samples) : dt_(dt), samples_(std::move(samples)) {
  if (!(dt_ > 0.0)) throw ConfigError("trajectory dt must be > 0");
  if (samples_.empty()) throw ConfigError("trajectory needs at least one sample");
  const double t0 = samples_.front().t;
  for (std::size_t k = 1; k < samples_.size(); ++k) {
    const double gap = samples_[k].t - samples_[k - 1].t;
    const double drift = samples_[k].t - (t0 + static_cast<double>(k) * dt_);
    if (!(gap > 0.0) || std::abs(drift) > 1e-6 * dt_) {
      throw ConfigError("trajectory timestamps must be uniform with spacing dt (sample " +
                        std::to_string(k) + ")");
    }
  }
}

std::vector<double> Trajectory::series(const std::function<double(const Sample&)>& f) const {
  std::vector<double> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(f(s));
  return out;
}

Trajectory integrate(const ModelPair& pair, const ClosedLoop& law, const Vec& x0,
                     const IntegratorConfig& cfg, const RolloutOptions& opts) {
  cfg.validate();
  const int N = pair.dims.fom_state;
  const int n = pair.dims.rom_state;
  if (x0.size() != N) throw ConfigError("x0 has length " + std::to_string(x0.size()) +
                                        ", expected " + std::to_string(N));
  if (!all_finite(x0)) throw ConfigError("x0 is not finite");
  if (N + n > kMaxDim) throw ConfigError("N + n exceeds kMaxDim = " + std::to_string(kMaxDim));

  const double dt = cfg.dt;
  const std::size_t steps = cfg.steps();

  // Augmented state y = [x; z_s].
  auto field = [&](const Vec& y, double t, int mode) {
    const auto x = y.head(N);
    const LawOutput out = mode == -1 ? law.evaluate(x) : law.evaluate_in_mode(x, mode);
    Vec u = out.u;
    if (opts.disturbance) u += opts.disturbance(t);
    Vec dy(N + n);
    dy.head(N) = pair.fom_field(x, u);
    dy.tail(n) = out.z_dot_s;
    return dy;
  };

  auto record = [&](const Vec& y, double t) {
    Sample s;
    s.t = t;
    s.x = y.head(N);
    const LawOutput out = law.evaluate(s.x);
    s.z = pair.project_state(s.x);
    s.z_dot = pair.project_input(s.x);
    s.z_s = y.tail(n);
    s.z_s_dot = out.z_dot_s;
    s.z_dot_d = out.z_dot_d;
    s.e = s.z - s.z_s;
    s.e_dot = s.z_dot - s.z_s_dot;
    s.u = out.u;
    s.h = out.h;
    s.grad_h = out.grad_h;
    s.filter_active = out.active;
    s.V = opts.metrics.tracking ? opts.metrics.tracking(s.z, s.e_dot) : s.e_dot.norm();
    s.h_V = std::isnan(opts.metrics.alpha_e) ? std::numeric_limits<double>::quiet_NaN()
                                             : -s.V + opts.metrics.alpha_e * s.h;
    return s;
  };

  std::vector<Sample> samples;
  samples.reserve(steps + 1);

  Vec y(N + n);
  y.head(N) = x0;
  y.tail(n) = pair.project_state(x0);
  samples.push_back(record(y, 0.0));

  // every stage of a step sees the branch the step started on
  auto rk4 = [&](const Vec& y0, double t, double h, int mode) {
    const Vec k1 = field(y0, t, mode);
    const Vec k2 = field(y0 + 0.5 * h * k1, t + 0.5 * h, mode);
    const Vec k3 = field(y0 + 0.5 * h * k2, t + 0.5 * h, mode);
    const Vec k4 = field(y0 + h * k3, t + h, mode);
    return Vec(y0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  };
  auto mode_of = [&](const Vec& v) { return law.mode(v.head(N)); };

  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const int m0 = mode_of(y);
    Vec next = rk4(y, t, dt, m0);
    if (m0 != -1 && all_finite(next) && mode_of(next) != m0) {
      // locate the branch change to 1e-12 dt, then finish the step on the new branch
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mode_of(rk4(y, t, mid * dt, m0)) == m0 ? lo : hi) = mid;
      }
      const Vec mid = rk4(y, t, hi * dt, m0);
      next = rk4(mid, t + hi * dt, (1.0 - hi) * dt, mode_of(mid));
    }
    y = next;
    const double t_next = static_cast<double>(k + 1) * dt;
    if (!all_finite(y)) throw DivergenceError(k + 1, t_next);
    samples.push_back(record(y, t_next));
    if (!all_finite(samples.back().u)) throw DivergenceError(k + 1, t_next);
  }

  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (samples.size() == 1) {
      samples[k].z_s_ddot = Vec::Zero(n);
    } else if (k + 1 < samples.size()) {
      samples[k].z_s_ddot = (samples[k + 1].z_s_dot - samples[k].z_s_dot) / dt;
    } else {
      samples[k].z_s_ddot = samples[k - 1].z_s_ddot;
    }
  }
  return Trajectory(dt, std::move(samples));
}

PointCloud reachable_tube_estimate(const ModelPair& pair, const ClosedLoop& law,
                                   const std::vector<Vec>& seeds, double tau,
                                   const IntegratorConfig& cfg) {
  if (seeds.empty()) throw ConfigError("reachable tube needs at least one seed");
  if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
  IntegratorConfig tube_cfg = cfg;
  tube_cfg.horizon = tau;
  tube_cfg.validate();

  PointCloud cloud;
  for (const auto& seed : seeds) {
    const Trajectory traj = integrate(pair, law, seed, tube_cfg);
    for (const auto& s : traj.samples()) cloud.points.push_back(s.x);
  }
  std::sort(cloud.points.begin(), cloud.points.end(), lex_less);
  cloud.points.erase(std::unique(cloud.points.begin(), cloud.points.end(),
                                 [](const Vec& a, const Vec& b) { return a == b; }),
                     cloud.points.end());
  cloud.lower = cloud.points.front();
  cloud.upper = cloud.points.front();
  for (const auto& p : cloud.points) {
    cloud.lower = cloud.lower.cwiseMin(p);
    cloud.upper = cloud.upper.cwiseMax(p);
  }
  return cloud;
}

}  // namespace layersafe
