#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace layersafe {

/// Largest supported state/input dimension. Vectors stay dynamically sized
/// but live inline, which keeps rollouts free of heap traffic.
inline constexpr int kMaxDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

/// Declared dimensions of a full-order / reduced-order model pair.
struct ModelDims {
  int fom_state = 4;   // N
  int fom_input = 2;   // M
  int rom_state = 2;   // n
  int rom_input = 2;   // m
};

/// Full-order dynamics xdot = F(x,u), reduced-order dynamics zdot = f(z,v),
/// and the projections z = Pi(x), v = Psi(x) linking them.
struct ModelPair {
  ModelDims dims;
  std::function<Vec(const Vec& x, const Vec& u)> fom_field;
  std::function<Vec(const Vec& z, const Vec& v)> rom_field;
  std::function<Vec(const Vec& x)> project_state;
  std::function<Vec(const Vec& x)> project_input;
  /// Jacobian of project_state at x (n x N).
  std::function<Mat(const Vec& x)> project_state_jacobian;
  /// True when f(z,v) = v, which makes the CBF condition trivially satisfiable.
  bool rom_single_integrator = false;
};

/// Position/velocity double integrator in the plane: FoM xddot_pos = u, RoM zdot = v.
/// Throws ConfigError unless dims are N=4, n=2, M=2, m=2.
ModelPair double_integrator_pair(const ModelDims& dims = {});

/// || dPi/dx * F(x,u) - f(Pi(x), Psi(x)) ||; zero when the relative-degree interface holds.
double relative_degree_residual(const ModelPair& pair, const Vec& x, const Vec& u);

/// Everything a feedback law reports at one state.
struct LawOutput {
  Vec u;           // commanded FoM input
  Vec z_dot_d;     // desired RoM velocity
  Vec z_dot_s;     // filtered (safe) RoM velocity
  bool active = false;
  double h = std::numeric_limits<double>::quiet_NaN();
  Vec grad_h;
};

/// State feedback u = K(x, k(Pi(x))) with its intermediates exposed for logging.
class ClosedLoop {
 public:
  virtual ~ClosedLoop() = default;
  virtual LawOutput evaluate(const Vec& x) const = 0;
  // Discrete branch of a piecewise-smooth law; the integrator splits any step
  // across which it changes. -1 means smooth everywhere.
  virtual int mode(const Vec& /*x*/) const { return -1; }
  // The law continued smoothly on one branch, also past its boundary.
  virtual LawOutput evaluate_in_mode(const Vec& x, int /*mode*/) const { return evaluate(x); }
};

/// Derived per-sample quantities that depend on a tracking certificate.
struct SampleMetrics {
  /// V(z, edot); defaults to the Euclidean norm of edot.
  std::function<double(const Vec& z, const Vec& e_dot)> tracking;
  /// Scale in h_V = -V + alpha_e * h. NaN leaves h_V unset (NaN).
  double alpha_e = std::numeric_limits<double>::quiet_NaN();
};

struct IntegratorConfig {
  enum class Method { rk4 };
  double dt = 1e-3;
  double horizon = 10.0;
  Method method = Method::rk4;

  void validate() const;
  std::size_t steps() const;
};

/// Additive disturbance on the FoM input channel, F(x, u + d(t)).
using InputSignal = std::function<Vec(double t)>;

struct Sample {
  double t = 0.0;
  Vec x;
  Vec z;
  Vec z_dot;
  Vec z_s;        // integrated safe reference, z_s(0) = z(0)
  Vec z_s_dot;
  Vec z_s_ddot;   // finite difference of z_s_dot across samples
  Vec z_dot_d;
  Vec e;
  Vec e_dot;
  Vec u;
  double h = std::numeric_limits<double>::quiet_NaN();
  Vec grad_h;
  double V = std::numeric_limits<double>::quiet_NaN();
  double h_V = std::numeric_limits<double>::quiet_NaN();
  bool filter_active = false;
};

/// Uniformly sampled rollout. Immutable once built.
class Trajectory {
 public:
  /// Validates strictly increasing timestamps with uniform spacing dt.
  Trajectory(double dt, std::vector<Sample> samples);

  double dt() const noexcept { return dt_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  const Sample& operator[](std::size_t k) const { return samples_[k]; }
  const Sample& front() const { return samples_.front(); }
  const Sample& back() const { return samples_.back(); }
  std::span<const Sample> samples() const noexcept { return samples_; }
  double horizon() const { return samples_.back().t - samples_.front().t; }

  std::vector<double> series(const std::function<double(const Sample&)>& f) const;

 private:
  double dt_;
  std::vector<Sample> samples_;
};

struct RolloutOptions {
  InputSignal disturbance;  // empty: none
  SampleMetrics metrics;
};

/// Fixed-step RK4 rollout of the closed loop over [0, horizon]. The safe
/// reference z_s is integrated alongside x with z_s_dot re-evaluated at
/// every stage. A step across a change of law.mode() is split at the
/// bisected switch time; the sample grid stays uniform. Throws
/// DivergenceError on the first non-finite step.
Trajectory integrate(const ModelPair& pair, const ClosedLoop& law, const Vec& x0,
                     const IntegratorConfig& cfg, const RolloutOptions& opts = {});

struct PointCloud {
  std::vector<Vec> points;
  Vec lower;
  Vec upper;
};

/// Union of all samples over [0, tau] from every seed (exact duplicates removed).
PointCloud reachable_tube_estimate(const ModelPair& pair, const ClosedLoop& law,
                                   const std::vector<Vec>& seeds, double tau,
                                   const IntegratorConfig& cfg);

}  // namespace layersafe
