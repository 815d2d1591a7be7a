#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "layersafe/recurrence.hpp"
#include "layersafe/scenario.hpp"

namespace layersafe {

/// Axis-aligned lattice; point index runs with the first axis fastest.
struct Grid {
  Vec lower;
  Vec upper;
  std::vector<int> counts;

  /// Throws ConfigError unless lower < upper and counts >= 2 on every axis.
  void validate() const;
  int dims() const noexcept { return static_cast<int>(counts.size()); }
  std::size_t size() const;
  Vec point(std::size_t index) const;
};

/// Position grid from the scenario's certify settings.
Grid position_grid(const Scenario& s);

/// `pos:NxM` over the scenario's position box, or `state:AxBxCxD` over
/// position x velocity with velocity box [-vmax, vmax]^2.
Grid parse_grid_spec(const std::string& spec, const Scenario& s, double vmax = 1.0);

enum class Verdict { certified_safe, unsafe_witness, outside_S_V, indeterminate };
inline constexpr std::array<Verdict, 4> kAllVerdicts = {
    Verdict::certified_safe, Verdict::unsafe_witness, Verdict::outside_S_V, Verdict::indeterminate};
std::string to_string(Verdict v);

/// Enough to replay a counterexample rollout exactly.
struct WitnessRef {
  Vec x0;
  double alpha = 0.0;
  double dt = 0.0;
  double horizon = 0.0;
};

struct PointResult {
  Vec point;
  Vec x0;
  Verdict verdict = Verdict::indeterminate;
  bool in_s_v = false;
  bool rolled_out = false;
  double h0 = 0.0;
  double h_V0 = 0.0;     // NaN when no recurrent CBF exists (beta <= alpha)
  double min_h = 0.0;    // h0 when not rolled out
  double min_h_V = 0.0;
  std::optional<double> first_violation_t;  // first sample with h < 0
  bool rtf_satisfied = false;
  bool envelope_holds = false;
  std::optional<WitnessRef> witness;
  std::string note;
};

struct CertificateReport {
  std::string scenario_digest;
  std::string resolved_config;
  Grid grid;
  double alpha = 0.0;
  double horizon = 0.0;
  VelocityMode velocity = VelocityMode::desired;
  std::vector<PointResult> per_point;
  std::vector<std::string> notes;

  std::size_t count(Verdict v) const;
  /// unsafe_witness points that started inside S_V.
  std::size_t unsafe_in_s_v() const;
};

struct CertifyOptions {
  double alpha = 0.5;
  VelocityMode velocity = VelocityMode::desired;  // 2-D grids only
  int workers = 1;
};

/// Unsafe if min_h falls below this; certified_safe needs min_h >= -kSafetyTol.
inline constexpr double kSafetyTol = 1e-6;

/// Classifies every lattice point; results are in lattice order for any worker count.
/// Points with h(z0) >= 0 are rolled out whether or not they lie in S_V.
CertificateReport certify_initial_set(const Scenario& s, const Grid& grid, double horizon,
                                      const CertifyOptions& opts);
CertificateReport certify_initial_set(const Scenario& s, const Grid& grid, double horizon);

/// min h over a re-integration of the witness at dt / refine.
double replay_witness(const Scenario& s, const WitnessRef& w, int refine = 10);

/// Times in (0, tau] at which a dt_fine rollout from x0 satisfies the predicate.
/// Throws ConfigError unless dt_fine <= coarse dt / 10.
std::vector<double> brute_force_containment_oracle(const Scenario& s, double alpha, const Vec& x0,
                                                   const SamplePredicate& predicate, double tau,
                                                   double dt_fine);

/// max over coarse times of the distance to the nearest fine time (+inf if fine is empty
/// and coarse is not, 0 if coarse is empty).
double containment_gap(const std::vector<double>& coarse, const std::vector<double>& fine);

/// Empirical lower bound on the Lipschitz constant of a state field over the
/// region's box: max ||F(y) - F(x)|| / ||y - x|| over random and nearby pairs.
double estimate_lipschitz(const std::function<Vec(const Vec&)>& field, const Grid& region,
                          int samples, std::uint64_t seed);

struct UnsafeState {
  Vec point;
  double min_h = 0.0;
  std::optional<double> first_violation_t;
  bool in_s_v = false;
};

std::vector<UnsafeState> find_unsafe_initial_states(const CertificateReport& report);
std::vector<UnsafeState> find_unsafe_initial_states(const Scenario& s, const Grid& grid,
                                                    double horizon, const CertifyOptions& opts);

}  // namespace layersafe
