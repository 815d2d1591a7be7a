#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "layersafe/barrier.hpp"
#include "layersafe/dynamics.hpp"

namespace layersafe {

/// Recurrent tracking function V(z, edot) with its linear sandwich constants
/// a1 ||edot|| <= V <= a2 ||edot||, recurrence rate beta and window tau.
struct Rtf {
  std::function<double(const Vec& z, const Vec& e_dot)> value;
  double a1 = 1.0;
  double a2 = 1.0;
  double beta = 0.0;
  double tau = 0.0;  // s
};

/// V = ||edot|| (Euclidean) with the declared constants.
Rtf norm_rtf(double a1, double a2, double beta, double tau);

/// h_V(z, edot) = -V(z, edot) + alpha_e h(z) with
/// alpha_e = a1^2 (beta - alpha) / (a2 C_h M).
struct RecurrentCbf {
  Rtf rtf;
  BarrierFn barrier;
  double alpha = 0.0;
  double alpha_e = 0.0;
  double m_overshoot = 0.0;
  double grad_bound = 1.0;  // C_h

  double value(const Vec& z, const Vec& e_dot) const;
};

/// Throws HypothesisError when beta <= alpha, ConfigError for non-positive C_h or M.
RecurrentCbf build_rcbf(const Rtf& rtf, const BarrierFn& b, double alpha, double m_overshoot);

double rcbf_alpha_e(double a1, double a2, double beta, double alpha, double grad_bound,
                    double m_overshoot);

/// (z, edot) in S_V, i.e. h(z) >= V(z, edot) / alpha_e.
bool in_recurrent_set(const RecurrentCbf& rcbf, const Vec& z, const Vec& e_dot);

/// Per-sample V and h_V for integrate().
SampleMetrics metrics_for(const RecurrentCbf& rcbf);
SampleMetrics metrics_for(const Rtf& rtf);

using SamplePredicate = std::function<bool(const Sample&)>;

/// Always-true membership predicate.
SamplePredicate whole_space();

/// Half-open window (start, start + length].
struct TimeWindow {
  double start = 0.0;
  double length = 0.0;
};

/// Sample times inside a window at which a trajectory lies in a set.
struct ContainmentTimes {
  const Trajectory* traj = nullptr;
  TimeWindow window;
  std::vector<std::size_t> indices;  // sample indices in the window with the predicate true
  std::vector<double> times_in;
  bool empty() const noexcept { return times_in.empty(); }
};

/// A sample at time t is in (a, a+b] when t > a and t <= a + b + dt/2.
/// Throws RangeError when the window runs past the recorded horizon.
ContainmentTimes containment_times(const Trajectory& traj, const SamplePredicate& predicate,
                                   TimeWindow window);

struct RtfRecurrence {
  bool satisfied = false;
  std::optional<double> witness_t;
  double margin = 0.0;  // V(0) - min_t e^{beta t} V(t), -inf when no containment time
};

/// min over containment times t in (0, tau] of e^{beta t} V(t) <= V(0).
RtfRecurrence check_rtf_recurrence(const Rtf& rtf, const Trajectory& traj,
                                   const SamplePredicate& in_set = whole_space());

/// Shared core of the nominal and disturbance-shifted recurrence checks:
/// min e^{beta t} (V(t) - shift) <= V(0) - shift.
RtfRecurrence check_shifted_recurrence(const Rtf& rtf, const Trajectory& traj, double shift,
                                       const SamplePredicate& in_set);

struct EnvelopeCheck {
  bool holds = false;
  double worst_ratio = 0.0;
  std::optional<double> worst_t;
};

/// ||edot(t)|| <= m e^{-beta t} ||edot(0)|| at every sample (relative tolerance 1e-9).
EnvelopeCheck check_exponential_envelope(const Trajectory& traj, double beta, double m);

struct RcbfRecurrence {
  bool satisfied = false;
  std::optional<double> return_time;
};

/// Exists t in (0, tau] with the state in the set and e^{gamma_rate t} h_V(t) >= h_V(0).
RcbfRecurrence check_rcbf_recurrence(const RecurrentCbf& rcbf, const Trajectory& traj,
                                     double gamma_rate,
                                     const SamplePredicate& in_set = whole_space());

/// Trajectory-level evaluation of the safety lower bounds on h(z(t)).
struct ChainReport {
  /// h(t) - [e^{-alpha t} h(0) - C_h int_0^t e^{-alpha (t-s)} ||edot(s)|| ds]
  double min_integral_slack = 0.0;
  double min_integral_slack_t = 0.0;
  /// h(t) - [e^{-alpha t} h(0) - C_h M/(beta-alpha) e^{-alpha t}(1 - e^{-(beta-alpha)t}) ||edot(0)||]
  double min_exponential_slack = 0.0;
  /// h(t) - e^{-alpha t} V(0) C_h M/(a1 (beta - alpha)) (a2/a1 - 1)
  double min_closed_form_slack = 0.0;
  std::vector<double> integral_bound;  // per-sample right-hand side of the integral bound
  bool holds(double tol) const { return min_integral_slack >= -tol; }
};

ChainReport check_safety_chain(const Trajectory& traj, const RecurrentCbf& rcbf);

/// Maximal runs of consecutive samples where a predicate holds.
struct Interval {
  double begin = 0.0;  // first sample time inside
  double end = 0.0;    // last sample time inside
  std::size_t first = 0;
  std::size_t last = 0;
  double duration(double dt) const { return end - begin + dt; }
};
std::vector<Interval> intervals_where(const Trajectory& traj, const SamplePredicate& predicate);

}  // namespace layersafe
