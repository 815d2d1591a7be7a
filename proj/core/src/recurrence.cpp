#include "layersafe/recurrence.hpp"

#include <cmath>
#include <limits>

#include "layersafe/errors.hpp"

namespace layersafe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double rel_tol(double scale) { return 1e-12 * std::max(1.0, std::abs(scale)); }

}  // namespace

Rtf norm_rtf(double a1, double a2, double beta, double tau) {
  if (!(a1 > 0.0) || !(a2 >= a1)) throw ConfigError("rtf constants need 0 < a1 <= a2");
  if (!(beta > 0.0)) throw ConfigError("rtf.beta must be > 0");
  if (!(tau > 0.0)) throw ConfigError("rtf.tau must be > 0");
  Rtf rtf;
  rtf.value = [](const Vec& /*z*/, const Vec& e_dot) { return e_dot.norm(); };
  rtf.a1 = a1;
  rtf.a2 = a2;
  rtf.beta = beta;
  rtf.tau = tau;
  return rtf;
}

double RecurrentCbf::value(const Vec& z, const Vec& e_dot) const {
  return -rtf.value(z, e_dot) + alpha_e * barrier.value(Vec2(z));
}

double rcbf_alpha_e(double a1, double a2, double beta, double alpha, double grad_bound,
                    double m_overshoot) {
  return a1 * a1 * (beta - alpha) / (a2 * grad_bound * m_overshoot);
}

RecurrentCbf build_rcbf(const Rtf& rtf, const BarrierFn& b, double alpha, double m_overshoot) {
  if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
  if (!(m_overshoot > 0.0) || !std::isfinite(m_overshoot)) {
    throw ConfigError("overshoot constant M must be finite and > 0");
  }
  if (!(b.grad_bound() > 0.0)) throw ConfigError("gradient bound C_h must be > 0");
  if (!(rtf.beta > alpha)) {
    throw HypothesisError("recurrent CBF construction requires beta > alpha (beta=" +
                          std::to_string(rtf.beta) + ", alpha=" + std::to_string(alpha) + ")");
  }
  RecurrentCbf out{rtf, b, alpha, 0.0, m_overshoot, b.grad_bound()};
  out.alpha_e = rcbf_alpha_e(rtf.a1, rtf.a2, rtf.beta, alpha, out.grad_bound, m_overshoot);
  return out;
}

bool in_recurrent_set(const RecurrentCbf& rcbf, const Vec& z, const Vec& e_dot) {
  return rcbf.value(z, e_dot) >= 0.0;
}

SampleMetrics metrics_for(const RecurrentCbf& rcbf) {
  SampleMetrics m;
  m.tracking = rcbf.rtf.value;
  m.alpha_e = rcbf.alpha_e;
  return m;
}

SampleMetrics metrics_for(const Rtf& rtf) {
  SampleMetrics m;
  m.tracking = rtf.value;
  return m;
}

SamplePredicate whole_space() {
  return [](const Sample&) { return true; };
}

ContainmentTimes containment_times(const Trajectory& traj, const SamplePredicate& predicate,
                                   TimeWindow window) {
  const double dt = traj.dt();
  const double t_first = traj.front().t;
  const double t_last = traj.back().t;
  if (window.length < 0.0 || window.start < t_first - 0.5 * dt ||
      window.start + window.length > t_last + 0.5 * dt) {
    throw RangeError("containment window (" + std::to_string(window.start) + ", " +
                     std::to_string(window.start + window.length) + "] exceeds horizon [" +
                     std::to_string(t_first) + ", " + std::to_string(t_last) + "]");
  }
  ContainmentTimes out;
  out.traj = &traj;
  out.window = window;
  const double lo = window.start + 1e-9 * dt;
  const double hi = window.start + window.length + 0.5 * dt;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const Sample& s = traj[k];
    if (s.t <= lo) continue;
    if (s.t > hi) break;
    if (predicate(s)) {
      out.indices.push_back(k);
      out.times_in.push_back(s.t);
    }
  }
  return out;
}

RtfRecurrence check_shifted_recurrence(const Rtf& rtf, const Trajectory& traj, double shift,
                                       const SamplePredicate& in_set) {
  const Sample& s0 = traj.front();
  const double v0 = rtf.value(s0.z, s0.e_dot) - shift;
  const ContainmentTimes ct = containment_times(traj, in_set, {s0.t, rtf.tau});

  RtfRecurrence out;
  if (ct.empty()) {
    out.margin = -kInf;
    return out;
  }
  double best = kInf;
  for (std::size_t idx : ct.indices) {
    const Sample& s = traj[idx];
    const double weighted = std::exp(rtf.beta * (s.t - s0.t)) * (rtf.value(s.z, s.e_dot) - shift);
    if (weighted < best) {
      best = weighted;
      out.witness_t = s.t;
    }
  }
  out.margin = v0 - best;
  out.satisfied = out.margin >= -rel_tol(v0);
  return out;
}

RtfRecurrence check_rtf_recurrence(const Rtf& rtf, const Trajectory& traj,
                                   const SamplePredicate& in_set) {
  return check_shifted_recurrence(rtf, traj, 0.0, in_set);
}

EnvelopeCheck check_exponential_envelope(const Trajectory& traj, double beta, double m) {
  const Sample& s0 = traj.front();
  const double e0 = s0.e_dot.norm();
  EnvelopeCheck out;
  if (e0 == 0.0) {
    out.holds = true;
    for (const auto& s : traj.samples()) {
      if (s.e_dot.norm() != 0.0) {
        out.holds = false;
        out.worst_ratio = kInf;
        out.worst_t = s.t;
        break;
      }
    }
    return out;
  }
  out.holds = true;
  for (const auto& s : traj.samples()) {
    const double bound = m * std::exp(-beta * (s.t - s0.t)) * e0;
    const double err = s.e_dot.norm();
    const double ratio = err / bound;
    if (ratio > out.worst_ratio || !out.worst_t) {
      out.worst_ratio = ratio;
      out.worst_t = s.t;
    }
    if (err > (1.0 + 1e-9) * bound) out.holds = false;
  }
  return out;
}

RcbfRecurrence check_rcbf_recurrence(const RecurrentCbf& rcbf, const Trajectory& traj,
                                     double gamma_rate, const SamplePredicate& in_set) {
  const Sample& s0 = traj.front();
  const double hv0 = rcbf.value(s0.z, s0.e_dot);
  const ContainmentTimes ct = containment_times(traj, in_set, {s0.t, rcbf.rtf.tau});
  RcbfRecurrence out;
  for (std::size_t idx : ct.indices) {
    const Sample& s = traj[idx];
    const double weighted = std::exp(gamma_rate * (s.t - s0.t)) * rcbf.value(s.z, s.e_dot);
    if (weighted >= hv0 - rel_tol(hv0)) {
      out.satisfied = true;
      out.return_time = s.t;
      break;
    }
  }
  return out;
}

ChainReport check_safety_chain(const Trajectory& traj, const RecurrentCbf& rcbf) {
  const double alpha = rcbf.alpha;
  const double ch = rcbf.grad_bound;
  const double m = rcbf.m_overshoot;
  const double beta = rcbf.rtf.beta;
  const double a1 = rcbf.rtf.a1;
  const double a2 = rcbf.rtf.a2;

  const Sample& s0 = traj.front();
  const double h0 = s0.h;
  const double e0 = s0.e_dot.norm();
  const double v0 = rcbf.rtf.value(s0.z, s0.e_dot);
  const double closed_form_gain = ch * m / (a1 * (beta - alpha)) * (a2 / a1 - 1.0);

  ChainReport out;
  out.min_integral_slack = kInf;
  out.min_exponential_slack = kInf;
  out.min_closed_form_slack = kInf;
  out.integral_bound.reserve(traj.size());

  // I(t) = int_0^t e^{alpha s} ||edot(s)|| ds by the trapezoid rule
  double integral = 0.0;
  double prev_integrand = e0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const Sample& s = traj[k];
    const double t = s.t - s0.t;
    const double integrand = std::exp(alpha * t) * s.e_dot.norm();
    if (k > 0) integral += 0.5 * traj.dt() * (prev_integrand + integrand);
    prev_integrand = integrand;

    const double decay = std::exp(-alpha * t);
    const double integral_rhs = decay * (h0 - ch * integral);
    const double exp_rhs =
        decay * h0 - ch * m / (beta - alpha) * decay * (1.0 - std::exp(-(beta - alpha) * t)) * e0;
    const double closed_rhs = decay * v0 * closed_form_gain;
    out.integral_bound.push_back(integral_rhs);

    const double slack = s.h - integral_rhs;
    if (slack < out.min_integral_slack) {
      out.min_integral_slack = slack;
      out.min_integral_slack_t = s.t;
    }
    out.min_exponential_slack = std::min(out.min_exponential_slack, s.h - exp_rhs);
    out.min_closed_form_slack = std::min(out.min_closed_form_slack, s.h - closed_rhs);
  }
  return out;
}

std::vector<Interval> intervals_where(const Trajectory& traj, const SamplePredicate& predicate) {
  std::vector<Interval> out;
  bool open = false;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const bool inside = predicate(traj[k]);
    if (inside && !open) {
      out.push_back({traj[k].t, traj[k].t, k, k});
      open = true;
    } else if (inside) {
      out.back().end = traj[k].t;
      out.back().last = k;
    } else {
      open = false;
    }
  }
  return out;
}

}  // namespace layersafe
