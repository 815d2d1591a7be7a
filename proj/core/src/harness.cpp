#include "layersafe/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "layersafe/errors.hpp"
#include "layersafe/io.hpp"

namespace layersafe {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::map<std::string, std::vector<double>> series_of(const Trajectory& traj) {
  std::map<std::string, std::vector<double>> out;
  out["h"] = traj.series([](const Sample& s) { return s.h; });
  out["V"] = traj.series([](const Sample& s) { return s.V; });
  out["h_V"] = traj.series([](const Sample& s) { return s.h_V; });
  out["zdot_d"] = traj.series([](const Sample& s) { return s.z_dot_d.norm(); });
  out["zdot_s"] = traj.series([](const Sample& s) { return s.z_s_dot.norm(); });
  out["zdot"] = traj.series([](const Sample& s) { return s.z_dot.norm(); });
  out["edot"] = traj.series([](const Sample& s) { return s.e_dot.norm(); });
  return out;
}

std::string summary_line(const RunSummary& r) {
  std::ostringstream out;
  out << "alpha=" << format_double(r.alpha) << " min_h=" << format_g17(r.min_h)
      << " min_h_V=" << format_g17(r.min_h_V) << " h_V0=" << format_g17(r.h_V0)
      << " in_S_V=" << (r.in_s_v ? 1 : 0) << " envelope=" << (r.envelope_holds ? 1 : 0)
      << " rtf=" << (r.rtf_satisfied ? 1 : 0) << " chain_slack=" << format_g17(r.chain_slack)
      << " filter_active_time=" << format_g17(r.filter_active_time)
      << " edot_final=" << format_g17(r.edot_final);
  if (!r.note.empty()) out << " note=\"" << r.note << "\"";
  return out.str();
}

void write_if(const OutputOptions& out, const std::string& name, std::string_view content,
              std::filesystem::path* where) {
  if (!out.dir) return;
  const auto path = *out.dir / name;
  write_file_atomic(path, content);
  if (where) *where = path;
}

template <class F>
void parallel_for(std::size_t n, int workers, F&& fn) {
  const auto w = std::min<std::size_t>(std::max(1, workers), n);
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex m;
  std::vector<std::thread> pool;
  for (std::size_t k = 0; k < w; ++k) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(m);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

RunArtifacts simulate_run(const Scenario& s, double alpha, const OutputOptions& out,
                          const std::string& stem) {
  const ModelPair pair = s.model();
  const ClosedLoopLaw law = s.law(alpha);
  const Rtf rtf = s.rtf_fn();
  std::optional<RecurrentCbf> rcbf;
  RunSummary sum;
  sum.alpha = alpha;
  if (s.rtf.beta > alpha) {
    rcbf = s.rcbf(alpha);
    sum.hypothesis_ok = true;
  } else {
    sum.note = "beta <= alpha: recurrent CBF undefined";
  }

  RolloutOptions ro;
  ro.metrics = rcbf ? metrics_for(*rcbf) : metrics_for(rtf);
  Trajectory traj =
      integrate(pair, law, s.initial_state(s.start, s.start_velocity, alpha), s.integrator, ro);

  const Sample& s0 = traj.front();
  sum.h0 = s0.h;
  sum.h_V0 = s0.h_V;
  sum.in_s_v = rcbf && s0.h_V >= 0.0;
  sum.min_h = s0.h;
  sum.min_h_V = rcbf ? s0.h_V : kNaN;
  std::size_t active = 0;
  for (const auto& smp : traj.samples()) {
    sum.min_h = std::min(sum.min_h, smp.h);
    if (rcbf) sum.min_h_V = std::min(sum.min_h_V, smp.h_V);
    if (smp.filter_active) ++active;
  }
  sum.filter_active_time = static_cast<double>(active) * traj.dt();
  sum.edot_final = traj.back().e_dot.norm();
  sum.envelope_holds = check_exponential_envelope(traj, s.rtf.beta, s.rtf.m_overshoot).holds;
  if (traj.horizon() >= rtf.tau) sum.rtf_satisfied = check_rtf_recurrence(rtf, traj).satisfied;
  sum.chain_slack = rcbf ? check_safety_chain(traj, *rcbf).min_integral_slack : kNaN;

  RunArtifacts art;
  art.series = series_of(traj);
  art.summary = sum;
  if (out.dir) {
    write_if(out, stem + ".csv", trajectory_csv(traj, provenance_header(s)), &art.trajectory_csv);
  }
  art.trajectory.emplace(std::move(traj));
  return art;
}

std::vector<RunArtifacts> run_case_study(const Scenario& s, const std::vector<double>& alphas,
                                         const OutputOptions& out) {
  if (alphas.empty()) throw ConfigError("case study needs at least one alpha");
  for (double a : alphas) {
    if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("alpha values must be > 0");
  }
  std::vector<RunArtifacts> runs(alphas.size());
  parallel_for(alphas.size(), out.workers, [&](std::size_t i) {
    runs[i] = simulate_run(s, alphas[i], out, "case_study_alpha_" + format_double(alphas[i]));
  });

  if (out.dir) {
    std::string text = provenance_header(s);
    for (const auto& r : runs) text += summary_line(r.summary) + "\n";
    std::filesystem::path report;
    write_if(out, "case_study_summary.txt", text, &report);
    write_if(out, "plot_case_study.py", plot_script(), nullptr);
    for (auto& r : runs) r.report = report;
  }
  return runs;
}

DemoResult run_recurrence_demo(const Scenario& s, const OutputOptions& out) {
  if (!(s.rtf.beta > s.gains.alpha)) {
    throw HypothesisError("recurrence demo requires beta > alpha");
  }
  DemoResult d;
  d.run = simulate_run(s, s.gains.alpha, out, "recurrence_demo");
  const Trajectory& traj = *d.run.trajectory;
  d.dips = intervals_where(traj, [](const Sample& smp) { return smp.h_V < 0.0; });
  for (const auto& iv : d.dips) d.max_dip = std::max(d.max_dip, iv.duration(traj.dt()));
  const auto& V = d.run.series.at("V");
  std::size_t rising = 0;
  for (std::size_t k = 1; k < V.size(); ++k) {
    if (V[k] > V[k - 1]) ++rising;
  }
  d.v_increase_time = static_cast<double>(rising) * traj.dt();
  d.safe = d.run.summary.min_h >= -kSafetyTol;

  std::ostringstream text;
  text << provenance_header(s) << summary_line(d.run.summary) << "\n";
  if (d.dips.empty()) {
    d.note = "no h_V dip on this run";
  } else if (d.max_dip >= s.rtf.tau) {
    d.note = "h_V dip not shorter than tau";
  }
  if (d.v_increase_time == 0.0) d.note += d.note.empty() ? "V never increases" : "; V never increases";
  text << "dips " << d.dips.size() << " max_dip=" << format_g17(d.max_dip)
       << " v_increase_time=" << format_g17(d.v_increase_time) << " safe=" << (d.safe ? 1 : 0) << "\n";
  for (const auto& iv : d.dips) {
    text << "dip begin=" << format_g17(iv.begin) << " end=" << format_g17(iv.end)
         << " duration=" << format_g17(iv.duration(traj.dt())) << "\n";
  }
  if (!d.note.empty()) text << "note " << d.note << "\n";
  write_if(out, "recurrence_demo.txt", text.str(), &d.run.report);
  return d;
}

IssResult run_iss(const Scenario& s, const DisturbanceSpec& spec, const OutputOptions& out) {
  const double alpha = s.gains.alpha;
  const RecurrentCbf rcbf = s.rcbf(alpha);
  const ModelPair pair = s.model();
  const ClosedLoopLaw law = s.law(alpha);

  IssResult r;
  r.disturbance = make_disturbance(spec, pair.dims.fom_input);
  if (s.iss_gain) {
    r.iss_gain = *s.iss_gain;
  } else {
    const double probe = r.disturbance.sup_norm > 0.0 ? r.disturbance.sup_norm : 0.1;
    r.iss_gain = estimate_iss_gain(law, default_calibration_disturbances(probe, spec.seed), s.integrator);
  }
  r.env = make_iss_envelope(rcbf, linear_class_k(r.iss_gain), r.disturbance.sup_norm);

  RolloutOptions ro;
  ro.metrics = metrics_for(rcbf);
  ro.disturbance = r.disturbance.signal;
  const Vec x0 = s.initial_state();
  Trajectory traj = integrate(pair, law, x0, s.integrator, ro);
  const Sample& s0 = traj.front();
  r.in_robust_set = in_robust_set(rcbf, r.env, s0.z, s0.e_dot);
  r.iss = check_iss_envelope(traj, r.env);
  r.practical = check_practical_rtf(rcbf.rtf, traj, r.env);

  RunSummary& sum = r.run.summary;
  sum.alpha = alpha;
  sum.hypothesis_ok = true;
  sum.h0 = s0.h;
  sum.h_V0 = s0.h_V;
  sum.in_s_v = s0.h_V >= 0.0;
  sum.min_h = s0.h;
  sum.min_h_V = s0.h_V;
  for (const auto& smp : traj.samples()) {
    sum.min_h = std::min(sum.min_h, smp.h);
    sum.min_h_V = std::min(sum.min_h_V, smp.h_V);
  }
  sum.edot_final = traj.back().e_dot.norm();

  const Trajectory nominal = integrate(pair, law, x0, s.integrator, RolloutOptions{{}, metrics_for(rcbf)});
  // the forward difference at k-1 straddles a switch at k, so stop before it
  std::size_t cut = nominal.size();
  if (const auto sw = barrier_switch_indices(nominal); !sw.empty()) {
    r.first_switch_t = nominal[sw.front()].t;
    cut = std::max<std::size_t>(sw.front() - 1, 1);
  }
  const Trajectory prefix(nominal.dt(), std::vector<Sample>(nominal.samples().begin(),
                                                            nominal.samples().begin() + cut));
  r.filter_accel_sup = reference_acceleration_sup(prefix, true);
  const IssEnvelope filter_env =
      make_iss_envelope(rcbf, linear_class_k(1.0 / s.gains.k_d), r.filter_accel_sup);
  r.filter_reading = check_iss_envelope(prefix, filter_env);

  r.run.series = series_of(traj);
  if (out.dir) {
    write_if(out, "iss.csv", trajectory_csv(traj, provenance_header(s)), &r.run.trajectory_csv);
    std::ostringstream text;
    text << provenance_header(s) << "disturbance " << to_string(spec.kind)
         << " amplitude=" << format_g17(spec.amplitude) << " frequency=" << format_g17(spec.frequency)
         << " seed=" << spec.seed << "\n";
    text << "iss_gain " << format_g17(r.iss_gain) << (s.iss_gain ? " (scenario)" : " (calibrated)") << "\n";
    text << "iota " << format_g17(r.env.iota) << " gamma " << format_g17(r.env.gamma_margin) << "\n";
    text << "in_S_Vd " << (r.in_robust_set ? 1 : 0) << " min_h " << format_g17(sum.min_h) << "\n";
    text << "iss_envelope " << (r.iss.holds ? 1 : 0) << " worst_excess " << format_g17(r.iss.worst_excess) << "\n";
    text << "practical_rtf " << (r.practical.satisfied ? 1 : 0) << " margin "
         << format_g17(r.practical.margin) << "\n";
    text << "filter_accel_sup " << format_g17(r.filter_accel_sup) << " envelope "
         << (r.filter_reading.holds ? 1 : 0);
    if (r.first_switch_t) text << " until_switch " << format_g17(*r.first_switch_t);
    text << "\n";
    write_if(out, "iss_report.txt", text.str(), &r.run.report);
  }
  r.run.trajectory.emplace(std::move(traj));
  return r;
}

CertifyRun run_certify(const Scenario& s, const Grid& grid, const CertifyOptions& opts,
                       const OutputOptions& out) {
  CertifyRun run;
  run.report = certify_initial_set(s, grid, s.integrator.horizon, opts);
  const std::string stem = "certificate_alpha_" + format_double(opts.alpha);
  write_if(out, stem + ".txt", certificate_text(run.report), &run.report_path);
  write_if(out, stem + "_points.csv", point_cloud_csv(run.report), &run.cloud_path);
  return run;
}

MetricSet metrics_of(const RunSummary& r) {
  MetricSet m;
  auto add = [&](const char* name, double v) { m.push_back({name, r.alpha, v}); };
  add("min_h", r.min_h);
  if (r.hypothesis_ok) {
    add("min_h_V", r.min_h_V);
    add("h_V0", r.h_V0);
    add("chain_slack", r.chain_slack);
  }
  add("edot_final", r.edot_final);
  add("envelope_holds", r.envelope_holds ? 1.0 : 0.0);
  add("rtf_satisfied", r.rtf_satisfied ? 1.0 : 0.0);
  add("filter_active_time", r.filter_active_time);
  return m;
}

MetricSet metrics_of(const DemoResult& d) {
  MetricSet m = metrics_of(d.run.summary);
  const double a = d.run.summary.alpha;
  m.push_back({"dip_count", a, static_cast<double>(d.dips.size())});
  m.push_back({"max_dip", a, d.max_dip});
  m.push_back({"v_increase_time", a, d.v_increase_time});
  return m;
}

MetricSet metrics_of(const IssResult& r) {
  const double a = r.run.summary.alpha;
  MetricSet m;
  m.push_back({"min_h", a, r.run.summary.min_h});
  m.push_back({"min_h_V", a, r.run.summary.min_h_V});
  m.push_back({"h_V0", a, r.run.summary.h_V0});
  m.push_back({"iss_holds", a, r.iss.holds ? 1.0 : 0.0});
  m.push_back({"practical_rtf_satisfied", a, r.practical.satisfied ? 1.0 : 0.0});
  m.push_back({"gamma_margin", a, r.env.gamma_margin});
  m.push_back({"iota", a, r.env.iota});
  return m;
}

MetricSet metrics_of(const CertificateReport& r) {
  MetricSet m;
  for (Verdict v : kAllVerdicts) m.push_back({to_string(v), r.alpha, static_cast<double>(r.count(v))});
  m.push_back({"unsafe_in_S_V", r.alpha, static_cast<double>(r.unsafe_in_s_v())});
  return m;
}

std::vector<ExpectationResult> evaluate_expectations(const Scenario& s, const MetricSet& metrics) {
  std::vector<ExpectationResult> out;
  for (const auto& e : s.expectations) {
    for (const auto& m : metrics) {
      if (m.name != e.metric) continue;
      if (e.alpha && (!m.alpha || std::abs(*m.alpha - *e.alpha) > 1e-12)) continue;
      out.push_back({e, true, e.accepts(m.value), m.value});
    }
    const bool seen = std::any_of(out.begin(), out.end(), [&](const ExpectationResult& r) {
      return r.expectation.text() == e.text();
    });
    if (!seen) out.push_back({e, false, true, kNaN});
  }
  return out;
}

bool all_passed(const std::vector<ExpectationResult>& results) {
  return std::all_of(results.begin(), results.end(),
                     [](const ExpectationResult& r) { return !r.applicable || r.passed; });
}

DisturbanceSpec parse_disturbance_arg(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  for (;;) {
    const auto c = text.find(':', pos);
    parts.push_back(text.substr(pos, c == std::string::npos ? std::string::npos : c - pos));
    if (c == std::string::npos) break;
    pos = c + 1;
  }
  DisturbanceSpec spec;
  spec.kind = parse_disturbance_kind(parts[0]);
  auto num = [&](std::size_t i) {
    try {
      std::size_t used = 0;
      const double v = std::stod(parts[i], &used);
      if (used != parts[i].size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + parts[i] + "' in disturbance '" + text + "'");
    }
  };
  if (parts.size() > 4) throw ConfigError("disturbance must read kind:amplitude[:frequency[:seed]]");
  if (spec.kind != DisturbanceKind::none && parts.size() < 2) {
    throw ConfigError("disturbance '" + text + "' needs an amplitude");
  }
  if (parts.size() > 1) spec.amplitude = num(1);
  if (parts.size() > 2) spec.frequency = num(2);
  if (parts.size() > 3) spec.seed = static_cast<std::uint64_t>(num(3));
  return spec;
}

}  // namespace layersafe
