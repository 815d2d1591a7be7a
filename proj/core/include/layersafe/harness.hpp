#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "layersafe/certify.hpp"
#include "layersafe/robustness.hpp"
#include "layersafe/scenario.hpp"

namespace layersafe {

struct OutputOptions {
  std::optional<std::filesystem::path> dir;  // nothing is written when empty
  int workers = 1;
};

struct RunSummary {
  double alpha = 0.0;
  bool hypothesis_ok = false;  // beta > alpha, so h_V exists
  bool in_s_v = false;
  double h0 = 0.0;
  double min_h = 0.0;
  double min_h_V = 0.0;
  double h_V0 = 0.0;
  double edot_final = 0.0;
  bool envelope_holds = false;
  bool rtf_satisfied = false;
  double chain_slack = 0.0;  // NaN without h_V
  double filter_active_time = 0.0;
  std::string note;
};

struct RunArtifacts {
  std::filesystem::path trajectory_csv;
  std::filesystem::path report;
  std::optional<Trajectory> trajectory;
  /// h, V, h_V, zdot_d, zdot_s, zdot, edot; norms for the vector quantities.
  std::map<std::string, std::vector<double>> series;
  RunSummary summary;
};

/// One rollout from the scenario start with gains.alpha replaced by `alpha`.
RunArtifacts simulate_run(const Scenario& s, double alpha, const OutputOptions& out,
                          const std::string& stem = "trajectory");

/// One rollout per alpha with everything else shared; writes
/// case_study_alpha_<a>.csv, case_study_summary.txt and plot_case_study.py.
std::vector<RunArtifacts> run_case_study(const Scenario& s, const std::vector<double>& alphas,
                                         const OutputOptions& out);

struct DemoResult {
  RunArtifacts run;
  std::vector<Interval> dips;  // maximal runs with h_V < 0
  double max_dip = 0.0;        // s
  double v_increase_time = 0.0;
  bool safe = false;           // min h >= -1e-6
  std::string note;
};

/// Throws HypothesisError when rtf.beta <= gains.alpha.
DemoResult run_recurrence_demo(const Scenario& s, const OutputOptions& out);

struct IssResult {
  RunArtifacts run;
  Disturbance disturbance;
  double iss_gain = 0.0;
  IssEnvelope env;
  bool in_robust_set = false;
  IssCheck iss;
  RtfRecurrence practical;
  /// Undisturbed run with d taken as sup ||zddot_s|| over filter-active samples
  /// and mu(r) = r / k_d, evaluated up to the first barrier switch.
  double filter_accel_sup = 0.0;
  IssCheck filter_reading;
  std::optional<double> first_switch_t;
};

IssResult run_iss(const Scenario& s, const DisturbanceSpec& spec, const OutputOptions& out);

struct CertifyRun {
  CertificateReport report;
  std::filesystem::path report_path;
  std::filesystem::path cloud_path;
};

CertifyRun run_certify(const Scenario& s, const Grid& grid, const CertifyOptions& opts,
                       const OutputOptions& out);

struct Metric {
  std::string name;
  std::optional<double> alpha;
  double value = 0.0;
};
using MetricSet = std::vector<Metric>;

MetricSet metrics_of(const RunSummary& r);
MetricSet metrics_of(const DemoResult& d);
MetricSet metrics_of(const IssResult& r);
MetricSet metrics_of(const CertificateReport& r);

struct ExpectationResult {
  Expectation expectation;
  bool applicable = false;  // the metric was produced by this run
  bool passed = true;
  double observed = 0.0;
};

/// An expectation without @alpha applies to every recorded value of its metric.
std::vector<ExpectationResult> evaluate_expectations(const Scenario& s, const MetricSet& metrics);
bool all_passed(const std::vector<ExpectationResult>& results);

/// `kind:amplitude[:frequency[:seed]]`, e.g. sine:0.1:0.5
DisturbanceSpec parse_disturbance_arg(const std::string& text);

}  // namespace layersafe
