// layersafe: batch runs over scenario files.
//
//   layersafe simulate        <scn> [--alpha a]
//   layersafe case-study      <scn> [--alphas 0.5,1,5]
//   layersafe certify         <scn> [--grid pos:40x40] [--alpha a] [--velocity desired|zero|safe]
//   layersafe recurrence-demo <scn>
//   layersafe iss             <scn> [--disturbance sine:0.1[:freq[:seed]]]
//
// Exit codes: 0 ok, 1 a declared expectation failed, 2 usage/config error.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "layersafe/certify.hpp"
#include "layersafe/errors.hpp"
#include "layersafe/harness.hpp"
#include "layersafe/io.hpp"
#include "layersafe/scenario.hpp"

namespace ls = layersafe;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitExpectation = 1;
constexpr int kExitUsage = 2;

struct Common {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("scenario", c.scenario, "scenario file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "output directory (default $LAYERSAFE_OUT_DIR or ./layersafe_out)");
  cmd->add_option("--seed", c.seed, "seed for randomized signals");
  cmd->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
}

ls::Scenario load(const Common& c) {
  ls::Scenario s = ls::load_scenario(c.scenario);
  if (c.seed) {
    s.seed = *c.seed;
    s.disturbance.seed = *c.seed;
  }
  if (c.workers) s.workers = *c.workers;
  return s;
}

ls::OutputOptions output(const Common& c, const ls::Scenario& s) {
  ls::OutputOptions o;
  if (!c.out.empty()) {
    o.dir = c.out;
  } else if (const char* env = std::getenv("LAYERSAFE_OUT_DIR"); env && *env) {
    o.dir = env;
  } else {
    o.dir = "layersafe_out";
  }
  o.workers = s.workers;
  return o;
}

std::vector<double> parse_alphas(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const std::string tok = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != tok.size()) throw ls::ConfigError("bad alpha '" + tok + "' in --alphas");
    out.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

void print_run(const ls::RunSummary& r) {
  std::printf("alpha=%s min_h=%.6g min_h_V=%.6g h_V0=%.6g in_S_V=%d envelope=%d rtf=%d chain_slack=%.3g\n",
              ls::format_double(r.alpha).c_str(), r.min_h, r.min_h_V, r.h_V0, r.in_s_v ? 1 : 0,
              r.envelope_holds ? 1 : 0, r.rtf_satisfied ? 1 : 0, r.chain_slack);
  if (!r.note.empty()) std::printf("  note: %s\n", r.note.c_str());
}

int finish(const ls::Scenario& s, const ls::MetricSet& metrics) {
  const auto results = ls::evaluate_expectations(s, metrics);
  for (const auto& r : results) {
    if (!r.applicable) {
      std::printf("%s: skipped (not produced by this command)\n", r.expectation.text().c_str());
    } else {
      std::printf("%s: %s (observed %.9g)\n", r.expectation.text().c_str(),
                  r.passed ? "pass" : "FAIL", r.observed);
    }
  }
  return ls::all_passed(results) ? kExitOk : kExitExpectation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"layersafe: layered safety-critical control runs"};
  app.require_subcommand(1);

  Common sim_c, cs_c, cert_c, demo_c, iss_c;
  std::optional<double> sim_alpha, cert_alpha;
  std::string alphas, grid_spec, velocity, disturbance;

  auto* sim = app.add_subcommand("simulate", "single rollout from the scenario start");
  add_common(sim, sim_c);
  sim->add_option("--alpha", sim_alpha, "override gains.alpha");

  auto* cs = app.add_subcommand("case-study", "one rollout per alpha");
  add_common(cs, cs_c);
  cs->add_option("--alphas", alphas, "comma-separated alpha values (default gains.alpha)");

  auto* cert = app.add_subcommand("certify", "grid certification of initial states");
  add_common(cert, cert_c);
  cert->add_option("--grid", grid_spec, "pos:NxM or state:AxBxCxD (default certify.grid)");
  cert->add_option("--alpha", cert_alpha, "override gains.alpha");
  cert->add_option("--velocity", velocity, "initial velocity mode for position grids: desired|zero|safe");

  auto* demo = app.add_subcommand("recurrence-demo", "h_V dip / return run");
  add_common(demo, demo_c);

  auto* iss = app.add_subcommand("iss", "disturbed run with the ISS checks");
  add_common(iss, iss_c);
  iss->add_option("--disturbance", disturbance, "kind:amplitude[:frequency[:seed]] (default from scenario)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (sim->parsed()) {
      const ls::Scenario s = load(sim_c);
      const double a = sim_alpha.value_or(s.gains.alpha);
      const auto run = ls::simulate_run(s, a, output(sim_c, s));
      print_run(run.summary);
      std::printf("wrote %s\n", run.trajectory_csv.string().c_str());
      return finish(s, ls::metrics_of(run.summary));
    }
    if (cs->parsed()) {
      const ls::Scenario s = load(cs_c);
      const auto list = alphas.empty() ? std::vector<double>{s.gains.alpha} : parse_alphas(alphas);
      const auto runs = ls::run_case_study(s, list, output(cs_c, s));
      ls::MetricSet metrics;
      for (const auto& r : runs) {
        print_run(r.summary);
        const auto m = ls::metrics_of(r.summary);
        metrics.insert(metrics.end(), m.begin(), m.end());
      }
      std::printf("wrote %zu CSVs and %s\n", runs.size(), runs.front().report.string().c_str());
      return finish(s, metrics);
    }
    if (cert->parsed()) {
      const ls::Scenario s = load(cert_c);
      const ls::Grid grid = grid_spec.empty() ? ls::position_grid(s) : ls::parse_grid_spec(grid_spec, s);
      ls::CertifyOptions opts;
      opts.alpha = cert_alpha.value_or(s.gains.alpha);
      opts.velocity = velocity.empty() ? s.certify.velocity : ls::parse_velocity_mode(velocity);
      opts.workers = s.workers;
      const auto res = ls::run_certify(s, grid, opts, output(cert_c, s));
      std::printf("alpha=%s points=%zu", ls::format_double(opts.alpha).c_str(), res.report.per_point.size());
      for (ls::Verdict v : ls::kAllVerdicts) {
        std::printf(" %s=%zu", ls::to_string(v).c_str(), res.report.count(v));
      }
      std::printf(" unsafe_in_S_V=%zu\n", res.report.unsafe_in_s_v());
      for (const auto& n : res.report.notes) std::printf("  note: %s\n", n.c_str());
      std::printf("wrote %s\n", res.report_path.string().c_str());
      return finish(s, ls::metrics_of(res.report));
    }
    if (demo->parsed()) {
      const ls::Scenario s = load(demo_c);
      const auto d = ls::run_recurrence_demo(s, output(demo_c, s));
      print_run(d.run.summary);
      std::printf("dips=%zu max_dip=%.4g s (tau=%g) v_increase_time=%.4g s safe=%d\n", d.dips.size(),
                  d.max_dip, s.rtf.tau, d.v_increase_time, d.safe ? 1 : 0);
      if (!d.note.empty()) std::printf("  note: %s\n", d.note.c_str());
      std::printf("wrote %s\n", d.run.report.string().c_str());
      return finish(s, ls::metrics_of(d));
    }
    if (iss->parsed()) {
      const ls::Scenario s = load(iss_c);
      const ls::DisturbanceSpec spec = disturbance.empty() ? s.disturbance : ls::parse_disturbance_arg(disturbance);
      const auto r = ls::run_iss(s, spec, output(iss_c, s));
      std::printf("d_sup=%.6g gain=%.6g iota=%.6g gamma=%.6g in_S_Vd=%d min_h=%.6g iss=%d practical_rtf=%d\n",
                  r.env.d_sup, r.iss_gain, r.env.iota, r.env.gamma_margin, r.in_robust_set ? 1 : 0,
                  r.run.summary.min_h, r.iss.holds ? 1 : 0, r.practical.satisfied ? 1 : 0);
      std::printf("wrote %s\n", r.run.report.string().c_str());
      return finish(s, ls::metrics_of(r));
    }
  } catch (const ls::HypothesisError& e) {
    std::fprintf(stderr, "hypothesis violation: %s\n", e.what());
    return kExitUsage;
  } catch (const ls::ParseError& e) {
    std::fprintf(stderr, "%s: %s\n", "scenario", e.what());
    return kExitUsage;
  } catch (const ls::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
