#include "layersafe/certify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

#include "layersafe/errors.hpp"

namespace layersafe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<int> parse_counts(const std::string& text) {
  std::vector<int> counts;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto x = text.find('x', pos);
    const std::string part = text.substr(pos, x == std::string::npos ? std::string::npos : x - pos);
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("grid counts must read NxM..., got '" + text + "'");
    }
    counts.push_back(std::stoi(part));
    if (x == std::string::npos) break;
    pos = x + 1;
  }
  return counts;
}

struct Evaluator {
  const Scenario& scenario;
  const CertifyOptions& opts;
  double horizon;
  ModelPair pair;
  ClosedLoopLaw law;
  std::optional<RecurrentCbf> rcbf;
  Rtf rtf;

  Evaluator(const Scenario& s, const CertifyOptions& o, double h)
      : scenario(s), opts(o), horizon(h), pair(s.model()), law(s.law(o.alpha)), rtf(s.rtf_fn()) {
    if (s.rtf.beta > o.alpha) rcbf = s.rcbf(o.alpha);
  }

  Vec initial_state(const Vec& point) const {
    if (point.size() == 2) return scenario.initial_state(Vec2(point), opts.velocity, opts.alpha);
    return point;
  }

  PointResult run(const Vec& point) const {
    PointResult r;
    r.point = point;
    r.x0 = initial_state(point);
    const Vec2 z0 = r.x0.head<2>();
    r.h0 = law.barrier().value(z0);
    r.min_h = r.h0;
    r.h_V0 = kNaN;
    r.min_h_V = kNaN;
    if (r.h0 < 0.0) {
      r.verdict = Verdict::outside_S_V;
      r.note = "starts inside an obstacle";
      return r;
    }

    LawOutput out0;
    try {
      out0 = law.evaluate(r.x0);
    } catch (const SingularGradientError& e) {
      r.note = e.what();
      return r;
    }
    const Vec e_dot0 = pair.project_input(r.x0) - out0.z_dot_s;
    if (rcbf) {
      r.h_V0 = rcbf->value(z0, e_dot0);
      r.in_s_v = r.h_V0 >= 0.0;
      r.min_h_V = r.h_V0;
    }

    IntegratorConfig cfg = scenario.integrator;
    cfg.horizon = horizon;
    RolloutOptions ro;
    ro.metrics = rcbf ? metrics_for(*rcbf) : metrics_for(rtf);
    try {
      const Trajectory traj = integrate(pair, law, r.x0, cfg, ro);
      r.rolled_out = true;
      for (const auto& s : traj.samples()) {
        if (s.h < r.min_h) r.min_h = s.h;
        if (rcbf) r.min_h_V = std::min(r.min_h_V, s.h_V);
        if (!r.first_violation_t && s.h < 0.0) r.first_violation_t = s.t;
      }
      if (horizon >= rtf.tau) r.rtf_satisfied = check_rtf_recurrence(rtf, traj).satisfied;
      r.envelope_holds = check_exponential_envelope(traj, rtf.beta, scenario.rtf.m_overshoot).holds;
    } catch (const DivergenceError& e) {
      r.verdict = Verdict::indeterminate;
      r.note = std::string("divergent rollout: ") + e.what();
      return r;
    } catch (const SingularGradientError& e) {
      r.verdict = Verdict::indeterminate;
      r.note = std::string("rollout reached a singular barrier gradient: ") + e.what();
      return r;
    }

    if (r.min_h < -kSafetyTol) {
      r.verdict = Verdict::unsafe_witness;
      r.witness = WitnessRef{r.x0, opts.alpha, cfg.dt, horizon};
      if (r.in_s_v) {
        r.note = r.envelope_holds ? "unsafe from S_V" : "unsafe from S_V; tracking envelope violated";
      }
    } else if (r.in_s_v) {
      r.verdict = Verdict::certified_safe;
      if (!r.envelope_holds) r.note = "tracking envelope violated";
    } else {
      r.verdict = Verdict::outside_S_V;
    }
    return r;
  }
};

}  // namespace

void Grid::validate() const {
  const auto k = counts.size();
  if (k == 0 || static_cast<std::size_t>(lower.size()) != k ||
      static_cast<std::size_t>(upper.size()) != k) {
    throw ConfigError("grid bounds and counts must have matching dimension");
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (!(lower[i] < upper[i])) throw ConfigError("grid axis " + std::to_string(i) + " has lower >= upper");
    if (counts[i] < 2) throw ConfigError("grid axis " + std::to_string(i) + " needs >= 2 points");
  }
}

std::size_t Grid::size() const {
  std::size_t n = 1;
  for (int c : counts) n *= static_cast<std::size_t>(c);
  return n;
}

Vec Grid::point(std::size_t index) const {
  Vec p(dims());
  for (int i = 0; i < dims(); ++i) {
    const auto c = static_cast<std::size_t>(counts[i]);
    const auto j = index % c;
    index /= c;
    p[i] = lower[i] + (upper[i] - lower[i]) * static_cast<double>(j) / static_cast<double>(c - 1);
  }
  return p;
}

Grid position_grid(const Scenario& s) {
  Grid g{s.certify.lower, s.certify.upper, {s.certify.nx, s.certify.ny}};
  g.validate();
  return g;
}

Grid parse_grid_spec(const std::string& spec, const Scenario& s, double vmax) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw ConfigError("grid spec must read pos:NxM or state:AxBxCxD");
  const std::string kind = spec.substr(0, colon);
  const std::vector<int> counts = parse_counts(spec.substr(colon + 1));
  Grid g;
  if (kind == "pos") {
    if (counts.size() != 2) throw ConfigError("pos grid needs two counts (NxM)");
    g = Grid{s.certify.lower, s.certify.upper, counts};
  } else if (kind == "state") {
    if (counts.size() != 4) throw ConfigError("state grid needs four counts (AxBxCxD)");
    Vec lo(4), hi(4);
    lo << s.certify.lower[0], s.certify.lower[1], -vmax, -vmax;
    hi << s.certify.upper[0], s.certify.upper[1], vmax, vmax;
    g = Grid{lo, hi, counts};
  } else {
    throw ConfigError("unknown grid kind '" + kind + "' (pos|state)");
  }
  g.validate();
  return g;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::certified_safe: return "certified_safe";
    case Verdict::unsafe_witness: return "unsafe_witness";
    case Verdict::outside_S_V: return "outside_S_V";
    case Verdict::indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

std::size_t CertificateReport::count(Verdict v) const {
  return static_cast<std::size_t>(std::count_if(per_point.begin(), per_point.end(),
                                                [v](const PointResult& p) { return p.verdict == v; }));
}

std::size_t CertificateReport::unsafe_in_s_v() const {
  return static_cast<std::size_t>(std::count_if(per_point.begin(), per_point.end(), [](const PointResult& p) {
    return p.verdict == Verdict::unsafe_witness && p.in_s_v;
  }));
}

CertificateReport certify_initial_set(const Scenario& s, const Grid& grid, double horizon,
                                      const CertifyOptions& opts) {
  grid.validate();
  if (grid.dims() != 2 && grid.dims() != 4) {
    throw ConfigError("certify grid must be position (2-D) or position x velocity (4-D)");
  }
  if (!(horizon > 0.0)) throw ConfigError("certify horizon must be > 0");
  if (opts.workers < 1) throw ConfigError("workers must be >= 1");

  const Evaluator eval(s, opts, horizon);
  CertificateReport report;
  report.scenario_digest = s.digest();
  report.resolved_config = s.resolved_text();
  report.grid = grid;
  report.alpha = opts.alpha;
  report.horizon = horizon;
  report.velocity = opts.velocity;
  report.per_point.resize(grid.size());
  if (!eval.rcbf) {
    report.notes.push_back("beta <= alpha: no recurrent CBF, S_V is empty; every point with h >= 0 is rolled out");
  }
  if (horizon < s.rtf.tau) report.notes.push_back("horizon shorter than tau: recurrence not checked");
  report.notes.push_back("sampling-based: no guarantee between lattice points");

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= grid.size()) return;
      try {
        report.per_point[i] = eval.run(grid.point(i));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = grid.size();
        return;
      }
    }
  };
  const auto n_workers = static_cast<std::size_t>(std::min<std::size_t>(opts.workers, grid.size()));
  if (n_workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return report;
}

CertificateReport certify_initial_set(const Scenario& s, const Grid& grid, double horizon) {
  CertifyOptions opts;
  opts.alpha = s.gains.alpha;
  opts.velocity = s.certify.velocity;
  opts.workers = s.workers;
  return certify_initial_set(s, grid, horizon, opts);
}

double replay_witness(const Scenario& s, const WitnessRef& w, int refine) {
  if (refine < 1) throw ConfigError("refine must be >= 1");
  IntegratorConfig cfg = s.integrator;
  cfg.dt = w.dt / refine;
  cfg.horizon = w.horizon;
  const Trajectory traj = integrate(s.model(), s.law(w.alpha), w.x0, cfg);
  double min_h = kInf;
  for (const auto& smp : traj.samples()) min_h = std::min(min_h, smp.h);
  return min_h;
}

std::vector<double> brute_force_containment_oracle(const Scenario& s, double alpha, const Vec& x0,
                                                   const SamplePredicate& predicate, double tau,
                                                   double dt_fine) {
  if (!(dt_fine > 0.0) || dt_fine > s.integrator.dt / 10.0 * (1.0 + 1e-12)) {
    throw ConfigError("oracle step must satisfy 0 < dt_fine <= dt/10");
  }
  IntegratorConfig cfg = s.integrator;
  cfg.dt = dt_fine;
  cfg.horizon = tau;
  RolloutOptions ro;
  ro.metrics = s.rtf.beta > alpha ? metrics_for(s.rcbf(alpha)) : metrics_for(s.rtf_fn());
  const Trajectory traj = integrate(s.model(), s.law(alpha), x0, cfg, ro);
  std::vector<double> times;
  for (const auto& smp : traj.samples()) {
    if (smp.t > 0.0 && predicate(smp)) times.push_back(smp.t);
  }
  return times;
}

double containment_gap(const std::vector<double>& coarse, const std::vector<double>& fine) {
  double gap = 0.0;
  for (double t : coarse) {
    const auto it = std::lower_bound(fine.begin(), fine.end(), t);
    double best = kInf;
    if (it != fine.end()) best = std::min(best, *it - t);
    if (it != fine.begin()) best = std::min(best, t - *std::prev(it));
    gap = std::max(gap, best);
  }
  return gap;
}

double estimate_lipschitz(const std::function<Vec(const Vec&)>& field, const Grid& region,
                          int samples, std::uint64_t seed) {
  if (samples < 2) throw ConfigError("Lipschitz estimate needs samples >= 2");
  for (int i = 0; i < region.lower.size() && i < region.upper.size(); ++i) {
    if (!(region.lower[i] < region.upper[i])) throw ConfigError("Lipschitz region has zero volume");
  }
  if (region.lower.size() != region.upper.size() || region.lower.size() == 0) {
    throw ConfigError("Lipschitz region bounds must have matching non-zero dimension");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Vec span = region.upper - region.lower;
  auto draw = [&] {
    Vec p(span.size());
    for (int i = 0; i < p.size(); ++i) p[i] = region.lower[i] + span[i] * unit(rng);
    return p;
  };
  double best = 0.0;
  for (int k = 0; k < samples; ++k) {
    const Vec x = draw();
    Vec y = draw();
    if (k % 2 == 1) {
      // nearby pair: pull y towards x by a random factor down to 1e-4
      const double shrink = std::pow(10.0, -4.0 * unit(rng));
      y = x + shrink * (y - x);
    }
    const double d = (y - x).norm();
    if (d == 0.0) continue;
    best = std::max(best, (field(y) - field(x)).norm() / d);
  }
  return best;
}

std::vector<UnsafeState> find_unsafe_initial_states(const CertificateReport& report) {
  std::vector<UnsafeState> out;
  for (const auto& p : report.per_point) {
    if (p.verdict == Verdict::unsafe_witness) out.push_back({p.point, p.min_h, p.first_violation_t, p.in_s_v});
  }
  return out;
}

std::vector<UnsafeState> find_unsafe_initial_states(const Scenario& s, const Grid& grid,
                                                    double horizon, const CertifyOptions& opts) {
  return find_unsafe_initial_states(certify_initial_set(s, grid, horizon, opts));
}

}  // namespace layersafe
