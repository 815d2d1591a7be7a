#include "layersafe/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "layersafe/errors.hpp"

namespace layersafe {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(const std::string& text, std::size_t line, const std::string& key) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw ParseError(line, key + ": expected a number, got '" + text + "'");
  }
  return v;
}

std::vector<double> parse_numbers(std::string text, std::size_t line, const std::string& key) {
  std::replace_if(text.begin(), text.end(), [](char c) { return c == '(' || c == ')' || c == ','; }, ' ');
  std::istringstream in(text);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_number(tok, line, key));
  return out;
}

Vec2 parse_vec2(const std::string& text, std::size_t line, const std::string& key) {
  const auto v = parse_numbers(text, line, key);
  if (v.size() != 2) throw ParseError(line, key + ": expected two components, got '" + text + "'");
  return {v[0], v[1]};
}

int parse_int(const std::string& text, std::size_t line, const std::string& key) {
  int v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ParseError(line, key + ": expected an integer, got '" + text + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& text, std::size_t line, const std::string& key) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ParseError(line, key + ": expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

std::string vec2_text(const Vec2& v) {
  return "(" + format_double(v[0]) + ", " + format_double(v[1]) + ")";
}

const std::vector<std::string>& known_metrics() {
  static const std::vector<std::string> names = {
      // single runs
      "min_h", "min_h_V", "h_V0", "edot_final", "envelope_holds", "rtf_satisfied", "chain_slack",
      "filter_active_time",
      // certify
      "certified_safe", "unsafe_witness", "outside_S_V", "indeterminate", "unsafe_in_S_V",
      // recurrence demo
      "dip_count", "max_dip", "v_increase_time",
      // iss
      "iss_holds", "practical_rtf_satisfied", "gamma_margin", "iota"};
  return names;
}

Expectation::Op parse_op(const std::string& s) {
  if (s == ">=") return Expectation::Op::ge;
  if (s == ">") return Expectation::Op::gt;
  if (s == "<=") return Expectation::Op::le;
  if (s == "<") return Expectation::Op::lt;
  return Expectation::Op::eq;
}

const char* op_text(Expectation::Op op) {
  switch (op) {
    case Expectation::Op::ge: return ">=";
    case Expectation::Op::gt: return ">";
    case Expectation::Op::le: return "<=";
    case Expectation::Op::lt: return "<";
    case Expectation::Op::eq: return "==";
  }
  return "==";
}

struct ObstacleEntry {
  std::optional<Vec2> center;
  std::optional<double> radius;
};

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

VelocityMode parse_velocity_mode(const std::string& s) {
  if (s == "desired") return VelocityMode::desired;
  if (s == "zero") return VelocityMode::zero;
  if (s == "safe") return VelocityMode::safe;
  throw ConfigError("velocity mode must be desired|zero|safe (got '" + s + "')");
}

std::string to_string(VelocityMode mode) {
  switch (mode) {
    case VelocityMode::desired: return "desired";
    case VelocityMode::zero: return "zero";
    case VelocityMode::safe: return "safe";
  }
  return "desired";
}

bool Expectation::accepts(double observed) const {
  switch (op) {
    case Op::ge: return observed >= value;
    case Op::gt: return observed > value;
    case Op::le: return observed <= value;
    case Op::lt: return observed < value;
    case Op::eq: return observed == value;
  }
  return false;
}

std::string Expectation::text() const {
  std::string s = "expect." + metric;
  if (alpha) s += "@" + format_double(*alpha);
  return s + " " + op_text(op) + " " + format_double(value);
}

ModelPair Scenario::model() const { return double_integrator_pair(); }

BarrierFn Scenario::barrier() const { return BarrierFn(ObstacleField(obstacles)); }

ClosedLoopLaw Scenario::law(double alpha) const {
  Gains g = gains;
  g.alpha = alpha;
  return ClosedLoopLaw(model(), barrier(), g, goal);
}

Rtf Scenario::rtf_fn() const { return norm_rtf(rtf.a1, rtf.a2, rtf.beta, rtf.tau); }

RecurrentCbf Scenario::rcbf(double alpha) const {
  return build_rcbf(rtf_fn(), barrier(), alpha, rtf.m_overshoot);
}

Vec Scenario::initial_state(const Vec2& z0, VelocityMode mode, double alpha) const {
  Vec x0(4);
  x0.head<2>() = z0;
  switch (mode) {
    case VelocityMode::desired:
      x0.tail<2>() = desired_velocity(goal, gains.k_p, z0);
      break;
    case VelocityMode::zero:
      x0.tail<2>().setZero();
      break;
    case VelocityMode::safe:
      x0.tail<2>() = safe_velocity(barrier(), alpha, z0, desired_velocity(goal, gains.k_p, z0)).z_dot_s;
      break;
  }
  return x0;
}

std::string Scenario::resolved_text() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    out << "obstacle." << i << ".center = " << vec2_text(obstacles[i].center) << "\n";
    out << "obstacle." << i << ".radius = " << format_double(obstacles[i].radius) << "\n";
  }
  out << "start = " << vec2_text(start) << "\n";
  out << "start.velocity = " << to_string(start_velocity) << "\n";
  out << "goal = " << vec2_text(goal) << "\n";
  out << "gains.kp = " << format_double(gains.k_p) << "\n";
  out << "gains.kd = " << format_double(gains.k_d) << "\n";
  out << "gains.alpha = " << format_double(gains.alpha) << "\n";
  out << "rtf.a1 = " << format_double(rtf.a1) << "\n";
  out << "rtf.a2 = " << format_double(rtf.a2) << "\n";
  out << "rtf.beta = " << format_double(rtf.beta) << "\n";
  out << "rtf.tau = " << format_double(rtf.tau) << "\n";
  out << "rtf.M = " << format_double(rtf.m_overshoot) << "\n";
  out << "sim.dt = " << format_double(integrator.dt) << "\n";
  out << "sim.horizon = " << format_double(integrator.horizon) << "\n";
  out << "seed = " << seed << "\n";
  out << "certify.velocity = " << to_string(certify.velocity) << "\n";
  out << "certify.grid = " << certify.nx << "x" << certify.ny << "\n";
  out << "certify.lower = " << vec2_text(certify.lower) << "\n";
  out << "certify.upper = " << vec2_text(certify.upper) << "\n";
  out << "disturbance.kind = " << to_string(disturbance.kind) << "\n";
  out << "disturbance.amplitude = " << format_double(disturbance.amplitude) << "\n";
  out << "disturbance.frequency = " << format_double(disturbance.frequency) << "\n";
  out << "disturbance.seed = " << disturbance.seed << "\n";
  if (iss_gain) out << "disturbance.gain = " << format_double(*iss_gain) << "\n";
  for (const auto& e : expectations) out << e.text() << "\n";
  return out.str();
}

std::string Scenario::digest() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(resolved_text())));
  return buf;
}

void validate(const Scenario& s) {
  if (s.obstacles.empty()) throw ConfigError("obstacle.0: at least one obstacle is required");
  for (std::size_t i = 0; i < s.obstacles.size(); ++i) {
    const auto& o = s.obstacles[i];
    const std::string base = "obstacle." + std::to_string(i);
    if (!o.center.allFinite()) throw ConfigError(base + ".center must be finite");
    if (!(o.radius > 0.0) || !std::isfinite(o.radius)) throw ConfigError(base + ".radius must be > 0");
  }
  if (!s.start.allFinite()) throw ConfigError("start must be finite");
  if (!s.goal.allFinite()) throw ConfigError("goal must be finite");
  s.gains.validate();
  if (!(s.rtf.a1 > 0.0)) throw ConfigError("rtf.a1 must be > 0");
  if (!(s.rtf.a2 >= s.rtf.a1)) throw ConfigError("rtf.a2 must be >= rtf.a1");
  if (!(s.rtf.beta > 0.0) || !std::isfinite(s.rtf.beta)) throw ConfigError("rtf.beta must be > 0");
  if (!(s.rtf.tau > 0.0) || !std::isfinite(s.rtf.tau)) throw ConfigError("rtf.tau must be > 0");
  if (!(s.rtf.m_overshoot > 0.0) || !std::isfinite(s.rtf.m_overshoot)) {
    throw ConfigError("rtf.M must be > 0");
  }
  try {
    s.integrator.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("sim: ") + e.what());
  }
  if (s.workers < 1) throw ConfigError("sim.workers must be >= 1");
  if (s.certify.nx < 2 || s.certify.ny < 2) throw ConfigError("certify.grid needs >= 2 points per axis");
  if (!(s.certify.lower.array() < s.certify.upper.array()).all()) {
    throw ConfigError("certify.lower must be below certify.upper on every axis");
  }
  if (!(s.disturbance.amplitude >= 0.0) || !std::isfinite(s.disturbance.amplitude)) {
    throw ConfigError("disturbance.amplitude must be finite and >= 0");
  }
  if (!(s.disturbance.frequency > 0.0)) throw ConfigError("disturbance.frequency must be > 0");
  if (s.iss_gain && !(*s.iss_gain >= 0.0)) throw ConfigError("disturbance.gain must be >= 0");
}

Scenario parse_scenario(std::string_view text) {
  static const std::regex expect_re(
      R"(^expect\.([A-Za-z_]+)(?:@(\S+?))?\s*(>=|<=|==|>|<)\s*(\S+)$)");

  Scenario s;
  std::map<int, ObstacleEntry> obstacles;
  std::map<std::string, std::size_t> seen;
  bool have_kp = false, have_kd = false, have_alpha = false, have_start = false, have_goal = false;
  bool have_beta = false, have_m = false;

  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;

    if (line.rfind("expect.", 0) == 0) {
      std::smatch m;
      if (!std::regex_match(line, m, expect_re)) {
        throw ParseError(line_no, "expectation must read 'expect.<metric>[@alpha] <op> <value>'");
      }
      Expectation e;
      e.metric = m[1];
      const auto& names = known_metrics();
      if (std::find(names.begin(), names.end(), e.metric) == names.end()) {
        throw ParseError(line_no, "unknown expectation metric '" + e.metric + "'");
      }
      if (m[2].matched) e.alpha = parse_number(m[2], line_no, "expect." + e.metric);
      e.op = parse_op(m[3]);
      e.value = parse_number(m[4], line_no, "expect." + e.metric);
      s.expectations.push_back(e);
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
    std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty() || value.empty()) throw ParseError(line_no, "expected 'key = value'");
    if (key == "gains.k_p") key = "gains.kp";
    if (key == "gains.k_d") key = "gains.kd";
    if (auto it = seen.find(key); it != seen.end()) {
      throw ParseError(line_no, "duplicate key '" + key + "' (first set on line " +
                                    std::to_string(it->second) + ")");
    }
    seen.emplace(key, line_no);

    if (key.rfind("obstacle.", 0) == 0) {
      const auto dot = key.find('.', 9);
      if (dot == std::string::npos) throw ParseError(line_no, "unknown key '" + key + "'");
      const int idx = parse_int(key.substr(9, dot - 9), line_no, key);
      const std::string field = key.substr(dot + 1);
      if (field == "center") {
        obstacles[idx].center = parse_vec2(value, line_no, key);
      } else if (field == "radius") {
        obstacles[idx].radius = parse_number(value, line_no, key);
      } else {
        throw ParseError(line_no, "unknown key '" + key + "'");
      }
    } else if (key == "start") {
      s.start = parse_vec2(value, line_no, key);
      have_start = true;
    } else if (key == "start.velocity") {
      s.start_velocity = parse_velocity_mode(value);
    } else if (key == "goal") {
      s.goal = parse_vec2(value, line_no, key);
      have_goal = true;
    } else if (key == "gains.kp") {
      s.gains.k_p = parse_number(value, line_no, key);
      have_kp = true;
    } else if (key == "gains.kd") {
      s.gains.k_d = parse_number(value, line_no, key);
      have_kd = true;
    } else if (key == "gains.alpha") {
      s.gains.alpha = parse_number(value, line_no, key);
      have_alpha = true;
    } else if (key == "rtf.a1") {
      s.rtf.a1 = parse_number(value, line_no, key);
    } else if (key == "rtf.a2") {
      s.rtf.a2 = parse_number(value, line_no, key);
    } else if (key == "rtf.beta") {
      s.rtf.beta = parse_number(value, line_no, key);
      have_beta = true;
    } else if (key == "rtf.tau") {
      s.rtf.tau = parse_number(value, line_no, key);
    } else if (key == "rtf.M") {
      s.rtf.m_overshoot = parse_number(value, line_no, key);
      have_m = true;
    } else if (key == "sim.dt") {
      s.integrator.dt = parse_number(value, line_no, key);
    } else if (key == "sim.horizon") {
      s.integrator.horizon = parse_number(value, line_no, key);
    } else if (key == "sim.workers") {
      s.workers = parse_int(value, line_no, key);
    } else if (key == "seed") {
      s.seed = parse_u64(value, line_no, key);
    } else if (key == "certify.velocity") {
      s.certify.velocity = parse_velocity_mode(value);
    } else if (key == "certify.grid") {
      const auto x = value.find('x');
      if (x == std::string::npos) throw ParseError(line_no, "certify.grid must read NxM");
      s.certify.nx = parse_int(trim(value.substr(0, x)), line_no, key);
      s.certify.ny = parse_int(trim(value.substr(x + 1)), line_no, key);
    } else if (key == "certify.lower") {
      s.certify.lower = parse_vec2(value, line_no, key);
    } else if (key == "certify.upper") {
      s.certify.upper = parse_vec2(value, line_no, key);
    } else if (key == "disturbance.kind") {
      s.disturbance.kind = parse_disturbance_kind(value);
    } else if (key == "disturbance.amplitude") {
      s.disturbance.amplitude = parse_number(value, line_no, key);
    } else if (key == "disturbance.frequency") {
      s.disturbance.frequency = parse_number(value, line_no, key);
    } else if (key == "disturbance.seed") {
      s.disturbance.seed = parse_u64(value, line_no, key);
    } else if (key == "disturbance.gain") {
      s.iss_gain = parse_number(value, line_no, key);
    } else {
      throw ParseError(line_no, "unknown key '" + key + "'");
    }
  }

  for (const auto& [idx, entry] : obstacles) {
    const std::string base = "obstacle." + std::to_string(idx);
    if (!entry.center) throw ConfigError(base + ".center is required");
    if (!entry.radius) throw ConfigError(base + ".radius is required");
    s.obstacles.push_back({*entry.center, *entry.radius});
  }
  if (!have_kp) throw ConfigError("gains.k_p is required");
  if (!have_kd) throw ConfigError("gains.k_d is required");
  if (!have_alpha) throw ConfigError("gains.alpha is required");
  if (!have_start) throw ConfigError("start is required");
  if (!have_goal) throw ConfigError("goal is required");
  s.gains.validate();

  // Unset rate/overshoot default to the exact constants of the linear error loop.
  if (!have_beta || !have_m) {
    const TrackingConstants tc = linear_tracking_constants(s.gains);
    if (!have_beta) s.rtf.beta = tc.beta;
    if (!have_m) {
      s.rtf.m_overshoot = have_beta ? envelope_overshoot(s.gains.k_p, s.gains.k_d, s.rtf.beta)
                                    : tc.m_overshoot;
    }
  }
  validate(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scenario file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace layersafe
