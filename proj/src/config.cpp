#include "kickflow/config.hpp"

#include <array>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "kickflow/error.hpp"

namespace kickflow {

namespace {

[[noreturn]] void bad(std::string_view key, std::string_view value, const char* what) {
  fail(ErrorKind::kConfigError,
       "bad value '" + std::string(value) + "' for " + std::string(key) + ": " + what);
}

double to_double(std::string_view key, std::string_view v) {
  const std::string s(v);
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) bad(key, v, "expected a real");
  return x;
}

template <class Int>
Int to_int(std::string_view key, std::string_view v) {
  Int x{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) bad(key, v, "expected an integer");
  return x;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true") return true;
  if (v == "false") return false;
  bad(key, v, "expected true or false");
}

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r";
  const auto a = s.find_first_not_of(ws);
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(ws);
  return s.substr(a, b - a + 1);
}

std::string unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return std::string(s.substr(1, s.size() - 2));
  return std::string(s);
}

struct Field {
  const char* key;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"domain.length", [](auto& c, auto v) { c.domain.length = to_double("domain.length", v); },
       [](const auto& c) { return fmt_double(c.domain.length); }},
      {"domain.viscosity",
       [](auto& c, auto v) { c.domain.viscosity = to_double("domain.viscosity", v); },
       [](const auto& c) { return fmt_double(c.domain.viscosity); }},
      {"domain.damping", [](auto& c, auto v) { c.domain.damping = to_double("domain.damping", v); },
       [](const auto& c) { return fmt_double(c.domain.damping); }},
      {"domain.mx", [](auto& c, auto v) { c.domain.mx = to_int<int>("domain.mx", v); },
       [](const auto& c) { return std::to_string(c.domain.mx); }},
      {"domain.ny", [](auto& c, auto v) { c.domain.ny = to_int<int>("domain.ny", v); },
       [](const auto& c) { return std::to_string(c.domain.ny); }},
      {"solver.dt", [](auto& c, auto v) { c.solver.dt = to_double("solver.dt", v); },
       [](const auto& c) { return fmt_double(c.solver.dt); }},
      {"solver.dealias", [](auto& c, auto v) { c.solver.dealias = unquote(v); },
       [](const auto& c) { return c.solver.dealias; }},
      {"solver.record_substeps",
       [](auto& c, auto v) { c.solver.record_substeps = to_bool("solver.record_substeps", v); },
       [](const auto& c) { return std::string(c.solver.record_substeps ? "true" : "false"); }},
      {"solver.grid_x", [](auto& c, auto v) { c.solver.grid.nx = to_int<int>("solver.grid_x", v); },
       [](const auto& c) { return std::to_string(c.solver.grid.nx); }},
      {"solver.grid_y", [](auto& c, auto v) { c.solver.grid.ny = to_int<int>("solver.grid_y", v); },
       [](const auto& c) { return std::to_string(c.solver.grid.ny); }},
      {"noise.P", [](auto& c, auto v) { c.noise.P = to_int<int>("noise.P", v); },
       [](const auto& c) { return std::to_string(c.noise.P); }},
      {"noise.B0", [](auto& c, auto v) { c.noise.B0 = to_double("noise.B0", v); },
       [](const auto& c) { return fmt_double(c.noise.B0); }},
      {"noise.s_t", [](auto& c, auto v) { c.noise.s_t = to_double("noise.s_t", v); },
       [](const auto& c) { return fmt_double(c.noise.s_t); }},
      {"noise.s_x", [](auto& c, auto v) { c.noise.s_x = to_double("noise.s_x", v); },
       [](const auto& c) { return fmt_double(c.noise.s_x); }},
      {"noise.seed",
       [](auto& c, auto v) { c.noise_seed = to_int<std::uint64_t>("noise.seed", v); },
       [](const auto& c) { return std::to_string(c.kick_seed()); }},
      {"control.M", [](auto& c, auto v) { c.control.M = to_int<std::size_t>("control.M", v); },
       [](const auto& c) { return std::to_string(c.control.M); }},
      {"control.gamma", [](auto& c, auto v) { c.control.gamma = to_double("control.gamma", v); },
       [](const auto& c) { return fmt_double(c.control.gamma); }},
      {"control.delta", [](auto& c, auto v) { c.control.delta = to_double("control.delta", v); },
       [](const auto& c) { return fmt_double(c.control.delta); }},
      {"control.q_target",
       [](auto& c, auto v) { c.control.q_target = to_double("control.q_target", v); },
       [](const auto& c) { return fmt_double(c.control.q_target); }},
      {"control.eps_target",
       [](auto& c, auto v) { c.control.eps_target = to_double("control.eps_target", v); },
       [](const auto& c) { return fmt_double(c.control.eps_target); }},
      {"experiment", [](auto& c, auto v) { c.experiment = unquote(v); },
       [](const auto& c) { return c.experiment; }},
      {"seed", [](auto& c, auto v) { c.seed = to_int<std::uint64_t>("seed", v); },
       [](const auto& c) { return std::to_string(c.seed); }},
      {"out_dir", [](auto& c, auto v) { c.out_dir = unquote(v); },
       [](const auto& c) { return c.out_dir; }},
  };
  return table;
}

}  // namespace

bool is_known_experiment(std::string_view name) {
  static constexpr std::array<std::string_view, 6> names = {
      "simulate", "linearize", "couple", "mix", "noise-check", "spectrum"};
  for (auto n : names) {
    if (n == name) return true;
  }
  return false;
}

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  for (const Field& f : fields()) {
    if (key == f.key) {
      f.set(*this, trim(value));
      return;
    }
  }
  fail(ErrorKind::kConfigError, "unknown config key '" + std::string(key) + "'");
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::snapshot() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Field& f : fields()) out.emplace_back(f.key, f.get(*this));
  return out;
}

void ExperimentConfig::validate() const {
  // Module validators report invalid-argument; in a config they are config errors.
  try {
    domain.validate();
    noise.validate();
  } catch (const Error& e) {
    fail(ErrorKind::kConfigError, e.what());
  }
  solver.validate();
  control.validate(static_cast<std::size_t>(noise.P) * domain.mode_count());
  require(is_known_experiment(experiment), ErrorKind::kConfigError, "unknown experiment name");
  require(!out_dir.empty(), ErrorKind::kConfigError, "out_dir must not be empty");
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorKind::kConfigError, where + "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(ErrorKind::kConfigError, where + "expected key = value");
    const std::string_view raw_key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (raw_key.empty()) fail(ErrorKind::kConfigError, where + "empty key");
    const std::string key = section.empty() ? std::string(raw_key) : section + "." + std::string(raw_key);
    if (!seen.insert(key).second) fail(ErrorKind::kConfigError, where + "duplicate key '" + key + "'");
    try {
      cfg.set(key, value);
    } catch (const Error& e) {
      fail(ErrorKind::kConfigError, where + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace kickflow
