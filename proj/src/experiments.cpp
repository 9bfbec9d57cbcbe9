#include "kickflow/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <numeric>

#include <json.hpp>

#include "kickflow/dual_lipschitz.hpp"
#include "kickflow/field_io.hpp"
#include "kickflow/rng.hpp"

namespace kickflow {

using json = nlohmann::ordered_json;

std::string_view version() { return "1.0.0"; }

// ---- logging -------------------------------------------------------------

namespace {
std::atomic<int> g_log_level{static_cast<int>(log_level_from_env())};
}

LogLevel log_level_from_env() {
  const char* v = std::getenv("KICKFLOW_LOG");
  if (!v) return LogLevel::kInfo;
  const std::string_view s(v);
  if (s == "error") return LogLevel::kError;
  if (s == "debug") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

void set_log_level(LogLevel level) { g_log_level = static_cast<int>(level); }

void log(LogLevel level, std::string_view message) {
  if (static_cast<int>(level) > g_log_level.load()) return;
  static constexpr const char* names[] = {"error", "info", "debug"};
  std::cerr << "[kickflow " << names[static_cast<int>(level)] << "] " << message << '\n';
}

// ---- inputs --------------------------------------------------------------

namespace {

std::uint64_t parse_u64(std::string_view s, const char* what) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    fail(ErrorKind::kConfigError, std::string("bad ") + what + " '" + std::string(s) + "'");
  }
  return v;
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

}  // namespace

std::size_t burn_kicks(std::string_view u0_spec) {
  if (!starts_with(u0_spec, "burn:")) return 0;
  return parse_u64(u0_spec.substr(5), "burn-in count");
}

SpectralField resolve_u0(std::string_view spec, const GalerkinModel& model,
                         const NoiseModel& noise, std::uint64_t kick_seed) {
  const SpectralBasis& basis = model.basis();
  if (spec.empty() || spec == "zero") return basis.zero();
  if (starts_with(spec, "random:")) {
    RngStream rng = RngStream(parse_u64(spec.substr(7), "random seed")).derive(0x7530ULL);
    SpectralField u(basis.size());
    for (std::size_t k = 0; k < u.size(); ++k) u[k] = rng.next_normal() / (1.0 + basis.eigenvalue(k));
    u *= 1.0 / norm(u);
    return u;
  }
  if (starts_with(spec, "burn:")) {
    return markov_run(model, noise, basis.zero(), burn_kicks(spec), kick_seed).back();
  }
  SpectralField u = read_field(std::string(spec));
  if (u.size() != basis.size()) fail(ErrorKind::kConfigError, "initial field has the wrong dimension");
  return u;
}

// ---- simulate ------------------------------------------------------------

SimulateResult simulate_core(const GalerkinModel& model, const NoiseModel& noise,
                             const SpectralField& u0, std::size_t kicks, std::uint64_t kick_seed,
                             std::uint64_t first_kick) {
  const SpectralBasis& basis = model.basis();
  SimulateResult r;
  r.initial = u0;
  const FieldNorms n0 = norms(u0, basis);
  r.rows.push_back({0, n0.h, n0.v, 0.0});
  SpectralField u = u0;
  for (std::size_t k = 1; k <= kicks; ++k) {
    const KickPath eta = noise.sample(kick_stream(kick_seed, 0, first_kick + k - 1));
    const Trajectory traj = model.flow(u, eta, false, true);
    double scale = 0.0;
    for (const auto& e : traj.energy_log) scale = std::max(scale, e.energy);
    const double res = energy_identity_residual(traj, basis);
    u = traj.final_state();
    const FieldNorms n = norms(u, basis);
    r.rows.push_back({k, n.h, n.v, scale > 0.0 ? res / scale : 0.0});
  }
  r.final_state = u;
  return r;
}

// ---- couple --------------------------------------------------------------

CouplePairResult couple_pair(const GalerkinModel& model, const NoiseModel& noise,
                             const ControlConfig& ctl, std::uint64_t kick_seed, std::size_t pair,
                             std::size_t burn, std::size_t steps, unsigned workers) {
  CouplePairResult out;
  out.u0 = markov_run(model, noise, model.basis().zero(), burn, kick_seed, pair).back();
  RngStream rng = RngStream(kick_seed).derive(0x70616972ULL).derive(pair);
  SpectralField w(model.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = rng.next_normal();
  w *= ctl.delta / norm(w);
  out.u0_prime = out.u0 + w;
  CouplingSetup setup{&model, &noise, kick_seed, pair, burn, workers};
  out.report = couple(setup, out.u0, out.u0_prime, steps, ctl);
  return out;
}

// ---- mix -----------------------------------------------------------------

namespace {

double max_energy(const EmpiricalEnsemble& e) {
  double m = 0.0;
  for (const auto& u : e.particles) m = std::max(m, inner(u, u));
  return m;
}

std::string row_record(const MixRow& r) {
  return std::to_string(r.k) + "," + format_real(r.dist) + "," + format_real(r.floor) + "," +
         format_real(r.tail_max) + "," + format_real(r.mean_norm) + "," + format_real(r.max_energy_b);
}

MixRow parse_row_record(const std::string& s) {
  std::vector<std::string> cells;
  std::size_t pos = 0;
  for (;;) {
    const auto c = s.find(',', pos);
    cells.push_back(s.substr(pos, c == std::string::npos ? std::string::npos : c - pos));
    if (c == std::string::npos) break;
    pos = c + 1;
  }
  if (cells.size() != 6) fail(ErrorKind::kCorruptFile, "checkpoint row has the wrong layout");
  MixRow r;
  r.k = parse_u64(cells[0], "row index");
  double* dst[] = {&r.dist, &r.floor, &r.tail_max, &r.mean_norm, &r.max_energy_b};
  for (int i = 0; i < 5; ++i) {
    char* end = nullptr;
    *dst[i] = std::strtod(cells[i + 1].c_str(), &end);
    if (end != cells[i + 1].c_str() + cells[i + 1].size()) {
      fail(ErrorKind::kCorruptFile, "checkpoint row has a bad number");
    }
  }
  return r;
}

EmpiricalEnsemble pooled(const std::vector<SpectralField>& v) {
  return EmpiricalEnsemble::uniform(std::vector<SpectralField>(v));
}

}  // namespace

std::string mix_csv_row(const MixRow& r) {
  return std::to_string(r.k) + "," + format_real(r.dist) + "," + format_real(r.floor) + "," +
         format_real(r.tail_max) + "," + format_real(r.mean_norm);
}

MixRunner::MixRunner(const GalerkinModel& model, const NoiseModel& noise,
                     const MixSettings& settings, std::uint64_t seed, std::uint64_t kick_seed)
    : model_(&model),
      noise_(&noise),
      settings_(settings),
      seed_(seed),
      kick_seed_(kick_seed),
      dict_(TestDictionary::standard(model.basis(), settings.compact_modes,
                                     settings.dictionary_random, seed)) {
  const SpectralBasis& basis = model.basis();
  require(settings.krylov_thin >= 1, ErrorKind::kConfigError, "Krylov thinning must be >= 1");
  if (settings.compact_file) {
    auto pts = read_fields(*settings.compact_file);
    require(!pts.empty(), ErrorKind::kConfigError, "compact file has no fields");
    for (const auto& u : pts) {
      if (u.size() != basis.size()) fail(ErrorKind::kConfigError, "compact field has the wrong dimension");
    }
    a_ = EmpiricalEnsemble::uniform(std::move(pts), 0);
  } else {
    require(settings.particles >= 2, ErrorKind::kConfigError, "mix needs at least 2 particles");
    a_ = sphere_compact(basis, settings.particles, settings.radius_a, seed, 0, settings.compact_modes);
  }
  b_ = sphere_compact(basis, settings.particles, settings.radius_b, seed, a_.size(),
                      settings.compact_modes);
  m1_ = std::max(max_energy(a_), max_energy(b_));
  bounds_ = absorbing_bounds(basis, noise, m1_);
  tail_cut_ = basis.eigenvalue(basis.size() / 2);
  record();
}

void MixRunner::record() {
  const unsigned w = settings_.workers;
  MixRow r;
  r.k = a_.kick_index;
  r.dist = dual_lipschitz_lower(a_, b_, dict_, w).value;
  r.floor = std::max(split_half_floor(a_, dict_, w), split_half_floor(b_, dict_, w));
  r.tail_max = tail_energy(b_, model_->basis(), tail_cut_).max;
  double mean = 0.0;
  for (const auto& u : b_.particles) mean += norm(u);
  r.mean_norm = mean / static_cast<double>(b_.size());
  r.max_energy_b = max_energy(b_);
  rows_.push_back(r);
  if (r.k >= bounds_.burn_in && (r.k - bounds_.burn_in) % settings_.krylov_thin == 0) {
    krylov_a_.insert(krylov_a_.end(), a_.particles.begin(), a_.particles.end());
    krylov_b_.insert(krylov_b_.end(), b_.particles.begin(), b_.particles.end());
  }
  log(LogLevel::kDebug, "mix k=" + std::to_string(r.k) + " dist=" + format_real(r.dist) +
                            " floor=" + format_real(r.floor));
}

void MixRunner::step() {
  require(!finished(), ErrorKind::kInvalidState, "mix run already finished");
  a_ = ensemble_step(a_, *model_, *noise_, kick_seed_, settings_.workers);
  b_ = ensemble_step(b_, *model_, *noise_, kick_seed_, settings_.workers);
  record();
}

void MixRunner::run_to_end() {
  while (!finished()) step();
}

Checkpoint MixRunner::checkpoint() const {
  Checkpoint c;
  c.seed = seed_;
  c.kick_index = a_.kick_index;
  c.meta["kick_seed"] = std::to_string(kick_seed_);
  c.meta["particles"] = std::to_string(settings_.particles);
  c.meta["compact_modes"] = std::to_string(settings_.compact_modes);
  c.meta["dictionary_random"] = std::to_string(settings_.dictionary_random);
  c.meta["krylov_thin"] = std::to_string(settings_.krylov_thin);
  c.meta["radius_a"] = format_real(settings_.radius_a);
  c.meta["radius_b"] = format_real(settings_.radius_b);
  c.ensembles.emplace_back("a", a_);
  c.ensembles.emplace_back("b", b_);
  c.ensembles.emplace_back("krylov_a", krylov_a_.empty() ? EmpiricalEnsemble{} : pooled(krylov_a_));
  c.ensembles.emplace_back("krylov_b", krylov_b_.empty() ? EmpiricalEnsemble{} : pooled(krylov_b_));
  for (const auto& r : rows_) c.rows.push_back(row_record(r));
  return c;
}

void MixRunner::restore(const Checkpoint& c) {
  const Checkpoint mine = checkpoint();
  if (c.seed != seed_ || c.meta != mine.meta) {
    fail(ErrorKind::kConfigError, "checkpoint was written by a different mix configuration");
  }
  a_ = c.ensemble("a");
  b_ = c.ensemble("b");
  krylov_a_ = c.ensemble("krylov_a").particles;
  krylov_b_ = c.ensemble("krylov_b").particles;
  rows_.clear();
  for (const auto& s : c.rows) rows_.push_back(parse_row_record(s));
  if (rows_.size() != a_.kick_index + 1 || b_.kick_index != a_.kick_index ||
      c.kick_index != a_.kick_index) {
    fail(ErrorKind::kCorruptFile, "checkpoint kick indices are inconsistent");
  }
}

MixResult MixRunner::finish() const {
  MixResult r;
  r.rows = rows_;
  r.bounds = bounds_;
  r.m1 = m1_;
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& row : rows_) {
    if (row.k >= bounds_.burn_in) {
      acc += row.floor;
      ++n;
    }
  }
  if (n == 0) {
    for (const auto& row : rows_) acc += row.floor;
    n = rows_.size();
  }
  r.floor = acc / static_cast<double>(n);
  std::vector<double> d;
  for (const auto& row : rows_) d.push_back(row.dist);
  try {
    r.fit = mixing_fit_above(d, r.floor);
  } catch (const Error& e) {
    r.fit_error = e.what();
  }
  r.monotone = true;
  for (std::size_t k = 0; k + 1 < d.size(); ++k) {
    if (d[k + 1] > d[k] + 2.0 * r.floor) r.monotone = false;
  }
  if (!krylov_a_.empty()) {
    r.stationary_distance =
        dual_lipschitz_lower(pooled(krylov_a_), pooled(krylov_b_), dict_, settings_.workers).value;
  }
  return r;
}

// ---- orchestration -------------------------------------------------------

namespace {

class OutputDir {
 public:
  explicit OutputDir(std::string root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) fail(ErrorKind::kIo, "cannot create output directory " + root_ + ": " + ec.message());
  }

  void write(const std::string& name, const std::string& content) {
    write_text(path(name), content);
    files_.push_back({name, fnv1a(content), content.size()});
  }

  std::string path(const std::string& name) const {
    return (std::filesystem::path(root_) / name).string();
  }
  const std::vector<OutputFile>& files() const { return files_; }

 private:
  std::string root_;
  std::vector<OutputFile> files_;
};

class Stages {
 public:
  template <class Fn>
  auto time(const std::string& name, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    struct Done {
      Stages* self;
      std::string name;
      std::chrono::steady_clock::time_point t0;
      ~Done() {
        self->list.push_back(
            {name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
      }
    } done{this, name, t0};
    return fn();
  }

  std::vector<StageTiming> list;
};

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string csv(const std::string& header, const std::vector<std::string>& rows) {
  std::string out = header + "\n";
  for (const auto& r : rows) out += r + "\n";
  return out;
}

std::string matrix_csv(const Eigen::MatrixXd& m) {
  std::string out = "KICKFLOW-MATRIX v1,rows=" + std::to_string(m.rows()) +
                    ",cols=" + std::to_string(m.cols()) + "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_real(m(i, j));
    }
    out += '\n';
  }
  return out;
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

struct Deferred {
  ErrorKind kind;
  std::string message;
};

using Outcome = std::optional<Deferred>;

Outcome run_simulate(const ExperimentConfig& cfg, const RunOptions& opts, OutputDir& out,
                     Stages& stages) {
  const GalerkinModel model(cfg.domain, cfg.solver);
  const NoiseModel noise(cfg.noise, model.basis());
  const std::string u0_spec = opts.u0.empty() ? "zero" : opts.u0;
  const SpectralField u0 = resolve_u0(u0_spec, model, noise, cfg.kick_seed());
  // Kicks continue the lineage-0 stream after any burn-in.
  const SimulateResult res = stages.time("simulate", [&] {
    return simulate_core(model, noise, u0, opts.kicks, cfg.kick_seed(), burn_kicks(u0_spec));
  });
  std::vector<std::string> rows;
  for (const auto& r : res.rows) {
    rows.push_back(std::to_string(r.k) + "," + format_real(r.norm_h) + "," + format_real(r.norm_v) +
                   "," + format_real(r.energy_residual));
  }
  out.write("simulate.csv", csv("k,normH,normV,energy_residual", rows));
  out.write("u_initial.field", format_field(res.initial));
  out.write("u_final.field", format_field(res.final_state));
  return std::nullopt;
}

KickPath resolve_kick(std::string_view spec, const NoiseModel& noise, std::uint64_t kick_seed,
                      std::size_t default_index) {
  if (spec.empty() || spec == "seed") return noise.sample(kick_stream(kick_seed, 0, default_index));
  if (starts_with(spec, "seed:")) {
    return noise.sample(kick_stream(kick_seed, 0, parse_u64(spec.substr(5), "kick index")));
  }
  KickPath eta = read_kick(std::string(spec));
  if (eta.time_order() != noise.time_order() || eta.modes() != noise.modes()) {
    fail(ErrorKind::kConfigError, "kick file does not match the noise model");
  }
  return eta;
}

Outcome run_linearize(const ExperimentConfig& cfg, const RunOptions& opts, OutputDir& out,
                      Stages& stages) {
  const GalerkinModel model(cfg.domain, cfg.solver);
  const NoiseModel noise(cfg.noise, model.basis());
  const SpectralBasis& basis = model.basis();
  const std::string u0_spec = opts.u0.empty() ? "burn:10" : opts.u0;
  const SpectralField u0 = resolve_u0(u0_spec, model, noise, cfg.kick_seed());
  const KickPath eta = resolve_kick(opts.kick, noise, cfg.kick_seed(), burn_kicks(u0_spec));
  const Trajectory base = stages.time("base", [&] { return model.flow(u0, eta, true, false); });
  const TangentContext ctx(model, base);
  const TangentOperators ops =
      stages.time("assemble", [&] { return assemble_all(ctx, noise.time_order(), opts.workers); });
  const CompactnessReport sv = stages.time("svd", [&] { return compactness_diagnostic(ops); });

  std::vector<std::string> rows;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const ModeIndex m = basis.mode(k);
    rows.push_back(std::to_string(k) + "," + std::to_string(m.m) + "," + std::to_string(m.n) + "," +
                   format_real(basis.eigenvalue(k)) + "," +
                   format_real(ops.psi1[static_cast<Eigen::Index>(k)]));
  }
  out.write("psi1.csv", csv("k,m,n,alpha,psi1", rows));
  rows.clear();
  for (std::size_t j = 0; j < sv.singular_values.size(); ++j) {
    rows.push_back(std::to_string(j) + "," + format_real(sv.singular_values[j]));
  }
  out.write("psi2_singular_values.csv", csv("j,sigma", rows));
  rows.clear();
  for (Eigen::Index j = 0; j < ops.gram_eigenvalues.size(); ++j) {
    rows.push_back(std::to_string(j) + "," + format_real(ops.gram_eigenvalues(j)));
  }
  out.write("gram_spectrum.csv", csv("j,eigenvalue", rows));
  if (opts.full_matrices) {
    out.write("psi2.csv", matrix_csv(ops.psi2));
    out.write("a_matrix.csv", matrix_csv(ops.a_matrix));
    out.write("gram.csv", matrix_csv(ops.gram));
  }
  const double rate = cfg.domain.viscosity * basis.lambda1();
  json s;
  s["K"] = basis.size();
  s["P"] = noise.time_order();
  s["psi1_norm"] = ops.psi1_norm();
  s["kappa"] = std::exp(-rate / 2.0);
  s["psi2_norm"] = sv.singular_values.empty() ? 0.0 : sv.singular_values.front();
  s["gram_min_eigenvalue"] = ops.gram_eigenvalues(0);
  s["gram_max_eigenvalue"] = ops.gram_eigenvalues(ops.gram_eigenvalues.size() - 1);
  s["tail_index_1e-3"] = sv.tail_index(1e-3 * std::max(1e-300, s["psi2_norm"].get<double>()));
  out.write("linearize_summary.json", s.dump(2) + "\n");
  return std::nullopt;
}

Outcome run_couple(const ExperimentConfig& cfg, const RunOptions& opts, OutputDir& out,
                   Stages& stages) {
  const GalerkinModel model(cfg.domain, cfg.solver);
  const NoiseModel noise(cfg.noise, model.basis());
  ControlConfig ctl = cfg.control;
  if (opts.delta) ctl.delta = *opts.delta;
  ctl.validate(noise.dimension());
  const std::string u0_spec = opts.u0.empty() ? "burn:10" : opts.u0;
  require(starts_with(u0_spec, "burn:"), ErrorKind::kConfigError,
          "couple starts pairs from a burn:<kicks> state");
  const std::size_t burn = burn_kicks(u0_spec);
  require(opts.pairs >= 1, ErrorKind::kConfigError, "couple needs at least one pair");

  std::vector<std::string> rows;
  json pairs = json::array();
  double log_sum = 0.0;
  std::size_t log_n = 0;
  double q_max = 0.0, c_hat = 0.0;
  std::size_t M = ctl.M;
  double gamma = ctl.gamma;
  bool violated = false;
  std::string violation;
  for (std::size_t p = 0; p < opts.pairs; ++p) {
    const CouplePairResult res = stages.time("pair " + std::to_string(p), [&] {
      return couple_pair(model, noise, ctl, cfg.kick_seed(), p, burn, opts.steps, opts.workers);
    });
    const CouplingReport& rep = res.report;
    for (const auto& s : rep.steps) {
      rows.push_back(std::to_string(p) + "," + std::to_string(s.k) + "," + format_real(s.dist) + "," +
                     format_real(s.qhat) + "," + format_real(s.phi_norm) + "," +
                     format_real(s.eps_hat));
      if (s.dist > 0.0 && s.dist_next > 0.0) {
        log_sum += std::log(s.qhat);
        ++log_n;
      }
    }
    q_max = std::max(q_max, rep.q_max());
    c_hat = std::max(c_hat, rep.c_hat());
    M = rep.M;
    gamma = rep.gamma;
    json pj;
    pj["pair"] = p;
    pj["steps"] = rep.steps.size();
    pj["q_geo_mean"] = rep.q_geo_mean();
    pj["q_max"] = rep.q_max();
    pj["C_hat"] = rep.c_hat();
    pj["phi_bound_holds"] = rep.phi_bound_holds();
    pj["violated"] = rep.violated;
    pj["underflow"] = rep.underflow;
    pairs.push_back(pj);
    if (rep.violated && !violated) {
      violated = true;
      violation = "squeezing violated in pair " + std::to_string(p) + " at step " +
                  std::to_string(rep.violation_step) + " (qhat " + format_real(rep.violation_qhat) + ")";
    }
  }
  out.write("couple.csv", csv("pair,k,dist,qhat,phi_norm,eps_hat", rows));
  json s;
  s["q_geo_mean"] = log_n ? std::exp(log_sum / static_cast<double>(log_n)) : 0.0;
  s["q_max"] = q_max;
  s["C_hat"] = c_hat;
  s["M"] = M;
  s["gamma"] = gamma;
  s["delta"] = ctl.delta;
  s["violated"] = violated;
  s["pairs"] = pairs;
  out.write("couple_summary.json", s.dump(2) + "\n");
  if (violated) return Deferred{ErrorKind::kSqueezingViolated, violation};
  return std::nullopt;
}

Outcome run_mix(const ExperimentConfig& cfg, const RunOptions& opts, OutputDir& out,
                Stages& stages, std::string& status) {
  const GalerkinModel model(cfg.domain, cfg.solver);
  const NoiseModel noise(cfg.noise, model.basis());
  MixSettings ms;
  ms.particles = opts.particles;
  ms.kicks = opts.mix_kicks;
  ms.workers = opts.workers;
  if (opts.compact == "unit") {
    ms.radius_a = 1.0;
  } else if (opts.compact == "r3") {
    ms.radius_a = 3.0;
  } else {
    ms.compact_file = opts.compact;
  }
  MixRunner runner = stages.time("init", [&] {
    return MixRunner(model, noise, ms, cfg.seed, cfg.kick_seed());
  });
  if (!opts.resume.empty()) runner.restore(checkpoint_load(opts.resume));
  const bool save = !opts.checkpoint.empty();
  stages.time("ensembles", [&] {
    while (!runner.finished()) {
      runner.step();
      const std::size_t k = runner.kick_index();
      if (save && opts.checkpoint_every > 0 && k % opts.checkpoint_every == 0) {
        checkpoint_save(runner.checkpoint(), opts.checkpoint);
      }
      if (opts.stop_after > 0 && k >= opts.stop_after && !runner.finished()) break;
    }
    return 0;
  });
  if (!runner.finished()) {
    if (save) checkpoint_save(runner.checkpoint(), opts.checkpoint);
    status = "checkpointed at kick " + std::to_string(runner.kick_index());
    return std::nullopt;
  }
  const MixResult res = stages.time("reduce", [&] { return runner.finish(); });
  std::vector<std::string> rows, absorbing;
  for (const auto& r : res.rows) {
    rows.push_back(mix_csv_row(r));
    absorbing.push_back(std::to_string(r.k) + "," + format_real(r.max_energy_b) + "," +
                        format_real(res.bounds.radius2) + "," +
                        format_real(res.bounds.envelope(r.k, res.m1)));
  }
  out.write("mix.csv", csv("k,dist_lower,floor,tail_energy_max,mean_normH", rows));
  out.write("absorbing.csv", csv("k,max_energy,radius2,envelope", absorbing));
  json s;
  s["c"] = res.fit ? json(res.fit->c) : json(nullptr);
  s["C"] = res.fit ? json(res.fit->C) : json(nullptr);
  s["r2"] = res.fit ? json(res.fit->r2) : json(nullptr);
  s["fit_range"] = res.fit ? json::array({res.fit->k0, res.fit->k1}) : json(nullptr);
  s["k_star"] = res.bounds.k_star;
  s["burn_in"] = res.bounds.burn_in;
  s["floor"] = res.floor;
  s["absorbing_radius2"] = res.bounds.radius2;
  s["stationary_distance"] =
      res.stationary_distance ? number_or_null(*res.stationary_distance) : json(nullptr);
  s["monotone"] = res.monotone;
  if (!res.fit) s["fit_error"] = res.fit_error;
  out.write("mix_summary.json", s.dump(2) + "\n");
  if (!res.fit) return Deferred{ErrorKind::kInsufficientData, res.fit_error};
  return std::nullopt;
}

struct CheckRow {
  std::string name;
  double value;
  double bound;
  bool pass;
};

Outcome run_noise_check(const ExperimentConfig& cfg, const RunOptions& opts, OutputDir& out,
                        Stages& stages) {
  const SpectralBasis basis(cfg.domain);
  const NoiseModel noise(cfg.noise, basis);
  const KickDensity& rho = noise.density();
  std::vector<CheckRow> checks;

  stages.time("moments", [&] {
    require(opts.draws >= 2, ErrorKind::kConfigError, "noise-check needs at least 2 draws");
    const RngStream s = RngStream(cfg.kick_seed()).derive(0x6d6f6dULL);
    double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
    for (std::size_t i = 0; i < opts.draws; ++i) {
      const double x = rho.inverse_cdf(s.uniform_at(i));
      sum += x;
      sum2 += x * x;
      sum4 += x * x * x * x;
    }
    const double n = static_cast<double>(opts.draws);
    const double mean = sum / n;
    const double m2 = sum2 / n;
    const double var = m2 - mean * mean;
    const double se_mean = std::sqrt(var / n);
    const double se_var = std::sqrt(std::max(0.0, sum4 / n - m2 * m2) / n);
    checks.push_back({"xi_mean", mean, 3.0 * se_mean, std::abs(mean) <= 3.0 * se_mean});
    checks.push_back({"xi_variance_minus_1/7", var - KickDensity::kVariance, 3.0 * se_var,
                      std::abs(var - KickDensity::kVariance) <= 3.0 * se_var});
    return 0;
  });

  // Density mass by Simpson's rule (exact for the quartic) and regularity at the ends.
  {
    const int n = 2000;
    double acc = KickDensity::pdf(-1.0) + KickDensity::pdf(1.0);
    for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * KickDensity::pdf(-1.0 + 2.0 * i / n);
    const double mass = acc * (2.0 / n) / 3.0;
    checks.push_back({"density_mass_minus_1", mass - 1.0, 1e-12, std::abs(mass - 1.0) <= 1e-12});
    const double h = 1e-6;
    const double slope = std::max(std::abs(KickDensity::pdf(1.0 - h) / h),
                                  std::abs(KickDensity::pdf(-1.0 + h) / h));
    checks.push_back({"density_at_ends", std::max(KickDensity::pdf(1.0), KickDensity::pdf(-1.0)), 0.0,
                      KickDensity::pdf(1.0) == 0.0 && KickDensity::pdf(-1.0) == 0.0});
    checks.push_back({"density_slope_at_ends", slope, 1e-5, slope <= 1e-5});
  }

  const SupportBound sb = noise.support_bound();
  stages.time("support", [&] {
    std::size_t bad = 0;
    for (std::size_t i = 0; i < opts.kicks * 100; ++i) {
      const KickPath eta = noise.sample(kick_stream(cfg.kick_seed(), 0, i));
      bool ok = eta.norm() <= sb.e_radius * (1.0 + 1e-12);
      for (std::size_t j = 0; j < eta.size(); ++j) ok = ok && std::abs(eta[j]) <= noise.amplitudes()[j];
      if (!ok) ++bad;
    }
    checks.push_back({"support_violations", static_cast<double>(bad), 0.0, bad == 0});
    return 0;
  });

  stages.time("independence", [&] {
    const std::size_t n = opts.independence_samples;
    require(n >= 2, ErrorKind::kConfigError, "independence check needs at least 2 samples");
    const std::size_t D = noise.dimension();
    if (D < 2) return 0;
    const RngStream root = RngStream(cfg.kick_seed()).derive(0x696e64ULL);
    // Standardised coordinates xi_j, drawn with the same tags as sample().
    std::vector<std::vector<double>> xi(n, std::vector<double>(D));
    for (std::size_t s = 0; s < n; ++s) {
      const RngStream st = root.derive(s);
      for (std::size_t p = 0; p < noise.time_order(); ++p) {
        for (std::size_t k = 0; k < noise.modes(); ++k) {
          xi[s][p * noise.modes() + k] = rho.inverse_cdf(st.uniform_at(noise.entry_tag(p, k)));
        }
      }
    }
    const double bound = 3.0 / std::sqrt(static_cast<double>(n));
    const auto corr = [&](auto fx, auto fy) {
      double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      for (std::size_t s = 0; s < n; ++s) {
        const double x = fx(xi[s]), y = fy(xi[s]);
        sx += x, sy += y, sxx += x * x, syy += y * y, sxy += x * y;
      }
      const double m = static_cast<double>(n);
      const double cov = sxy / m - sx * sy / (m * m);
      const double vx = sxx / m - sx * sx / (m * m);
      const double vy = syy / m - sy * sy / (m * m);
      return cov / std::sqrt(vx * vy);
    };
    const auto order = noise.order();
    std::vector<std::size_t> ms = {1, D / 2, D - 1};
    if (noise.modes() < D) ms.push_back(noise.modes());
    std::sort(ms.begin(), ms.end());
    ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
    for (std::size_t M : ms) {
      const auto in_p = [&](const std::vector<double>& v, bool square) {
        double a = 0.0;
        for (std::size_t i = 0; i < M; ++i) a += square ? v[order[i]] * v[order[i]] : v[order[i]];
        return a;
      };
      const auto in_q = [&](const std::vector<double>& v, bool square) {
        double a = 0.0;
        for (std::size_t i = M; i < D; ++i) a += square ? v[order[i]] * v[order[i]] : v[order[i]];
        return a;
      };
      const std::string tag = "M=" + std::to_string(M);
      const double c1 = corr([&](const auto& v) { return in_p(v, false); },
                             [&](const auto& v) { return in_q(v, false); });
      const double c2 = corr([&](const auto& v) { return in_p(v, true); },
                             [&](const auto& v) { return in_q(v, true); });
      const double c3 = corr([&](const auto& v) { return v[order[0]]; },
                             [&](const auto& v) { return v[order[M]]; });
      checks.push_back({"corr_sum_PQ_" + tag, c1, bound, std::abs(c1) <= bound});
      checks.push_back({"corr_energy_PQ_" + tag, c2, bound, std::abs(c2) <= bound});
      checks.push_back({"corr_entry_PQ_" + tag, c3, bound, std::abs(c3) <= bound});
    }
    return 0;
  });

  std::vector<std::string> rows;
  bool all = true;
  json s;
  for (const auto& c : checks) {
    rows.push_back(c.name + "," + format_real(c.value) + "," + format_real(c.bound) + "," +
                   (c.pass ? "true" : "false"));
    all = all && c.pass;
    s["checks"][c.name] = {{"value", c.value}, {"bound", c.bound}, {"pass", c.pass}};
  }
  out.write("noise_check.csv", csv("check,value,bound,pass", rows));
  s["e_radius"] = sb.e_radius;
  s["vdual_sup"] = sb.vdual_sup;
  s["all_pass"] = all;
  out.write("noise_check.json", s.dump(2) + "\n");
  return std::nullopt;
}

Outcome run_spectrum(const ExperimentConfig& cfg, OutputDir& out) {
  const SpectralBasis basis(cfg.domain);
  const NoiseModel noise(cfg.noise, basis);
  const DomainSpec& d = cfg.domain;
  std::vector<std::string> rows;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const ModeIndex m = basis.mode(k);
    const double alpha = basis.eigenvalue(k);
    rows.push_back(std::to_string(k) + "," + std::to_string(m.m) + "," + std::to_string(m.n) + "," +
                   format_real(alpha) + "," + format_real(basis.normalisation(k)) + "," +
                   format_real(std::exp(-(d.viscosity * alpha + d.damping))));
  }
  out.write("spectrum.csv", csv("k,m,n,alpha,normalisation,psi1", rows));
  const CollocationGrid g = CollocationGrid::minimum(d);
  const SupportBound sb = noise.support_bound();
  json s;
  s["K"] = basis.size();
  s["lambda1"] = basis.lambda1();
  s["grid_x"] = g.nx;
  s["grid_y"] = g.ny;
  s["e_radius"] = sb.e_radius;
  s["vdual_sup"] = sb.vdual_sup;
  s["M2"] = sb.vdual_sup / (d.viscosity * d.viscosity * basis.lambda1());
  out.write("spectrum.json", s.dump(2) + "\n");
  return std::nullopt;
}

}  // namespace

std::string RunManifest::to_json() const {
  json j;
  j["experiment"] = experiment;
  j["version"] = version;
  j["status"] = status;
  j["started_utc"] = started_utc;
  j["wall_seconds"] = wall_seconds;
  json c = json::object();
  for (const auto& [k, v] : config) c[k] = v;
  j["config"] = c;
  json st = json::array();
  for (const auto& s : stages) st.push_back({{"name", s.name}, {"seconds", s.seconds}});
  j["stages"] = st;
  json outs = json::array();
  for (const auto& o : outputs) {
    outs.push_back({{"path", o.path}, {"fnv1a", hex64(o.hash)}, {"bytes", o.bytes}});
  }
  j["outputs"] = outs;
  return j.dump(2) + "\n";
}

RunManifest run(const ExperimentConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  RunManifest m;
  m.experiment = cfg.experiment;
  m.version = std::string(version());
  m.config = cfg.snapshot();
  m.started_utc = utc_now();
  OutputDir out(cfg.out_dir);
  Stages stages;
  log(LogLevel::kInfo, "running " + cfg.experiment + " into " + cfg.out_dir);

  Outcome outcome;
  if (cfg.experiment == "simulate") {
    outcome = run_simulate(cfg, opts, out, stages);
  } else if (cfg.experiment == "linearize") {
    outcome = run_linearize(cfg, opts, out, stages);
  } else if (cfg.experiment == "couple") {
    outcome = run_couple(cfg, opts, out, stages);
  } else if (cfg.experiment == "mix") {
    outcome = run_mix(cfg, opts, out, stages, m.status);
  } else if (cfg.experiment == "noise-check") {
    outcome = run_noise_check(cfg, opts, out, stages);
  } else {
    outcome = run_spectrum(cfg, out);
  }
  if (outcome) m.status = std::string(to_string(outcome->kind));
  m.stages = stages.list;
  m.outputs = out.files();
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text(out.path("manifest.json"), m.to_json());
  if (outcome) {
    write_error_record(cfg.out_dir, outcome->kind, outcome->message);
    throw Error(outcome->kind, outcome->message);
  }
  return m;
}

void write_error_record(const std::string& out_dir, ErrorKind kind, std::string_view message) {
  try {
    json j;
    j["error"] = std::string(to_string(kind));
    j["exit_code"] = exit_code(kind);
    j["message"] = std::string(message);
    j["version"] = std::string(version());
    write_text((std::filesystem::path(out_dir) / "error.json").string(), j.dump(2) + "\n");
  } catch (...) {
    // The caller still reports the error on stderr and through the exit code.
  }
}

}  // namespace kickflow
