// kickflow command-line front end.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kickflow/config.hpp"
#include "kickflow/error.hpp"
#include "kickflow/experiments.hpp"
#include "kickflow/parallel.hpp"

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<unsigned> workers;
  std::vector<std::string> overrides;
};

void add_globals(CLI::App& app, Globals& g) {
  app.add_option("--config", g.config, "config file (key = value)");
  app.add_option("--seed", g.seed, "master seed; also the kick seed");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--workers", g.workers, "worker threads (default: all cores)")->check(CLI::PositiveNumber);
  app.add_option("--set", g.overrides, "override one config key, key=value (repeatable)");
}

kickflow::ExperimentConfig build_config(const Globals& g, const std::string& experiment) {
  kickflow::ExperimentConfig cfg =
      g.config.empty() ? kickflow::ExperimentConfig{} : kickflow::load_config(g.config);
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      kickflow::fail(kickflow::ErrorKind::kConfigError, "--set expects key=value, got '" + kv + "'");
    }
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (g.seed) {
    cfg.seed = *g.seed;
    cfg.noise_seed = *g.seed;
  }
  if (!g.out.empty()) cfg.out_dir = g.out;
  cfg.experiment = experiment;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  kickflow::set_log_level(kickflow::log_level_from_env());

  CLI::App app{"Kick-forced 2D Navier-Stokes Galerkin simulator and diagnostics"};
  app.set_version_flag("--version", std::string(kickflow::version()));
  app.require_subcommand(1);

  Globals g;
  kickflow::RunOptions opts;

  auto* sim = app.add_subcommand("simulate", "integrate kicks and log norms and the energy identity");
  add_globals(*sim, g);
  sim->add_option("--u0", opts.u0, "zero | random:<seed> | burn:<kicks> | field file");
  sim->add_option("--kicks", opts.kicks, "number of kicks");

  auto* lin = app.add_subcommand("linearize", "tangent operators along one kicked trajectory");
  add_globals(*lin, g);
  lin->add_option("--u0", opts.u0, "base state (default burn:10)");
  lin->add_option("--kick", opts.kick, "seed | seed:<index> | kick file");
  lin->add_flag("--full-matrices", opts.full_matrices, "also write Psi_2, A and G");

  auto* cpl = app.add_subcommand("couple", "controlled coupling of nearby pairs");
  add_globals(*cpl, g);
  cpl->add_option("--u0", opts.u0, "burn:<kicks> start for each pair (default burn:10)");
  cpl->add_option("--delta", opts.delta, "initial distance and coupling radius");
  cpl->add_option("--steps", opts.steps, "coupling steps per pair");
  cpl->add_option("--pairs", opts.pairs, "number of pairs");

  auto* mix = app.add_subcommand("mix", "distance between ensembles from two compacts");
  add_globals(*mix, g);
  mix->add_option("--particles", opts.particles, "particles per ensemble");
  mix->add_option("--kicks", opts.mix_kicks, "number of kicks");
  mix->add_option("--compact", opts.compact, "first compact: unit | r3 | field file");
  mix->add_option("--checkpoint", opts.checkpoint, "checkpoint path");
  mix->add_option("--checkpoint-every", opts.checkpoint_every, "kicks between checkpoints");
  mix->add_option("--resume", opts.resume, "resume from this checkpoint");
  mix->add_option("--stop-after", opts.stop_after, "stop after this kick (with --checkpoint)");

  auto* noise = app.add_subcommand("noise-check", "moments, support and independence of the kick law");
  add_globals(*noise, g);
  noise->add_option("--draws", opts.draws, "scalar draws for the moment checks");
  noise->add_option("--kicks", opts.kicks, "support check uses 100 x kicks samples");
  noise->add_option("--samples", opts.independence_samples, "samples for the independence checks");

  auto* spec = app.add_subcommand("spectrum", "basis and eigenvalue tables");
  add_globals(*spec, g);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kickflow::exit_code(kickflow::ErrorKind::kConfigError);
  }

  const CLI::App* chosen = app.get_subcommands().front();
  opts.workers = g.workers.value_or(kickflow::default_workers());

  std::string out_dir = g.out.empty() ? "out" : g.out;
  try {
    const kickflow::ExperimentConfig cfg = build_config(g, chosen->get_name());
    out_dir = cfg.out_dir;
    const kickflow::RunManifest m = kickflow::run(cfg, opts);
    kickflow::log(kickflow::LogLevel::kInfo, "done: " + m.status + ", " +
                                                 std::to_string(m.outputs.size()) + " files in " +
                                                 out_dir);
    return 0;
  } catch (const kickflow::Error& e) {
    kickflow::log(kickflow::LogLevel::kError,
                  std::string(kickflow::to_string(e.kind())) + ": " + e.what());
    // run() already wrote error.json for failures it defers; rewriting is harmless.
    kickflow::write_error_record(out_dir, e.kind(), e.what());
    return kickflow::exit_code(e.kind());
  } catch (const std::exception& e) {
    kickflow::log(kickflow::LogLevel::kError, e.what());
    kickflow::write_error_record(out_dir, kickflow::ErrorKind::kInvalidState, e.what());
    return 1;
  }
}
