#pragma once

// Experiment drivers behind the command-line tool. Each driver writes CSV and
// JSON into cfg.out_dir and returns the run manifest; the computational cores
// are exposed separately so tests can call them without touching the disk.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kickflow/checkpoint.hpp"
#include "kickflow/config.hpp"
#include "kickflow/ergodicity.hpp"
#include "kickflow/error.hpp"
#include "kickflow/kick_noise.hpp"
#include "kickflow/linearization.hpp"
#include "kickflow/ns_dynamics.hpp"
#include "kickflow/stabilisation.hpp"

namespace kickflow {

std::string_view version();

// ---- logging -----------------------------------------------------------

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

// From KICKFLOW_LOG (error|info|debug); info when unset or unrecognised.
LogLevel log_level_from_env();
void set_log_level(LogLevel level);
void log(LogLevel level, std::string_view message);

// ---- shared inputs -------------------------------------------------------

// Initial state from "zero", "random:<seed>" (unit norm, coefficients
// N(0, 1) / (1 + alpha) before normalising), "burn:<kicks>" (Markov run from
// zero on lineage 0) or a field file path.
SpectralField resolve_u0(std::string_view spec, const GalerkinModel& model,
                         const NoiseModel& noise, std::uint64_t kick_seed);

// Number of kicks consumed by a "burn:<n>" spec, 0 otherwise.
std::size_t burn_kicks(std::string_view u0_spec);

// ---- cores ---------------------------------------------------------------

struct SimulateRow {
  std::size_t k = 0;
  double norm_h = 0.0;
  double norm_v = 0.0;
  double energy_residual = 0.0;  // relative to max(1e-300, max energy on the interval)
};

struct SimulateResult {
  std::vector<SimulateRow> rows;
  SpectralField initial;
  SpectralField final_state;
};

// Kick j (1-based) uses kick_stream(kick_seed, 0, first_kick + j - 1).
SimulateResult simulate_core(const GalerkinModel& model, const NoiseModel& noise,
                             const SpectralField& u0, std::size_t kicks, std::uint64_t kick_seed,
                             std::uint64_t first_kick = 0);

struct CouplePairResult {
  CouplingReport report;
  SpectralField u0;
  SpectralField u0_prime;
};

// Pair p starts from burn:<burn> on lineage p and a partner at distance delta
// along a seeded random direction; coupling kicks continue that lineage.
CouplePairResult couple_pair(const GalerkinModel& model, const NoiseModel& noise,
                             const ControlConfig& ctl, std::uint64_t kick_seed, std::size_t pair,
                             std::size_t burn, std::size_t steps, unsigned workers);

struct MixSettings {
  std::size_t particles = 512;
  std::size_t kicks = 100;
  double radius_a = 1.0;
  double radius_b = 3.0;
  std::size_t compact_modes = 8;
  std::size_t dictionary_random = 16;
  std::size_t krylov_thin = 10;
  std::optional<std::string> compact_file;  // replaces the first compact
  unsigned workers = 1;
};

struct MixRow {
  std::size_t k = 0;
  double dist = 0.0;
  double floor = 0.0;
  double tail_max = 0.0;   // ensemble b, cutoff at the median eigenvalue
  double mean_norm = 0.0;  // ensemble b
  double max_energy_b = 0.0;
};

struct MixResult {
  std::vector<MixRow> rows;
  AbsorbingBounds bounds;
  double m1 = 0.0;
  double floor = 0.0;  // mean split-half floor after burn-in
  std::optional<MixingFit> fit;
  std::string fit_error;
  std::optional<double> stationary_distance;  // Krylov averages of the two runs
  bool monotone = false;  // d_{k+1} <= d_k + 2 floor for every k
};

// Two ensembles advanced side by side; resumable through Checkpoint.
class MixRunner {
 public:
  MixRunner(const GalerkinModel& model, const NoiseModel& noise, const MixSettings& settings,
            std::uint64_t seed, std::uint64_t kick_seed);

  // Restores ensembles, Krylov samples and emitted rows.
  void restore(const Checkpoint& c);
  Checkpoint checkpoint() const;

  std::size_t kick_index() const { return a_.kick_index; }
  bool finished() const { return a_.kick_index >= settings_.kicks; }

  // Advances both ensembles by one kick and records the new row.
  void step();
  void run_to_end();

  const std::vector<MixRow>& rows() const { return rows_; }
  MixResult finish() const;

  const EmpiricalEnsemble& ensemble_a() const { return a_; }
  const EmpiricalEnsemble& ensemble_b() const { return b_; }

 private:
  void record();

  const GalerkinModel* model_;
  const NoiseModel* noise_;
  MixSettings settings_;
  std::uint64_t seed_;
  std::uint64_t kick_seed_;
  TestDictionary dict_;
  AbsorbingBounds bounds_;
  double m1_ = 0.0;
  double tail_cut_ = 0.0;
  EmpiricalEnsemble a_, b_;
  std::vector<SpectralField> krylov_a_, krylov_b_;
  std::vector<MixRow> rows_;
};

std::string mix_csv_row(const MixRow& r);

// ---- orchestration --------------------------------------------------------

struct RunOptions {
  unsigned workers = 1;
  // simulate / linearize / couple
  std::string u0;  // empty: "zero" for simulate, "burn:10" otherwise
  std::size_t kicks = 10;
  // linearize
  std::string kick = "seed";  // "seed", "seed:<index>" or a kick file
  bool full_matrices = false;
  // couple
  std::optional<double> delta;
  std::size_t steps = 50;
  std::size_t pairs = 1;
  // mix
  std::size_t particles = 512;
  std::size_t mix_kicks = 100;
  std::string compact = "unit";  // unit, r3 or a file of fields
  std::string checkpoint;        // path written every checkpoint_every kicks
  std::size_t checkpoint_every = 0;
  std::string resume;            // checkpoint to resume from
  std::size_t stop_after = 0;    // stop (after checkpointing) at this kick; 0 = run to the end
  // noise-check
  std::size_t draws = 1000000;
  std::size_t independence_samples = 100000;
};

struct StageTiming {
  std::string name;
  double seconds = 0.0;
};

struct OutputFile {
  std::string path;  // relative to out_dir
  std::uint64_t hash = 0;
  std::size_t bytes = 0;
};

struct RunManifest {
  std::string experiment;
  std::string version;
  std::vector<std::pair<std::string, std::string>> config;
  std::string started_utc;
  double wall_seconds = 0.0;
  std::vector<StageTiming> stages;
  std::vector<OutputFile> outputs;
  std::string status = "ok";

  std::string to_json() const;
};

// Validates cfg, dispatches on cfg.experiment, writes outputs plus manifest.json.
// Failures after outputs were written (squeezing violation, failed mixing
// fit) are rethrown once the manifest is on disk.
RunManifest run(const ExperimentConfig& cfg, const RunOptions& opts);

// error.json describing the failure; best effort, never throws.
void write_error_record(const std::string& out_dir, ErrorKind kind, std::string_view message);

}  // namespace kickflow
