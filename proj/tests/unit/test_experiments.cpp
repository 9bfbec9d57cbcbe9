#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "kickflow/experiments.hpp"
#include "kickflow/field_io.hpp"

namespace kf = kickflow;
namespace fs = std::filesystem;

namespace {

std::string out_dir(const std::string& name) {
  const fs::path p = fs::path(KICKFLOW_TEST_TMP) / "exp" / name;
  fs::remove_all(p);
  return p.string();
}

kf::ExperimentConfig small_config(const std::string& experiment, const std::string& dir) {
  auto cfg = kf::parse_config(
      "domain.mx = 3\n"
      "domain.ny = 3\n"
      "solver.dt = 5e-3\n"
      "seed = 21\n");
  cfg.experiment = experiment;
  cfg.out_dir = dir;
  return cfg;
}

std::vector<std::vector<double>> read_csv(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> r;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) r.push_back(std::stod(cell));
    rows.push_back(r);
  }
  return rows;
}

nlohmann::json read_json(const std::string& path) { return nlohmann::json::parse(kf::read_text(path)); }

int cli(const std::string& args) {
  const std::string cmd = std::string(KICKFLOW_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Experiments, ZeroNoiseSimulateDecays) {
  const std::string dir = out_dir("sim0");
  auto cfg = small_config("simulate", dir);
  cfg.noise.B0 = 0.0;
  kf::RunOptions opts;
  opts.u0 = "random:4";
  opts.kicks = 8;
  const kf::RunManifest m = kf::run(cfg, opts);
  EXPECT_EQ(m.status, "ok");
  const auto rows = read_csv(dir + "/simulate.csv");
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_NEAR(rows[0][1], 1.0, 1e-14);
  const double rate = 0.1 * M_PI * M_PI;
  for (const auto& r : rows) EXPECT_LE(r[1], std::exp(-rate * r[0]) * (1.0 + 1e-9));
  const kf::SpectralField last = kf::read_field(dir + "/u_final.field");
  EXPECT_NEAR(kf::norm(last), rows.back()[1], 1e-15);
}

TEST(Experiments, ManifestListsHashedOutputs) {
  const std::string dir = out_dir("sim1");
  kf::RunOptions opts;
  opts.kicks = 3;
  kf::run(small_config("simulate", dir), opts);
  const auto man = read_json(dir + "/manifest.json");
  EXPECT_EQ(man["experiment"], "simulate");
  EXPECT_EQ(man["version"], std::string(kf::version()));
  EXPECT_EQ(man["status"], "ok");
  ASSERT_EQ(man["outputs"].size(), 3u);
  for (const auto& o : man["outputs"]) {
    const std::string text = kf::read_text(dir + "/" + o["path"].get<std::string>());
    EXPECT_EQ(o["fnv1a"], kf::hex64(kf::fnv1a(text)));
    EXPECT_EQ(o["bytes"], text.size());
  }
  EXPECT_FALSE(man["stages"].empty());
  EXPECT_EQ(man["config"]["domain.mx"], "3");
}

TEST(Experiments, DeterministicOutputs) {
  kf::RunOptions opts;
  opts.kicks = 4;
  const auto a = kf::run(small_config("simulate", out_dir("det_a")), opts);
  opts.workers = 3;
  const auto b = kf::run(small_config("simulate", out_dir("det_b")), opts);
  ASSERT_EQ(a.outputs.size(), b.outputs.size());
  for (std::size_t i = 0; i < a.outputs.size(); ++i) EXPECT_EQ(a.outputs[i].hash, b.outputs[i].hash);
}

TEST(Experiments, BadTimeStepIsConfigError) {
  auto cfg = small_config("simulate", out_dir("bad_dt"));
  cfg.solver.dt = 0.3;
  try {
    kf::run(cfg, {});
    FAIL();
  } catch (const kf::Error& e) {
    EXPECT_EQ(e.kind(), kf::ErrorKind::kConfigError);
  }
}

TEST(Experiments, SimulateContinuesBurnInStream) {
  const auto cfg = small_config("simulate", out_dir("burn"));
  const kf::GalerkinModel model(cfg.domain, cfg.solver);
  const kf::NoiseModel noise(cfg.noise, model.basis());
  const auto run = kf::markov_run(model, noise, model.basis().zero(), 5, cfg.kick_seed());
  const kf::SpectralField u2 = kf::resolve_u0("burn:2", model, noise, cfg.kick_seed());
  EXPECT_EQ(u2, run[2]);
  const kf::SimulateResult r = kf::simulate_core(model, noise, u2, 3, cfg.kick_seed(), 2);
  EXPECT_EQ(r.final_state, run[5]);
  EXPECT_EQ(kf::burn_kicks("burn:17"), 17u);
  EXPECT_EQ(kf::burn_kicks("zero"), 0u);
  EXPECT_THROW(kf::resolve_u0("burn:x", model, noise, 1), kf::Error);
  const kf::SpectralField r1 = kf::resolve_u0("random:3", model, noise, 1);
  EXPECT_NEAR(kf::norm(r1), 1.0, 1e-14);
}

TEST(Experiments, LinearizeWritesTables) {
  const std::string dir = out_dir("lin");
  kf::RunOptions opts;
  opts.u0 = "burn:3";
  opts.full_matrices = true;
  kf::run(small_config("linearize", dir), opts);
  const auto psi1 = read_csv(dir + "/psi1.csv");
  ASSERT_EQ(psi1.size(), 21u);
  EXPECT_NEAR(psi1[0][4], std::exp(-0.1 * M_PI * M_PI), 1e-15);
  const auto gram = read_csv(dir + "/gram_spectrum.csv");
  EXPECT_GT(gram.front()[1], 0.0);
  const auto sum = read_json(dir + "/linearize_summary.json");
  EXPECT_EQ(sum["K"], 21);
  EXPECT_EQ(kf::read_text(dir + "/psi2.csv").rfind("KICKFLOW-MATRIX v1,rows=21,cols=21\n", 0), 0u);
  EXPECT_EQ(kf::read_text(dir + "/a_matrix.csv").rfind("KICKFLOW-MATRIX v1,rows=21,cols=42\n", 0), 0u);
}

TEST(Experiments, CoupleSummary) {
  const std::string dir = out_dir("cpl");
  kf::RunOptions opts;
  opts.u0 = "burn:3";
  opts.steps = 4;
  opts.pairs = 2;
  kf::run(small_config("couple", dir), opts);
  const auto s = read_json(dir + "/couple_summary.json");
  EXPECT_FALSE(s["violated"].get<bool>());
  EXPECT_LT(s["q_max"].get<double>(), 1.0);
  EXPECT_GT(s["M"].get<int>(), 0);
  EXPECT_EQ(s["pairs"].size(), 2u);
  const auto rows = read_csv(dir + "/couple.csv");
  EXPECT_EQ(rows.size(), 8u);
  EXPECT_NEAR(rows[0][2], 1e-2, 1e-15);
}

TEST(Experiments, MixResumeReproducesUninterruptedRun) {
  kf::RunOptions opts;
  opts.particles = 16;
  opts.mix_kicks = 12;
  const std::string full = out_dir("mix_full");
  try {
    kf::run(small_config("mix", full), opts);
  } catch (const kf::Error& e) {
    EXPECT_EQ(e.kind(), kf::ErrorKind::kInsufficientData);  // tiny ensembles may sit at the floor
  }
  const std::string part = out_dir("mix_part");
  const std::string ckpt = part + "/state.ckpt";
  opts.checkpoint = ckpt;
  opts.checkpoint_every = 2;
  opts.stop_after = 5;
  const auto m1 = kf::run(small_config("mix", part), opts);
  EXPECT_NE(m1.status, "ok");
  EXPECT_EQ(kf::checkpoint_load(ckpt).kick_index, 5u);
  opts.stop_after = 0;
  opts.resume = ckpt;
  opts.workers = 2;
  try {
    kf::run(small_config("mix", part), opts);
  } catch (const kf::Error& e) {
    EXPECT_EQ(e.kind(), kf::ErrorKind::kInsufficientData);
  }
  EXPECT_EQ(kf::read_text(full + "/mix.csv"), kf::read_text(part + "/mix.csv"));
  EXPECT_EQ(kf::read_text(full + "/mix_summary.json"), kf::read_text(part + "/mix_summary.json"));
}

TEST(Experiments, MixRunnerRejectsForeignCheckpoint) {
  const auto cfg = small_config("mix", out_dir("mix_foreign"));
  const kf::GalerkinModel model(cfg.domain, cfg.solver);
  const kf::NoiseModel noise(cfg.noise, model.basis());
  kf::MixSettings s;
  s.particles = 8;
  s.kicks = 3;
  kf::MixRunner a(model, noise, s, 1, 1);
  s.particles = 10;
  kf::MixRunner b(model, noise, s, 1, 1);
  EXPECT_THROW(b.restore(a.checkpoint()), kf::Error);
}

TEST(Experiments, ShortMixIsInsufficientData) {
  const std::string dir = out_dir("mix_short");
  kf::RunOptions opts;
  opts.particles = 8;
  opts.mix_kicks = 2;
  try {
    kf::run(small_config("mix", dir), opts);
    FAIL();
  } catch (const kf::Error& e) {
    EXPECT_EQ(e.kind(), kf::ErrorKind::kInsufficientData);
  }
  EXPECT_EQ(read_json(dir + "/manifest.json")["status"], "insufficient-data");
  EXPECT_EQ(read_json(dir + "/error.json")["exit_code"], 6);
  EXPECT_TRUE(fs::exists(dir + "/mix.csv"));
}

TEST(Experiments, NoiseCheckAndSpectrum) {
  const std::string dir = out_dir("noise");
  kf::RunOptions opts;
  opts.draws = 20000;
  opts.kicks = 2;
  opts.independence_samples = 2000;
  kf::run(small_config("noise-check", dir), opts);
  const auto j = read_json(dir + "/noise_check.json");
  EXPECT_TRUE(j["checks"]["support_violations"]["pass"].get<bool>());
  EXPECT_TRUE(j["checks"]["density_mass_minus_1"]["pass"].get<bool>());
  const std::string sdir = out_dir("spectrum");
  kf::run(small_config("spectrum", sdir), {});
  const auto s = read_json(sdir + "/spectrum.json");
  EXPECT_EQ(s["K"], 21);
  EXPECT_NEAR(s["lambda1"].get<double>(), M_PI * M_PI, 1e-12);
}

TEST(Cli, ExitCodes) {
  const std::string base = out_dir("cli");
  const std::string small = " --set domain.mx=3 --set domain.ny=3 --set solver.dt=5e-3";
  EXPECT_EQ(cli("spectrum --out " + base + "/ok"), 0);
  EXPECT_EQ(cli("simulate --kicks 2 --out " + base + "/sim" + small), 0);
  EXPECT_EQ(cli("simulate --set solver.dt=0.3 --out " + base + "/dt"), 2);
  EXPECT_EQ(read_json(base + "/dt/error.json")["error"], "config-error");
  EXPECT_EQ(cli("simulate --set domain.bogus=1 --out " + base + "/typo"), 2);
  EXPECT_EQ(cli("simulate --no-such-flag"), 2);
  EXPECT_EQ(cli("simulate --config /nonexistent.cfg --out " + base + "/io"), 8);
  kf::write_text(base + "/old.field", "KICKFLOW-FIELD v0,K=21\n0\n");
  EXPECT_EQ(cli("simulate --u0 " + base + "/old.field --out " + base + "/ver" + small), 7);
  EXPECT_EQ(cli("couple --steps 2 --u0 burn:2 --set control.eps_target=0 --out " + base + "/tune" + small), 4);
  EXPECT_EQ(cli("mix --particles 8 --kicks 2 --out " + base + "/mix" + small), 6);
  kf::SpectralField big(21);
  for (std::size_t k = 0; k < big.size(); ++k) big[k] = 1e4 * std::cos(1.0 + k);
  kf::write_field(base + "/big.field", big);
  EXPECT_EQ(cli("simulate --kicks 20 --u0 " + base + "/big.field --set solver.dt=0.5 --out " + base +
                "/div --set domain.mx=3 --set domain.ny=3"),
            3);
}
