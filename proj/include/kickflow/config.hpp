#pragma once

// Experiment configuration in a strict `key = value` text format.
//
//   # comment
//   domain.viscosity = 0.1
//   [noise]            # optional section header; prefixes following keys
//   P = 2
//
// Unknown or duplicate keys are config errors.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kickflow/kick_noise.hpp"
#include "kickflow/ns_dynamics.hpp"
#include "kickflow/spectral_basis.hpp"
#include "kickflow/stabilisation.hpp"

namespace kickflow {

struct ExperimentConfig {
  DomainSpec domain;
  SolverConfig solver;
  NoiseSpec noise;
  std::optional<std::uint64_t> noise_seed;  // defaults to `seed`
  ControlConfig control;
  std::string experiment = "simulate";
  std::uint64_t seed = 0;
  std::string out_dir = "out";

  std::uint64_t kick_seed() const { return noise_seed.value_or(seed); }

  // Throws config-error.
  void validate() const;

  // Sets one dotted key from its textual value; throws config-error.
  void set(std::string_view key, std::string_view value);

  // Every key with its current value, in a fixed order.
  std::vector<std::pair<std::string, std::string>> snapshot() const;
};

bool is_known_experiment(std::string_view name);

ExperimentConfig parse_config(std::string_view text);

// Throws io-error when the file cannot be read.
ExperimentConfig load_config(const std::string& path);

}  // namespace kickflow
