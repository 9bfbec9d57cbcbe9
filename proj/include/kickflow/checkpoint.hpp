#pragma once

// Resumable state of an ensemble experiment.
//
//   KICKFLOW-CKPT v1
//   seed=<u64>
//   kick_index=<k>
//   meta <key>=<value>
//   ensemble <name> <count> <K> <kick_index>
//   <lineage> <weight> <c_0>,...,<c_{K-1}>     (hexadecimal floats)
//   rows <count>
//   <previously emitted CSV rows>
//   hash=<FNV-1a of everything above>
//
// Noise streams are counter based, so (seed, lineage, kick_index) is the
// complete stream position of every particle.

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "kickflow/ergodicity.hpp"

namespace kickflow {

struct Checkpoint {
  std::uint64_t seed = 0;
  std::uint64_t kick_index = 0;
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, EmpiricalEnsemble>> ensembles;
  std::vector<std::string> rows;

  const EmpiricalEnsemble& ensemble(const std::string& name) const;

  friend bool operator==(const Checkpoint& a, const Checkpoint& b);
};

std::string format_checkpoint(const Checkpoint& c);

// Throws version-mismatch for other versions and corrupt-file on a bad hash or layout.
Checkpoint parse_checkpoint(std::string_view text);

void checkpoint_save(const Checkpoint& c, const std::string& path);
Checkpoint checkpoint_load(const std::string& path);

}  // namespace kickflow
