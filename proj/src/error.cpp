#include "kickflow/error.hpp"

#include <cstdio>

namespace kickflow {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kNumericDomain: return "numeric-domain";
    case ErrorKind::kDivergedTrajectory: return "diverged-trajectory";
    case ErrorKind::kInvalidState: return "invalid-state";
    case ErrorKind::kTuningFailed: return "tuning-failed";
    case ErrorKind::kSqueezingViolated: return "squeezing-violated";
    case ErrorKind::kInsufficientData: return "insufficient-data";
    case ErrorKind::kConfigError: return "config-error";
    case ErrorKind::kVersionMismatch: return "version-mismatch";
    case ErrorKind::kCorruptFile: return "corrupt-file";
    case ErrorKind::kIo: return "io-error";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfigError: return 2;
    case ErrorKind::kDivergedTrajectory: return 3;
    case ErrorKind::kTuningFailed: return 4;
    case ErrorKind::kSqueezingViolated: return 5;
    case ErrorKind::kInsufficientData: return 6;
    case ErrorKind::kVersionMismatch:
    case ErrorKind::kCorruptFile: return 7;
    case ErrorKind::kIo: return 8;
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kNumericDomain:
    case ErrorKind::kInvalidState: return 1;
  }
  return 1;
}

namespace {
std::string diverged_message(std::size_t substep, double norm) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "trajectory diverged at substep %zu (norm %.6g)", substep, norm);
  return buf;
}

std::string tuning_message(double eps) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "no (M, gamma) reaches the epsilon target; best epsilon %.6g", eps);
  return buf;
}
}  // namespace

DivergedTrajectory::DivergedTrajectory(std::size_t substep, double norm)
    : Error(ErrorKind::kDivergedTrajectory, diverged_message(substep, norm)),
      substep_(substep),
      norm_(norm) {}

TuningFailed::TuningFailed(double best_epsilon)
    : Error(ErrorKind::kTuningFailed, tuning_message(best_epsilon)), best_epsilon_(best_epsilon) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace kickflow
