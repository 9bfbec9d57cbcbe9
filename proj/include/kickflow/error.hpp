#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kickflow {

enum class ErrorKind {
  kInvalidArgument,
  kNumericDomain,
  kDivergedTrajectory,
  kInvalidState,
  kTuningFailed,
  kSqueezingViolated,
  kInsufficientData,
  kConfigError,
  kVersionMismatch,
  kCorruptFile,
  kIo,
};

std::string_view to_string(ErrorKind kind);

// Process exit status for each failure class. 0 is success.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class DivergedTrajectory : public Error {
 public:
  DivergedTrajectory(std::size_t substep, double norm);

  std::size_t substep() const noexcept { return substep_; }
  double norm() const noexcept { return norm_; }

 private:
  std::size_t substep_;
  double norm_;
};

class TuningFailed : public Error {
 public:
  explicit TuningFailed(double best_epsilon);

  double best_epsilon() const noexcept { return best_epsilon_; }

 private:
  double best_epsilon_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const char* message) {
  if (!condition) fail(kind, message);
}

}  // namespace kickflow
