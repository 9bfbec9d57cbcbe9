#pragma once

#include <cstdint>

namespace kickflow {

// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based random stream. The value at a given counter is a pure function
// of (key, counter), so streams split by derive() are independent of the order
// in which workers consume them.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : key_(mix64(seed ^ 0x6a09e667f3bcc909ULL)) {}

  RngStream derive(std::uint64_t tag) const { return RngStream(key_, tag); }

  std::uint64_t key() const { return key_; }
  std::uint64_t position() const { return counter_; }
  void seek(std::uint64_t counter) { counter_ = counter; }

  std::uint64_t bits_at(std::uint64_t counter) const {
    return mix64(key_ ^ mix64(counter + 0x3c6ef372fe94f82bULL));
  }

  // Uniform in the open interval (0, 1).
  double uniform_at(std::uint64_t counter) const {
    return (static_cast<double>(bits_at(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  double next_uniform() { return uniform_at(counter_++); }

  // Standard normal by Box-Muller; consumes two counters.
  double next_normal();

 private:
  RngStream(std::uint64_t parent, std::uint64_t tag)
      : key_(mix64(parent ^ mix64(tag ^ 0xa54ff53a5f1d36f1ULL))) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace kickflow
