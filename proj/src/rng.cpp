#include "kickflow/rng.hpp"

#include <cmath>
#include <numbers>

namespace kickflow {

double RngStream::next_normal() {
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace kickflow
