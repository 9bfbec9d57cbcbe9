#include "kickflow/spectral_basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "kickflow/error.hpp"
#include "kickflow/kernels.hpp"

namespace kickflow {

void DomainSpec::validate() const {
  require(std::isfinite(length) && length > 0.0, ErrorKind::kInvalidArgument,
          "domain length must be positive");
  require(std::isfinite(viscosity) && viscosity > 0.0, ErrorKind::kInvalidArgument,
          "viscosity must be positive");
  require(std::isfinite(damping) && damping >= 0.0, ErrorKind::kInvalidArgument,
          "damping must be nonnegative");
  require(mx >= 0, ErrorKind::kInvalidArgument, "mx must be nonnegative");
  require(ny >= 1, ErrorKind::kInvalidArgument, "ny must be at least 1");
}

double stokes_eigenvalue(ModeIndex mode, const DomainSpec& spec) {
  spec.validate();
  if (std::abs(mode.m) > spec.mx || mode.n < 1 || mode.n > spec.ny) {
    fail(ErrorKind::kInvalidArgument, "mode (" + std::to_string(mode.m) + ", " +
                                          std::to_string(mode.n) + ") outside the truncation");
  }
  const double kx = 2.0 * std::numbers::pi * std::abs(mode.m) / spec.length;
  const double ky = std::numbers::pi * mode.n;
  return kx * kx + ky * ky;
}

double poincare_constant(const DomainSpec& spec) {
  // (0, 1) is always enumerated and minimises both terms.
  return stokes_eigenvalue({0, 1}, spec);
}

bool SpectralField::is_finite() const {
  return std::all_of(coeffs_.begin(), coeffs_.end(), [](double c) { return std::isfinite(c); });
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
  require(size() == other.size(), ErrorKind::kInvalidArgument, "field dimension mismatch");
  for (std::size_t k = 0; k < size(); ++k) coeffs_[k] += other.coeffs_[k];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
  require(size() == other.size(), ErrorKind::kInvalidArgument, "field dimension mismatch");
  for (std::size_t k = 0; k < size(); ++k) coeffs_[k] -= other.coeffs_[k];
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  for (double& c : coeffs_) c *= s;
  return *this;
}

SpectralBasis::SpectralBasis(const DomainSpec& spec) : spec_(spec) {
  spec_.validate();
  const std::size_t count = spec_.mode_count();
  std::vector<ModeIndex> all;
  all.reserve(count);
  for (int n = 1; n <= spec_.ny; ++n) {
    for (int m = -spec_.mx; m <= spec_.mx; ++m) all.push_back({m, n});
  }
  std::vector<double> alpha(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) alpha[i] = stokes_eigenvalue(all[i], spec_);

  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (alpha[a] != alpha[b]) return alpha[a] < alpha[b];
    if (all[a].n != all[b].n) return all[a].n < all[b].n;
    return all[a].m < all[b].m;
  });

  const int width = 2 * spec_.mx + 1;
  modes_.reserve(count);
  slot_to_index_.assign(count, 0);
  for (std::size_t k = 0; k < count; ++k) {
    const ModeIndex mode = all[order[k]];
    const double a = alpha[order[k]];
    modes_.push_back(mode);
    eigenvalues_.push_back(a);
    // ||E_m||^2 on (0, L) is L for m = 0 and L/2 otherwise; ||sin(n pi y)||^2 = 1/2.
    const double psi_sq = (mode.m == 0 ? spec_.length : 0.5 * spec_.length) * 0.5;
    normalisation_.push_back(1.0 / std::sqrt(a * psi_sq));
    const std::size_t slot =
        static_cast<std::size_t>(mode.n - 1) * width + static_cast<std::size_t>(mode.m + spec_.mx);
    slots_.push_back(slot);
    slot_to_index_[slot] = k;
  }
}

std::size_t SpectralBasis::index_of(ModeIndex mode) const {
  if (std::abs(mode.m) > spec_.mx || mode.n < 1 || mode.n > spec_.ny) {
    fail(ErrorKind::kInvalidArgument, "mode (" + std::to_string(mode.m) + ", " +
                                          std::to_string(mode.n) + ") outside the truncation");
  }
  const std::size_t slot = static_cast<std::size_t>(mode.n - 1) * (2 * spec_.mx + 1) +
                           static_cast<std::size_t>(mode.m + spec_.mx);
  return slot_to_index_[slot];
}

void SpectralBasis::check(const SpectralField& u) const {
  if (u.size() != size()) {
    fail(ErrorKind::kInvalidArgument, "field has " + std::to_string(u.size()) +
                                          " coefficients, basis has " + std::to_string(size()));
  }
}

FieldNorms norms(const SpectralField& u, const SpectralBasis& basis) {
  basis.check(u);
  double h = 0.0, v = 0.0, d = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double c2 = u[k] * u[k];
    h += c2;
    v += basis.eigenvalue(k) * c2;
    d += c2 / basis.eigenvalue(k);
  }
  return {std::sqrt(h), std::sqrt(v), std::sqrt(d)};
}

double inner(const SpectralField& u, const SpectralField& v) {
  require(u.size() == v.size(), ErrorKind::kInvalidArgument, "field dimension mismatch");
  return kernels::active().dot(u.size(), u.data(), v.data());
}

double norm(const SpectralField& u) { return std::sqrt(inner(u, u)); }

double bracket(const SpectralField& u, const SpectralField& v, const SpectralBasis& basis) {
  basis.check(u);
  basis.check(v);
  const double half = 0.5 * basis.lambda1();
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) s += (basis.eigenvalue(k) - half) * u[k] * v[k];
  return s;
}

}  // namespace kickflow
