#pragma once

// Truncated strip (0, L) x (0, 1), periodic in x with free-slip walls at
// y = 0 and y = 1, and its divergence-free Stokes eigenbasis.
//
// Each basis field is phi_k = curl(psi_k) = (d_y psi_k, -d_x psi_k) with
// stream function psi_k = N_k E_m(x) sin(n pi y), where E_m = cos(2 pi m x / L)
// for m >= 0 and sin(2 pi |m| x / L) for m < 0. N_k makes phi_k unit in H.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace kickflow {

struct DomainSpec {
  double length = 4.0;
  double viscosity = 0.1;
  double damping = 0.0;  // Ekman friction a >= 0
  int mx = 5;            // x-wavenumbers |m| <= mx
  int ny = 5;            // y-wavenumbers 1 <= n <= ny

  // Throws invalid-argument on L <= 0, nu <= 0, a < 0, mx < 0 or ny < 1.
  void validate() const;

  std::size_t mode_count() const {
    return static_cast<std::size_t>(2 * mx + 1) * static_cast<std::size_t>(ny);
  }
};

struct ModeIndex {
  int m = 0;
  int n = 1;

  friend bool operator==(const ModeIndex&, const ModeIndex&) = default;
};

// (2 pi |m| / L)^2 + (pi n)^2. Throws invalid-argument for modes outside the truncation.
double stokes_eigenvalue(ModeIndex mode, const DomainSpec& spec);

// lambda_1 = min over the enumerated modes; always pi^2, attained at (0, 1).
double poincare_constant(const DomainSpec& spec);

class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(std::size_t size) : coeffs_(size, 0.0) {}
  explicit SpectralField(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {}

  static SpectralField unit(std::size_t size, std::size_t k) {
    SpectralField f(size);
    f.coeffs_.at(k) = 1.0;
    return f;
  }

  std::size_t size() const { return coeffs_.size(); }
  double& operator[](std::size_t k) { return coeffs_[k]; }
  double operator[](std::size_t k) const { return coeffs_[k]; }
  double* data() { return coeffs_.data(); }
  const double* data() const { return coeffs_.data(); }
  std::span<double> coeffs() { return coeffs_; }
  std::span<const double> coeffs() const { return coeffs_; }
  const std::vector<double>& vector() const { return coeffs_; }

  bool is_finite() const;

  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator-=(const SpectralField& other);
  SpectralField& operator*=(double s);
  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

  friend bool operator==(const SpectralField&, const SpectralField&) = default;

 private:
  std::vector<double> coeffs_;
};

// Mode table in the canonical order: nondecreasing eigenvalue, ties broken by
// n and then m ascending. Every matrix and projection refers to this order.
class SpectralBasis {
 public:
  explicit SpectralBasis(const DomainSpec& spec);

  const DomainSpec& spec() const { return spec_; }
  std::size_t size() const { return modes_.size(); }

  ModeIndex mode(std::size_t k) const { return modes_[k]; }
  double eigenvalue(std::size_t k) const { return eigenvalues_[k]; }
  std::span<const double> eigenvalues() const { return eigenvalues_; }

  // Stream-function scale N_k.
  double normalisation(std::size_t k) const { return normalisation_[k]; }

  // Position of mode k in the (n - 1, m + mx) tensor layout used by the transforms.
  std::size_t tensor_slot(std::size_t k) const { return slots_[k]; }

  // Throws invalid-argument when the mode is outside the truncation.
  std::size_t index_of(ModeIndex mode) const;

  double lambda1() const { return eigenvalues_.front(); }

  SpectralField zero() const { return SpectralField(size()); }

  // Throws invalid-argument when u does not have this basis' dimension.
  void check(const SpectralField& u) const;

 private:
  DomainSpec spec_;
  std::vector<ModeIndex> modes_;
  std::vector<double> eigenvalues_;
  std::vector<double> normalisation_;
  std::vector<std::size_t> slots_;
  std::vector<std::size_t> slot_to_index_;
};

struct FieldNorms {
  double h = 0.0;      // ||u||
  double v = 0.0;      // ||u||_1
  double vdual = 0.0;  // ||u||_{V'}
};

FieldNorms norms(const SpectralField& u, const SpectralBasis& basis);

double inner(const SpectralField& u, const SpectralField& v);
double norm(const SpectralField& u);

// [u, v] = <u, v>_1 - (lambda_1 / 2) <u, v>
double bracket(const SpectralField& u, const SpectralField& v, const SpectralBasis& basis);

}  // namespace kickflow
