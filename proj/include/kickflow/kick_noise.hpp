#pragma once

// Decomposable kick law on E = L^2([0, 1], H).
//
// The basis of E is e_(p,k)(t, x) = tau_p(t) phi_k(x), with tau_p the shifted
// Legendre polynomials orthonormal on [0, 1]. A kick is
//   eta = sum_(p,k) b_(p,k) xi_(p,k) e_(p,k),
// with i.i.d. xi of density rho(r) = (15/16)(1 - r^2)^2 on [-1, 1] and
// amplitudes b_(p,k) = B0 (1 + p)^(-s_t) (1 + alpha_k)^(-s_x).

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kickflow/rng.hpp"
#include "kickflow/spectral_basis.hpp"

namespace kickflow {

struct NoiseSpec {
  int P = 2;
  double B0 = 1.0;
  double s_t = 2.0;
  double s_x = 1.0;

  // B0 >= 0 is accepted so that zero-noise runs share the same code path.
  void validate() const;
};

// tau_p(t) = sqrt(2p + 1) P_p(2t - 1).
double shifted_legendre(int p, double t);

class KickDensity {
 public:
  static constexpr double kVariance = 1.0 / 7.0;

  explicit KickDensity(std::size_t table_size = 4097);

  static double pdf(double r);
  static double cdf(double r);

  // Inverse CDF: table bracket plus safeguarded Newton, accurate to ~1e-13 in r away from the ends
  // (where the flat cdf limits r to eps / rho(r)).
  double inverse_cdf(double u) const;

 private:
  std::vector<double> tail_;  // tail mass on a uniform grid of e = 1 - |r|
};

class KickPath {
 public:
  KickPath() = default;
  KickPath(std::size_t P, std::size_t K) : P_(P), K_(K), coeffs_(P * K, 0.0) {}
  KickPath(std::size_t P, std::size_t K, std::vector<double> coeffs);

  std::size_t time_order() const { return P_; }
  std::size_t modes() const { return K_; }
  std::size_t size() const { return coeffs_.size(); }

  double& at(std::size_t p, std::size_t k) { return coeffs_[p * K_ + k]; }
  double at(std::size_t p, std::size_t k) const { return coeffs_[p * K_ + k]; }
  double& operator[](std::size_t j) { return coeffs_[j]; }
  double operator[](std::size_t j) const { return coeffs_[j]; }
  std::span<const double> coeffs() const { return coeffs_; }
  std::span<double> coeffs() { return coeffs_; }
  std::span<const double> row(std::size_t p) const { return {coeffs_.data() + p * K_, K_}; }

  // ||eta||_E, the Frobenius norm of the coefficients.
  double norm() const;

  KickPath& operator+=(const KickPath& other);
  friend KickPath operator+(KickPath a, const KickPath& b) { return a += b; }
  KickPath& operator*=(double s);

  friend bool operator==(const KickPath&, const KickPath&) = default;

 private:
  std::size_t P_ = 0;
  std::size_t K_ = 0;
  std::vector<double> coeffs_;
};

// Anything that returns a uniform (0, 1) number for a given entry tag.
template <class S>
concept UniformSource = requires(const S& s, std::uint64_t tag) {
  { s.uniform_at(tag) } -> std::convertible_to<double>;
};

struct SupportBound {
  double e_radius = 0.0;    // sqrt(sum b^2)
  double vdual_sup = 0.0;   // sup over the support of ||eta||^2_{L^2([0,1], V')}
};

class NoiseModel {
 public:
  NoiseModel(const NoiseSpec& spec, const SpectralBasis& basis);

  const NoiseSpec& spec() const { return spec_; }
  std::size_t time_order() const { return P_; }
  std::size_t modes() const { return K_; }
  std::size_t dimension() const { return P_ * K_; }

  double amplitude(std::size_t p, std::size_t k) const { return amplitudes_[p * K_ + k]; }
  std::span<const double> amplitudes() const { return amplitudes_; }

  // Entry indices j = p K + k sorted by decreasing amplitude, ties by mode
  // order and then by p. The first M entries span F_M.
  std::span<const std::size_t> order() const { return order_; }

  // Tag of entry (p, k); keyed by (p, m, n) so draws do not depend on truncation.
  std::uint64_t entry_tag(std::size_t p, std::size_t k) const;

  template <UniformSource S>
  KickPath sample(const S& source) const {
    KickPath eta(P_, K_);
    for (std::size_t p = 0; p < P_; ++p) {
      for (std::size_t k = 0; k < K_; ++k) {
        eta.at(p, k) = amplitude(p, k) * density_.inverse_cdf(source.uniform_at(entry_tag(p, k)));
      }
    }
    return eta;
  }

  // Keeps the first M entries of order(); throws invalid-argument when M > dimension().
  KickPath project_pm(const KickPath& eta, std::size_t M) const;
  KickPath project_qm(const KickPath& eta, std::size_t M) const;

  SupportBound support_bound() const;

  const KickDensity& density() const { return density_; }

 private:
  NoiseSpec spec_;
  std::size_t P_;
  std::size_t K_;
  std::vector<ModeIndex> modes_;
  std::vector<double> amplitudes_;
  std::vector<double> alpha_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> rank_;
  KickDensity density_;
};

template <UniformSource S>
KickPath sample_kick(const NoiseModel& model, const S& source) {
  return model.sample(source);
}

// Stream for kick number `kick` of trajectory `lineage` under master `seed`.
RngStream kick_stream(std::uint64_t seed, std::uint64_t lineage, std::uint64_t kick);

// sum_p tau_p(t) row_p; throws invalid-argument for t outside [0, 1].
SpectralField eval_kick(const KickPath& eta, double t);

// Same, written into `out` (size K) without allocating.
void eval_kick_into(const KickPath& eta, double t, std::span<double> out);

}  // namespace kickflow
