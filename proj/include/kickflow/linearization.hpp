#pragma once

// Derivatives of the time-one map S(u, eta) along a stored base trajectory.
//
// Both derivatives solve the linearised scheme
//   w+ = e^{-lambda dt} w + (1 - e^{-lambda dt}) / lambda * (zeta(t_mid) - Q(u~_n, w)),
// which is the exact tangent of the nonlinear exponential-Euler step, so
// finite-difference checks agree to O(eps^2).

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "kickflow/kick_noise.hpp"
#include "kickflow/ns_dynamics.hpp"

namespace kickflow {

// Base trajectory expanded on the collocation grid at every substep.
class TangentContext {
 public:
  // Throws invalid-state when the trajectory was not recorded at substeps.
  TangentContext(const GalerkinModel& model, const Trajectory& base);

  const GalerkinModel& model() const { return *model_; }
  const Trajectory& base() const { return *base_; }
  std::size_t steps() const { return fields_.size(); }
  const GradientFields& fields(std::size_t n) const { return fields_[n]; }

 private:
  const GalerkinModel* model_;
  const Trajectory* base_;
  std::vector<GradientFields> fields_;
};

// D_u S (u, eta) w0.
SpectralField tangent_apply(const TangentContext& ctx, const SpectralField& w0);

// D_eta S (u, eta) zeta.
SpectralField forcing_derivative_apply(const TangentContext& ctx, const KickPath& zeta);

struct TangentOperators {
  Eigen::VectorXd psi1;      // diagonal of Psi_1 = e^{-(nu alpha + a)}
  Eigen::MatrixXd psi2;      // K x K
  Eigen::MatrixXd a_matrix;  // K x (P K), columns D_eta S e_(p,k), j = p K + k
  Eigen::MatrixXd gram;      // A A^T
  Eigen::VectorXd gram_eigenvalues;   // ascending
  Eigen::MatrixXd gram_eigenvectors;  // columns match gram_eigenvalues

  double psi1_norm() const { return psi1.maxCoeff(); }
  bool has_psi() const { return psi2.size() > 0; }
  bool has_gram() const { return gram.size() > 0; }
};

// Fills psi1 and psi2: column k of psi2 is D_u S phi_k - Psi_1 phi_k.
// `workers` caps the number of threads used for the column solves.
void psi_split(const TangentContext& ctx, TangentOperators& ops, unsigned workers = 1);

// Fills a_matrix, gram and its eigendecomposition.
void assemble_gram(const TangentContext& ctx, std::size_t time_order, TangentOperators& ops,
                   unsigned workers = 1);

TangentOperators assemble_all(const TangentContext& ctx, std::size_t time_order,
                              unsigned workers = 1);

// ||G (G + gamma I)^{-1} f - f|| / ||f|| for each gamma.
std::vector<double> gram_limit_check(const TangentOperators& ops, const SpectralField& f,
                                     std::span<const double> gammas);

struct CompactnessReport {
  std::vector<double> singular_values;  // descending

  // min { j : sigma_j <= eps } (0-based); size() when no value qualifies.
  std::size_t tail_index(double eps) const;
};

CompactnessReport compactness_diagnostic(const TangentOperators& ops);

}  // namespace kickflow
