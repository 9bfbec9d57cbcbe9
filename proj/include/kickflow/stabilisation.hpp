#pragma once

// Regularised right inverse R = P_M A^T (G + gamma I)^{-1}, the control
// Phi = -R Psi_2 (u' - u), and the two-trajectory coupling built on them.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "kickflow/kick_noise.hpp"
#include "kickflow/linearization.hpp"
#include "kickflow/ns_dynamics.hpp"

namespace kickflow {

struct ControlConfig {
  std::size_t M = 0;  // 0: pick (M, gamma) with tune() at the first coupling step
  double gamma = 1e-1;
  double delta = 1e-2;
  double q_target = 0.95;
  double eps_target = 0.1;

  // Throws config-error. `dimension` is P K of the noise model.
  void validate(std::size_t dimension) const;
};

// Dense R_{M,gamma} for one set of operators.
struct RightInverse {
  Eigen::MatrixXd matrix;      // (P K) x K
  double condition = 0.0;      // (lambda_max + gamma) / (lambda_min + gamma)
};

RightInverse right_inverse(const TangentOperators& ops, const NoiseModel& noise, std::size_t M,
                           double gamma);

// R_{M,gamma} f by a Cholesky solve; `condition`, when given, receives the
// condition estimate of G + gamma I.
KickPath right_inverse_apply(const TangentOperators& ops, const NoiseModel& noise,
                             const SpectralField& f, const ControlConfig& ctl,
                             double* condition = nullptr);

KickPath phi(const TangentOperators& ops, const NoiseModel& noise, const SpectralField& u,
             const SpectralField& u_prime, const ControlConfig& ctl);

// ||(A R - I) Psi_2||_2.
double epsilon_check(const TangentOperators& ops, const NoiseModel& noise,
                     const ControlConfig& ctl);
double epsilon_check(const TangentOperators& ops, const RightInverse& r);

struct TuneResult {
  std::size_t M = 0;
  double gamma = 0.0;
  double epsilon = 0.0;
};

// Smallest M in {K, 2K, ..., P K}, then largest gamma in {1e-1, ..., 1e-8},
// with epsilon <= target. Throws TuningFailed with the best epsilon seen.
TuneResult tune(const TangentOperators& ops, const NoiseModel& noise, double epsilon_target);

struct CouplingStep {
  std::size_t k = 0;
  double dist = 0.0;        // ||u_k - u'_k|| before the step
  double dist_next = 0.0;   // after the step
  double qhat = 0.0;        // dist_next / dist
  double phi_norm = 0.0;
  double eps_hat = 0.0;
  double c_hat = 0.0;       // ||R|| ||Psi_2||
  double c2_hat = 0.0;      // second-order constant from a central second difference
  double residual = 0.0;    // ||A R Psi_2 g - Psi_2 g|| / ||g||, g = u' - u
  double squeeze_bound = 0.0;  // (||Psi_1|| + eps_hat + c2_hat dist) dist
};

struct CouplingReport {
  std::size_t M = 0;
  double gamma = 0.0;
  std::vector<CouplingStep> steps;
  bool violated = false;
  std::size_t violation_step = 0;
  double violation_qhat = 0.0;
  bool underflow = false;

  double q_max() const;
  double q_geo_mean() const;
  double c_hat() const;  // max over steps
  // True when ||Phi|| <= c_hat dist on every step, up to round-off.
  bool phi_bound_holds() const;
};

struct CouplingSetup {
  const GalerkinModel* model = nullptr;
  const NoiseModel* noise = nullptr;
  std::uint64_t kick_seed = 0;
  std::uint64_t lineage = 0;
  std::uint64_t first_kick = 0;  // kick k of the run uses stream index first_kick + k
  unsigned workers = 1;
};

// Runs n_steps of the coupled pair u_{k+1} = S(u_k, eta_k),
// u'_{k+1} = S(u'_k, eta_k + Phi_k). Stops early when the distance exceeds
// delta or does not contract (violation flag set), or drops below 1e-14.
CouplingReport couple(const CouplingSetup& setup, const SpectralField& u0,
                      const SpectralField& u0_prime, std::size_t n_steps, ControlConfig ctl);

}  // namespace kickflow
