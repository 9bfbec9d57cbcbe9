#pragma once

// Galerkin-truncated Navier-Stokes system
//   du/dt + nu L u + a u + B(u) = eta(t),   B(u) = Pi((u . grad) u),
// integrated over one kick interval [0, 1] by exponential Euler:
//   c+ = e^{-lambda dt} c + (1 - e^{-lambda dt}) / lambda * (f - B(c)),
// with lambda_k = nu alpha_k + a and f the kick sampled at the substep midpoint.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kickflow/kick_noise.hpp"
#include "kickflow/pseudo_spectral.hpp"
#include "kickflow/spectral_basis.hpp"

namespace kickflow {

struct SolverConfig {
  double dt = 1e-3;
  std::string dealias = "two-thirds";
  bool record_substeps = false;
  CollocationGrid grid{};  // {0, 0} selects CollocationGrid::minimum

  // Throws config-error unless 1/dt is an integer and the dealias rule is known.
  void validate() const;
  std::size_t steps() const;
};

struct EnergyRecord {
  double t = 0.0;
  double energy = 0.0;        // ||u||^2
  double bracket = 0.0;       // [u]^2
  double forcing_work = 0.0;  // <eta(t), u>
};

struct Trajectory {
  double dt = 0.0;
  std::vector<SpectralField> states;  // every substep when recorded, else {u(0), u(1)}
  std::vector<EnergyRecord> energy_log;
  KickPath forcing;
  bool substeps_recorded = false;

  bool has_substeps() const { return substeps_recorded; }
  const SpectralField& initial() const { return states.front(); }
  const SpectralField& final_state() const { return states.back(); }
};

class GalerkinModel {
 public:
  GalerkinModel(const DomainSpec& domain, const SolverConfig& solver);

  const SpectralBasis& basis() const { return transform_.basis(); }
  const DomainSpec& domain() const { return transform_.basis().spec(); }
  const PseudoSpectral& transform() const { return transform_; }
  const SolverConfig& solver() const { return solver_; }
  std::size_t size() const { return basis().size(); }
  std::size_t steps() const { return steps_; }
  double dt() const { return dt_; }

  // Per-mode e^{-lambda dt} and (1 - e^{-lambda dt}) / lambda.
  std::span<const double> decay() const { return decay_; }
  std::span<const double> gain() const { return gain_; }

  // B(u). Throws numeric-domain for non-finite input.
  SpectralField nonlinearity(const SpectralField& u) const;

  // Pi((a . grad) b).
  SpectralField advection(const SpectralField& a, const SpectralField& b) const;

  // Q(a, b) = Pi((a . grad) b) + Pi((b . grad) a).
  SpectralField bilinear_q(const SpectralField& a, const SpectralField& b) const;

  // One exponential-Euler substep with a frozen forcing value.
  SpectralField step(const SpectralField& u, const SpectralField& forcing_value) const;

  // u(t) on [0, 1] driven by eta. Throws DivergedTrajectory.
  Trajectory flow(const SpectralField& u0, const KickPath& eta, bool record_substeps,
                  bool energy_log = true) const;
  Trajectory flow(const SpectralField& u0, const KickPath& eta) const {
    return flow(u0, eta, solver_.record_substeps, true);
  }

  // S(u0, eta) = u(1).
  SpectralField time_one_map(const SpectralField& u0, const KickPath& eta) const;

  // Norm above which a run is declared diverged.
  double divergence_threshold(const SpectralField& u0, const KickPath& eta) const;

 private:
  void check_kick(const KickPath& eta) const;

  PseudoSpectral transform_;
  SolverConfig solver_;
  std::size_t steps_;
  double dt_;
  std::vector<double> decay_;
  std::vector<double> gain_;
};

// Largest deviation from the energy equality along the trajectory
//   ||u(t)||^2 = e^{-nu l1 t} ||u0||^2
//              + 2 int_0^t e^{-nu l1 (t - s)} (<eta, u> - nu [u]^2 - a ||u||^2) ds,
// with the integral by the trapezoid rule on the energy log.
double energy_identity_residual(const Trajectory& traj, const SpectralBasis& basis);

}  // namespace kickflow
