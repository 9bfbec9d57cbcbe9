#pragma once

// Markov chain u_k = S(u_{k-1}, eta_k) and measure-level diagnostics on
// weighted particle ensembles.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kickflow/kick_noise.hpp"
#include "kickflow/ns_dynamics.hpp"

namespace kickflow {

struct EmpiricalEnsemble {
  std::vector<SpectralField> particles;
  std::vector<double> weights;         // sums to 1
  std::vector<std::uint64_t> lineage;  // per-particle noise stream id
  std::uint64_t kick_index = 0;

  // Uniform weights; lineage ids first_lineage, first_lineage + 1, ...
  static EmpiricalEnsemble uniform(std::vector<SpectralField> particles,
                                   std::uint64_t first_lineage = 0);

  std::size_t size() const { return particles.size(); }
  bool empty() const { return particles.empty(); }

  // Throws invalid-state when sizes disagree or weights are not normalised.
  void check() const;
};

// States u_0, ..., u_n at integer times; kick j uses kick_stream(seed, lineage, j - 1 + first_kick).
std::vector<SpectralField> markov_run(const GalerkinModel& model, const NoiseModel& noise,
                                      const SpectralField& u0, std::size_t n_kicks,
                                      std::uint64_t seed, std::uint64_t lineage = 0,
                                      std::uint64_t first_kick = 0);

// One kick for every particle; particle i draws from kick_stream(seed, lineage[i], kick_index).
EmpiricalEnsemble ensemble_step(const EmpiricalEnsemble& ens, const GalerkinModel& model,
                                const NoiseModel& noise, std::uint64_t seed, unsigned workers = 1);

// Uniform mixture over time of the ensembles history[burn_in], history[burn_in + thin], ...
// Particle weights within each ensemble are kept relative to one another.
EmpiricalEnsemble krylov_average(std::span<const EmpiricalEnsemble> history, std::size_t burn_in,
                                 std::size_t thin = 1);

// Occupation measure of a single trajectory after burn_in.
EmpiricalEnsemble krylov_average(std::span<const SpectralField> trajectory, std::size_t burn_in);

// Unit directions w with functionals g(u) = clamp(<u, w>, -R, R) / max(1, R),
// evaluated with an extra factor 1/2 so that ||g||_inf + Lip(g) <= 1.
class TestDictionary {
 public:
  TestDictionary(std::vector<SpectralField> directions, double clamp_radius);

  // Leading `modes` eigenmodes plus `random` Gaussian directions.
  static TestDictionary standard(const SpectralBasis& basis, std::size_t modes,
                                 std::size_t random, std::uint64_t seed, double clamp_radius = 1.0);

  std::size_t size() const { return directions_.size(); }
  const SpectralField& direction(std::size_t i) const { return directions_[i]; }
  double clamp_radius() const { return radius_; }

  double evaluate(std::size_t i, const SpectralField& u) const;

 private:
  std::vector<SpectralField> directions_;
  double radius_;
};

struct DistanceReport {
  double value = 0.0;           // max of the two parts below
  double functional_part = 0.0; // max_i |<g_i, mu1> - <g_i, mu2>|
  double projected_part = 0.0;  // max_i exact 1D distance of <u, w_i>
  std::size_t best_direction = 0;
};

// Certified lower bound of the dual-Lipschitz distance.
DistanceReport dual_lipschitz_lower(const EmpiricalEnsemble& mu1, const EmpiricalEnsemble& mu2,
                                    const TestDictionary& dict, unsigned workers = 1);

// Distance between the even- and odd-indexed halves of one ensemble.
double split_half_floor(const EmpiricalEnsemble& ens, const TestDictionary& dict,
                        unsigned workers = 1);

struct MixingFit {
  double C = 0.0;
  double c = 0.0;
  double r2 = 0.0;
  std::size_t k0 = 0;
  std::size_t k1 = 0;  // inclusive
};

// Least squares for log d_k = log C - c k over k in [k0, k0 + d.size()).
// Throws insufficient-data with fewer than 4 points or nonpositive data.
MixingFit mixing_fit(std::span<const double> d, std::size_t k0 = 0);

// Fit over the leading run of d_k above `floor`, starting at k0.
MixingFit mixing_fit_above(std::span<const double> d, double floor, std::size_t k0 = 0);

struct TailEnergy {
  std::vector<double> per_particle;
  double max = 0.0;
};

// sum over alpha_k > lambda of c_k^2 for every particle.
TailEnergy tail_energy(const EmpiricalEnsemble& ens, const SpectralBasis& basis, double lambda);

struct AbsorbingBounds {
  double kappa_bar = 0.0;  // e^{-nu lambda_1}
  double m2 = 0.0;         // nu^{-2} lambda_1^{-1} sup ||eta||^2_{L^2 V'}
  double radius2 = 0.0;    // 2 M2 / (1 - kappa_bar)
  std::size_t k_star = 0;
  std::size_t burn_in = 0; // 2 k_star

  // kappa_bar^k m1 + M2 / (1 - kappa_bar).
  double envelope(std::size_t k, double m1) const;
};

// m1 bounds ||u0||^2 over the initial compact.
AbsorbingBounds absorbing_bounds(const SpectralBasis& basis, const NoiseModel& noise, double m1);

// Points r v_i with v_i uniform on the unit sphere of the leading `modes` eigenmodes.
EmpiricalEnsemble sphere_compact(const SpectralBasis& basis, std::size_t count, double radius,
                                 std::uint64_t seed, std::uint64_t first_lineage,
                                 std::size_t modes = 8);

}  // namespace kickflow
