#include "kickflow/ns_dynamics.hpp"

#include <cmath>

#include "kickflow/error.hpp"
#include "kickflow/kernels.hpp"

namespace kickflow {

void SolverConfig::validate() const {
  require(std::isfinite(dt) && dt > 0.0 && dt <= 1.0, ErrorKind::kConfigError,
          "solver.dt must lie in (0, 1]");
  const double n = 1.0 / dt;
  require(std::abs(n - std::round(n)) <= 1e-9 * n, ErrorKind::kConfigError,
          "solver.dt must divide 1 exactly");
  require(dealias == "two-thirds", ErrorKind::kConfigError,
          "solver.dealias must be two-thirds");
  require(grid.nx >= 0 && grid.ny >= 0, ErrorKind::kConfigError, "grid sizes must be nonnegative");
}

std::size_t SolverConfig::steps() const { return static_cast<std::size_t>(std::llround(1.0 / dt)); }

namespace {
CollocationGrid pick_grid(const DomainSpec& domain, const SolverConfig& solver) {
  const CollocationGrid min = CollocationGrid::minimum(domain);
  return {solver.grid.nx == 0 ? min.nx : solver.grid.nx, solver.grid.ny == 0 ? min.ny : solver.grid.ny};
}

const SolverConfig& validated(const SolverConfig& s) {
  s.validate();
  return s;
}
}  // namespace

GalerkinModel::GalerkinModel(const DomainSpec& domain, const SolverConfig& solver)
    : transform_(SpectralBasis(domain), pick_grid(domain, validated(solver))),
      solver_(solver),
      steps_(solver.steps()),
      dt_(1.0 / static_cast<double>(solver.steps())) {
  const SpectralBasis& b = basis();
  decay_.resize(b.size());
  gain_.resize(b.size());
  for (std::size_t k = 0; k < b.size(); ++k) {
    const double lambda = domain.viscosity * b.eigenvalue(k) + domain.damping;
    decay_[k] = std::exp(-lambda * dt_);
    gain_[k] = -std::expm1(-lambda * dt_) / lambda;
  }
}

SpectralField GalerkinModel::nonlinearity(const SpectralField& u) const {
  basis().check(u);
  require(u.is_finite(), ErrorKind::kNumericDomain, "nonlinearity of a non-finite field");
  auto ws = transform_.make_workspace();
  transform_.gradient(u.data(), ws.a, ws);
  SpectralField out(size());
  transform_.advection(ws.a, ws.a, out.data(), ws);
  return out;
}

SpectralField GalerkinModel::advection(const SpectralField& a, const SpectralField& b) const {
  basis().check(a);
  basis().check(b);
  require(a.is_finite() && b.is_finite(), ErrorKind::kNumericDomain,
          "advection of a non-finite field");
  auto ws = transform_.make_workspace();
  transform_.gradient(a.data(), ws.a, ws);
  transform_.gradient(b.data(), ws.b, ws);
  SpectralField out(size());
  transform_.advection(ws.a, ws.b, out.data(), ws);
  return out;
}

SpectralField GalerkinModel::bilinear_q(const SpectralField& a, const SpectralField& b) const {
  basis().check(a);
  basis().check(b);
  require(a.is_finite() && b.is_finite(), ErrorKind::kNumericDomain,
          "bilinear form of a non-finite field");
  auto ws = transform_.make_workspace();
  transform_.gradient(a.data(), ws.a, ws);
  transform_.gradient(b.data(), ws.b, ws);
  SpectralField out(size());
  transform_.symmetric_advection(ws.a, ws.b, out.data(), ws);
  return out;
}

SpectralField GalerkinModel::step(const SpectralField& u, const SpectralField& forcing_value) const {
  basis().check(u);
  basis().check(forcing_value);
  SpectralField nl = nonlinearity(u);
  SpectralField out(size());
  kernels::active().exp_euler(size(), decay_.data(), gain_.data(), u.data(), forcing_value.data(),
                              nl.data(), out.data());
  if (!out.is_finite()) throw DivergedTrajectory(0, norm(out));
  return out;
}

void GalerkinModel::check_kick(const KickPath& eta) const {
  require(eta.modes() == size() && eta.time_order() >= 1, ErrorKind::kInvalidArgument,
          "kick does not match the model dimension");
  for (double c : eta.coeffs()) {
    require(std::isfinite(c), ErrorKind::kNumericDomain, "kick has non-finite coefficients");
  }
}

double GalerkinModel::divergence_threshold(const SpectralField& u0, const KickPath& eta) const {
  const SpectralBasis& b = basis();
  const DomainSpec& d = domain();
  double vdual = 0.0;
  for (std::size_t p = 0; p < eta.time_order(); ++p) {
    for (std::size_t k = 0; k < size(); ++k) vdual += eta.at(p, k) * eta.at(p, k) / b.eigenvalue(k);
  }
  // Energy bound of the interval plus one, scaled by 1e6.
  const double bound = inner(u0, u0) + vdual / (d.viscosity * d.viscosity * b.lambda1()) + 1.0;
  return 1e6 * bound;
}

Trajectory GalerkinModel::flow(const SpectralField& u0, const KickPath& eta, bool record_substeps,
                               bool energy_log) const {
  basis().check(u0);
  require(u0.is_finite(), ErrorKind::kNumericDomain, "initial state is not finite");
  check_kick(eta);
  const auto& kt = kernels::active();
  const SpectralBasis& b = basis();
  const std::size_t K = size();
  const double threshold = divergence_threshold(u0, eta);

  Trajectory traj;
  traj.dt = dt_;
  traj.forcing = eta;
  traj.substeps_recorded = record_substeps;
  traj.states.reserve(record_substeps ? steps_ + 1 : 2);
  traj.states.push_back(u0);
  if (energy_log) traj.energy_log.reserve(steps_ + 1);

  auto ws = transform_.make_workspace();
  SpectralField u = u0;
  std::vector<double> nl(K), force(K), force_now(K);
  const auto log_energy = [&](std::size_t i) {
    const double t = static_cast<double>(i) * dt_;
    eval_kick_into(eta, t, force_now);
    traj.energy_log.push_back({t, kt.dot(K, u.data(), u.data()), bracket(u, u, b),
                               kt.dot(K, force_now.data(), u.data())});
  };
  if (energy_log) log_energy(0);

  for (std::size_t i = 0; i < steps_; ++i) {
    transform_.gradient(u.data(), ws.a, ws);
    transform_.advection(ws.a, ws.a, nl.data(), ws);
    eval_kick_into(eta, (static_cast<double>(i) + 0.5) * dt_, force);
    kt.exp_euler(K, decay_.data(), gain_.data(), u.data(), force.data(), nl.data(), u.data());
    const double e = kt.dot(K, u.data(), u.data());
    if (!std::isfinite(e) || e > threshold * threshold) {
      throw DivergedTrajectory(i + 1, std::sqrt(e));
    }
    if (record_substeps && i + 1 < steps_) traj.states.push_back(u);
    if (energy_log) log_energy(i + 1);
  }
  traj.states.push_back(std::move(u));
  return traj;
}

SpectralField GalerkinModel::time_one_map(const SpectralField& u0, const KickPath& eta) const {
  return flow(u0, eta, false, false).final_state();
}

double energy_identity_residual(const Trajectory& traj, const SpectralBasis& basis) {
  require(traj.energy_log.size() >= 2, ErrorKind::kInvalidState,
          "trajectory has no energy log");
  const DomainSpec& d = basis.spec();
  const double rate = d.viscosity * basis.lambda1();
  const auto& log = traj.energy_log;
  const auto source = [&](const EnergyRecord& r) {
    return r.forcing_work - d.viscosity * r.bracket - d.damping * r.energy;
  };
  double integral = 0.0;
  double worst = 0.0;
  for (std::size_t i = 1; i < log.size(); ++i) {
    const double h = log[i].t - log[i - 1].t;
    const double damp = std::exp(-rate * h);
    integral = damp * integral + 0.5 * h * (damp * source(log[i - 1]) + source(log[i]));
    const double predicted = std::exp(-rate * log[i].t) * log[0].energy + 2.0 * integral;
    worst = std::max(worst, std::abs(log[i].energy - predicted));
  }
  return worst;
}

}  // namespace kickflow
