#include "kickflow/stabilisation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kickflow/error.hpp"

namespace kickflow {

namespace {

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

Eigen::Map<const Eigen::VectorXd> as_vector(const SpectralField& f) {
  return {f.data(), static_cast<Eigen::Index>(f.size())};
}

void check_ops(const TangentOperators& ops, const NoiseModel& noise) {
  require(ops.has_psi() && ops.has_gram(), ErrorKind::kInvalidState,
          "tangent operators are not assembled");
  require(static_cast<std::size_t>(ops.a_matrix.cols()) == noise.dimension(),
          ErrorKind::kInvalidArgument, "operators do not match the noise model");
}

KickPath to_kick(const NoiseModel& noise, const Eigen::VectorXd& x) {
  KickPath out(noise.time_order(), noise.modes());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = x[static_cast<Eigen::Index>(j)];
  return out;
}

}  // namespace

void ControlConfig::validate(std::size_t dimension) const {
  require(M <= dimension, ErrorKind::kConfigError, "control.M exceeds the noise dimension");
  require(std::isfinite(gamma) && gamma > 0.0, ErrorKind::kConfigError, "control.gamma must be > 0");
  require(std::isfinite(delta) && delta > 0.0, ErrorKind::kConfigError, "control.delta must be > 0");
  require(q_target > 0.0 && q_target < 1.0, ErrorKind::kConfigError,
          "control.q_target must lie in (0, 1)");
  require(std::isfinite(eps_target) && eps_target >= 0.0, ErrorKind::kConfigError,
          "control.eps_target must be >= 0");
}

RightInverse right_inverse(const TangentOperators& ops, const NoiseModel& noise, std::size_t M,
                           double gamma) {
  check_ops(ops, noise);
  require(M <= noise.dimension(), ErrorKind::kInvalidArgument, "M exceeds the noise dimension");
  require(gamma > 0.0, ErrorKind::kInvalidArgument, "gamma must be positive");
  const Eigen::Index K = ops.gram.rows();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(K, K);
  const Eigen::LLT<Eigen::MatrixXd> llt(ops.gram + gamma * id);
  RightInverse r;
  r.matrix = ops.a_matrix.transpose() * llt.solve(id);
  std::vector<bool> keep(noise.dimension(), false);
  for (std::size_t i = 0; i < M; ++i) keep[noise.order()[i]] = true;
  for (std::size_t j = 0; j < keep.size(); ++j) {
    if (!keep[j]) r.matrix.row(static_cast<Eigen::Index>(j)).setZero();
  }
  const double lo = std::max(0.0, ops.gram_eigenvalues(0));
  r.condition = (ops.gram_eigenvalues(K - 1) + gamma) / (lo + gamma);
  return r;
}

KickPath right_inverse_apply(const TangentOperators& ops, const NoiseModel& noise,
                             const SpectralField& f, const ControlConfig& ctl, double* condition) {
  check_ops(ops, noise);
  require(static_cast<Eigen::Index>(f.size()) == ops.gram.rows(), ErrorKind::kInvalidArgument,
          "field dimension mismatch");
  require(ctl.gamma > 0.0, ErrorKind::kInvalidArgument, "gamma must be positive");
  require(ctl.M <= noise.dimension(), ErrorKind::kInvalidArgument, "M exceeds the noise dimension");
  const Eigen::Index K = ops.gram.rows();
  const Eigen::LLT<Eigen::MatrixXd> llt(ops.gram + ctl.gamma * Eigen::MatrixXd::Identity(K, K));
  const Eigen::VectorXd x = ops.a_matrix.transpose() * llt.solve(as_vector(f));
  if (condition) {
    const double lo = std::max(0.0, ops.gram_eigenvalues(0));
    *condition = (ops.gram_eigenvalues(K - 1) + ctl.gamma) / (lo + ctl.gamma);
  }
  return noise.project_pm(to_kick(noise, x), ctl.M);
}

KickPath phi(const TangentOperators& ops, const NoiseModel& noise, const SpectralField& u,
             const SpectralField& u_prime, const ControlConfig& ctl) {
  require(u.size() == u_prime.size() && static_cast<Eigen::Index>(u.size()) == ops.psi2.rows(),
          ErrorKind::kInvalidArgument, "field dimension mismatch");
  const Eigen::VectorXd g = ops.psi2 * (as_vector(u_prime) - as_vector(u));
  SpectralField gf(std::vector<double>(g.data(), g.data() + g.size()));
  KickPath out = right_inverse_apply(ops, noise, gf, ctl);
  out *= -1.0;
  return out;
}

double epsilon_check(const TangentOperators& ops, const RightInverse& r) {
  const Eigen::MatrixXd e = ops.a_matrix * (r.matrix * ops.psi2) - ops.psi2;
  return spectral_norm(e);
}

double epsilon_check(const TangentOperators& ops, const NoiseModel& noise,
                     const ControlConfig& ctl) {
  return epsilon_check(ops, right_inverse(ops, noise, ctl.M, ctl.gamma));
}

TuneResult tune(const TangentOperators& ops, const NoiseModel& noise, double epsilon_target) {
  check_ops(ops, noise);
  const std::size_t K = noise.modes();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t M = K; M <= noise.dimension(); M += K) {
    for (int e = 1; e <= 8; ++e) {
      const double gamma = std::pow(10.0, -e);
      const double eps = epsilon_check(ops, right_inverse(ops, noise, M, gamma));
      best = std::min(best, eps);
      if (eps <= epsilon_target) return {M, gamma, eps};
    }
  }
  throw TuningFailed(best);
}

double CouplingReport::q_max() const {
  double q = 0.0;
  for (const auto& s : steps) q = std::max(q, s.qhat);
  return q;
}

double CouplingReport::q_geo_mean() const {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& s : steps) {
    if (s.dist > 0.0 && s.dist_next > 0.0) {
      acc += std::log(s.qhat);
      ++n;
    }
  }
  return n == 0 ? 0.0 : std::exp(acc / static_cast<double>(n));
}

double CouplingReport::c_hat() const {
  double c = 0.0;
  for (const auto& s : steps) c = std::max(c, s.c_hat);
  return c;
}

bool CouplingReport::phi_bound_holds() const {
  return std::all_of(steps.begin(), steps.end(), [](const CouplingStep& s) {
    return s.phi_norm <= s.c_hat * s.dist * (1.0 + 1e-12) + 1e-300;
  });
}

CouplingReport couple(const CouplingSetup& setup, const SpectralField& u0,
                      const SpectralField& u0_prime, std::size_t n_steps, ControlConfig ctl) {
  require(setup.model && setup.noise, ErrorKind::kInvalidArgument, "coupling setup incomplete");
  const GalerkinModel& model = *setup.model;
  const NoiseModel& noise = *setup.noise;
  ctl.validate(noise.dimension());
  model.basis().check(u0);
  model.basis().check(u0_prime);
  require(norm(u0 - u0_prime) <= ctl.delta * (1.0 + 1e-12), ErrorKind::kInvalidArgument,
          "initial pair is farther apart than delta");

  CouplingReport report;
  SpectralField u = u0;
  SpectralField up = u0_prime;
  for (std::size_t k = 0; k < n_steps; ++k) {
    CouplingStep rec;
    rec.k = k;
    const SpectralField s = up - u;
    rec.dist = norm(s);
    if (rec.dist < 1e-14) {
      report.steps.push_back(rec);
      report.underflow = true;
      break;
    }
    const KickPath eta = noise.sample(kick_stream(setup.kick_seed, setup.lineage, setup.first_kick + k));
    const Trajectory base = model.flow(u, eta, true, false);
    const TangentContext ctx(model, base);
    const TangentOperators ops = assemble_all(ctx, noise.time_order(), setup.workers);
    if (ctl.M == 0) {
      const TuneResult t = tune(ops, noise, ctl.eps_target);
      ctl.M = t.M;
      ctl.gamma = t.gamma;
    }
    report.M = ctl.M;
    report.gamma = ctl.gamma;

    const RightInverse r = right_inverse(ops, noise, ctl.M, ctl.gamma);
    KickPath control = phi(ops, noise, u, up, ctl);
    rec.phi_norm = control.norm();
    rec.eps_hat = epsilon_check(ops, r);
    rec.c_hat = spectral_norm(r.matrix) * spectral_norm(ops.psi2);
    const Eigen::VectorXd g = ops.psi2 * as_vector(s);
    rec.residual = (ops.a_matrix * (r.matrix * g) - g).norm() / rec.dist;

    const SpectralField next = base.final_state();
    const SpectralField next_p = model.time_one_map(up, eta + control);
    // Central second difference of (s, Phi) -> S(u + s, eta + Phi).
    KickPath minus_control = control;
    minus_control *= -1.0;
    const SpectralField back = model.time_one_map(u - s, eta + minus_control);
    SpectralField second = next_p + back;
    second -= 2.0 * next;
    rec.c2_hat = norm(second) / (2.0 * rec.dist * rec.dist);

    rec.dist_next = norm(next_p - next);
    rec.qhat = rec.dist_next / rec.dist;
    rec.squeeze_bound = (ops.psi1_norm() + rec.eps_hat + rec.c2_hat * rec.dist) * rec.dist;
    report.steps.push_back(rec);

    u = next;
    up = next_p;
    if (rec.dist_next > ctl.delta || rec.qhat >= 1.0) {
      report.violated = true;
      report.violation_step = k;
      report.violation_qhat = rec.qhat;
      break;
    }
    if (rec.dist_next < 1e-14) {
      report.underflow = true;
      break;
    }
  }
  return report;
}

}  // namespace kickflow
