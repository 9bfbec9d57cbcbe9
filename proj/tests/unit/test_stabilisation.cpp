#include <gtest/gtest.h>

#include <cmath>

#include "common.hpp"
#include "kickflow/error.hpp"
#include "kickflow/stabilisation.hpp"

namespace kf = kickflow;
using kftest::SmallSystem;

namespace {

Eigen::VectorXd vec(const kf::KickPath& k) {
  return Eigen::Map<const Eigen::VectorXd>(k.coeffs().data(), static_cast<Eigen::Index>(k.size()));
}

Eigen::VectorXd vec(const kf::SpectralField& f) {
  return Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
}

}  // namespace

TEST(Stabilisation, FullRankRightInverseMatchesSpectralForm) {
  const SmallSystem& s = SmallSystem::get();
  const double gamma = 1e-3;
  const kf::RightInverse r = kf::right_inverse(s.ops, *s.noise, s.noise->dimension(), gamma);
  // A R = V diag(lambda / (lambda + gamma)) V^T.
  const Eigen::VectorXd f = s.ops.gram_eigenvalues.array() / (s.ops.gram_eigenvalues.array() + gamma);
  const Eigen::MatrixXd expect = s.ops.gram_eigenvectors * f.asDiagonal() * s.ops.gram_eigenvectors.transpose();
  EXPECT_LE((s.ops.a_matrix * r.matrix - expect).norm(), 1e-10);
  const double lmin = s.ops.gram_eigenvalues(0), lmax = s.ops.gram_eigenvalues(s.ops.gram_eigenvalues.size() - 1);
  EXPECT_NEAR(r.condition, (lmax + gamma) / (lmin + gamma), 1e-9 * r.condition);
}

TEST(Stabilisation, ApplyAgreesWithDenseInverse) {
  const SmallSystem& s = SmallSystem::get();
  kf::ControlConfig ctl;
  ctl.M = 30;
  ctl.gamma = 1e-2;
  const kf::RightInverse r = kf::right_inverse(s.ops, *s.noise, ctl.M, ctl.gamma);
  const kf::SpectralField f = s.model->basis().zero() + kf::SpectralField::unit(s.model->size(), 2);
  double cond = 0.0;
  const kf::KickPath got = kf::right_inverse_apply(s.ops, *s.noise, f, ctl, &cond);
  EXPECT_LE((vec(got) - r.matrix * vec(f)).norm(), 1e-12);
  EXPECT_NEAR(cond, r.condition, 1e-12 * cond);
  std::size_t nonzero = 0;
  for (double c : got.coeffs()) nonzero += c != 0.0;
  EXPECT_LE(nonzero, ctl.M);
}

TEST(Stabilisation, PhiAndEpsilon) {
  const SmallSystem& s = SmallSystem::get();
  kf::ControlConfig ctl;
  ctl.M = s.noise->dimension();
  ctl.gamma = 1e-4;
  kf::SpectralField up = s.u;
  up[0] += 1e-3;
  up[3] -= 2e-3;
  const kf::RightInverse r = kf::right_inverse(s.ops, *s.noise, ctl.M, ctl.gamma);
  const kf::KickPath ph = kf::phi(s.ops, *s.noise, s.u, up, ctl);
  EXPECT_LE((vec(ph) + r.matrix * (s.ops.psi2 * (vec(up) - vec(s.u)))).norm(), 1e-14);
  const Eigen::MatrixXd e = s.ops.a_matrix * r.matrix * s.ops.psi2 - s.ops.psi2;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(e);
  EXPECT_NEAR(kf::epsilon_check(s.ops, *s.noise, ctl), svd.singularValues()(0), 1e-15);
  // Smaller gamma with full rank brings A R closer to the identity on range(Psi_2).
  kf::ControlConfig loose = ctl;
  loose.gamma = 1e-1;
  EXPECT_LT(kf::epsilon_check(s.ops, *s.noise, ctl), kf::epsilon_check(s.ops, *s.noise, loose));
}

TEST(Stabilisation, TuneReturnsFirstFeasiblePair) {
  const SmallSystem& s = SmallSystem::get();
  const double target = 0.5 * kf::epsilon_check(s.ops, kf::right_inverse(s.ops, *s.noise, s.model->size(), 1e-1));
  const kf::TuneResult t = kf::tune(s.ops, *s.noise, target);
  EXPECT_LE(t.epsilon, target);
  EXPECT_EQ(t.epsilon, kf::epsilon_check(s.ops, kf::right_inverse(s.ops, *s.noise, t.M, t.gamma)));
  // Every earlier candidate fails.
  for (std::size_t M = s.model->size(); M <= t.M; M += s.model->size()) {
    for (int e = 1; e <= 8; ++e) {
      const double g = std::pow(10.0, -e);
      if (M == t.M && g <= t.gamma) break;
      EXPECT_GT(kf::epsilon_check(s.ops, kf::right_inverse(s.ops, *s.noise, M, g)), target);
    }
  }
  try {
    kf::tune(s.ops, *s.noise, 0.0);
    FAIL();
  } catch (const kf::TuningFailed& e) {
    EXPECT_GT(e.best_epsilon(), 0.0);
    EXPECT_EQ(kf::exit_code(e.kind()), 4);
  }
}

TEST(Stabilisation, ControlValidation) {
  kf::ControlConfig c;
  EXPECT_NO_THROW(c.validate(10));
  c.M = 11;
  EXPECT_THROW(c.validate(10), kf::Error);
  c = {};
  c.q_target = 1.0;
  EXPECT_THROW(c.validate(10), kf::Error);
  c = {};
  c.gamma = 0.0;
  EXPECT_THROW(c.validate(10), kf::Error);
}

TEST(Stabilisation, CouplingContracts) {
  const SmallSystem& s = SmallSystem::get();
  kf::ControlConfig ctl;
  kf::SpectralField up = s.u;
  up[1] += 0.6 * ctl.delta;
  up[2] -= 0.8 * ctl.delta;
  const kf::CouplingSetup setup{s.model.get(), s.noise.get(), 7, 0, 5, 1};
  const kf::CouplingReport rep = kf::couple(setup, s.u, up, 6, ctl);
  ASSERT_FALSE(rep.steps.empty());
  EXPECT_FALSE(rep.violated);
  EXPECT_GT(rep.M, 0u);
  EXPECT_LT(rep.q_max(), 0.95);
  EXPECT_TRUE(rep.phi_bound_holds());
  for (const auto& st : rep.steps) {
    if (st.dist == 0.0 || st.dist_next == 0.0) continue;
    EXPECT_NEAR(st.qhat, st.dist_next / st.dist, 1e-15);
    EXPECT_LE(st.eps_hat, ctl.eps_target);
    // Second-order remainder: the realised distance stays under the squeeze bound.
    EXPECT_LE(st.dist_next, st.squeeze_bound * (1.0 + 1e-9));
  }
  // The first step uses the same kick as the stored base trajectory.
  EXPECT_NEAR(rep.steps[0].dist, ctl.delta, 1e-15);
}

TEST(Stabilisation, CouplingRejectsDistantPairs) {
  const SmallSystem& s = SmallSystem::get();
  kf::ControlConfig ctl;
  kf::SpectralField up = s.u;
  up[0] += 2.0 * ctl.delta;
  const kf::CouplingSetup setup{s.model.get(), s.noise.get(), 7, 0, 5, 1};
  EXPECT_THROW(kf::couple(setup, s.u, up, 3, ctl), kf::Error);
}
