#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kickflow/error.hpp"
#include "kickflow/ns_dynamics.hpp"

namespace kf = kickflow;

namespace {

kf::SpectralField random_field(const kf::SpectralBasis& b, std::mt19937_64& gen) {
  std::normal_distribution<double> d;
  kf::SpectralField u(b.size());
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = d(gen) / (1.0 + b.eigenvalue(k));
  return u;
}

}  // namespace

TEST(NsDynamics, NonlinearityIsEnergyNeutral) {
  const kf::GalerkinModel model(kf::DomainSpec{}, kf::SolverConfig{});
  std::mt19937_64 gen(1);
  for (int i = 0; i < 100; ++i) {
    kf::SpectralField u = random_field(model.basis(), gen);
    u *= 10.0;
    const kf::FieldNorms n = kf::norms(u, model.basis());
    EXPECT_LE(std::abs(kf::inner(model.nonlinearity(u), u)), 1e-10 * n.h * n.v * n.v);
  }
}

TEST(NsDynamics, BilinearFormIsSymmetrisedAdvection) {
  const kf::GalerkinModel model(kf::DomainSpec{}, kf::SolverConfig{});
  std::mt19937_64 gen(2);
  const kf::SpectralField a = random_field(model.basis(), gen);
  const kf::SpectralField b = random_field(model.basis(), gen);
  const kf::SpectralField q = model.bilinear_q(a, b);
  EXPECT_LE(kf::norm(q - model.advection(a, b) - model.advection(b, a)), 1e-14);
  EXPECT_LE(kf::norm(model.advection(a, a) - model.nonlinearity(a)), 1e-14);
}

TEST(NsDynamics, ShearModesDecayExactly) {
  // Flows with m = 0 only are parallel shear flows, for which B vanishes.
  const kf::GalerkinModel model(kf::DomainSpec{}, kf::SolverConfig{});
  const kf::SpectralBasis& b = model.basis();
  kf::SpectralField u(b.size());
  for (int n = 1; n <= 3; ++n) u[b.index_of({0, n})] = 1.0 / n;
  EXPECT_LE(kf::norm(model.nonlinearity(u)), 1e-13);
  const kf::KickPath zero(2, b.size());
  const kf::SpectralField out = model.time_one_map(u, zero);
  for (int n = 1; n <= 3; ++n) {
    const std::size_t k = b.index_of({0, n});
    EXPECT_NEAR(out[k], std::exp(-0.1 * b.eigenvalue(k)) / n, 1e-13);  // 1000 rounded products
  }
}

TEST(NsDynamics, ShearForcingMatchesDuhamel) {
  // Midpoint sampling of the forcing makes the scheme second order for this linear problem.
  const kf::SpectralBasis b{kf::DomainSpec{}};
  kf::KickPath eta(2, b.size());
  for (int n = 1; n <= 5; ++n) {
    eta.at(0, b.index_of({0, n})) = 0.3 / n;
    eta.at(1, b.index_of({0, n})) = -0.2 * n;
  }
  auto error = [&](double dt) {
    kf::SolverConfig s;
    s.dt = dt;
    const kf::GalerkinModel model(kf::DomainSpec{}, s);
    const kf::SpectralField out = model.time_one_map(b.zero(), eta);
    double worst = 0.0;
    for (int n = 1; n <= 5; ++n) {
      const std::size_t k = b.index_of({0, n});
      const double lam = 0.1 * b.eigenvalue(k);
      // int_0^1 e^{-lam (1 - t)} (c0 + c1 sqrt(3) (2t - 1)) dt in closed form.
      const double i0 = (1.0 - std::exp(-lam)) / lam;
      const double i1 = std::sqrt(3.0) * (2.0 * (1.0 / lam - (1.0 - std::exp(-lam)) / (lam * lam)) - i0);
      const double expect = eta.at(0, k) * i0 + eta.at(1, k) * i1;
      worst = std::max(worst, std::abs(out[k] - expect) / std::abs(expect));
    }
    for (std::size_t k = 0; k < b.size(); ++k) {
      if (b.mode(k).m != 0) {
        EXPECT_EQ(out[k], 0.0);
      }
    }
    return worst;
  };
  const double e1 = error(2e-3), e2 = error(1e-3);
  EXPECT_LE(e2, 1e-5);
  EXPECT_NEAR(e1 / e2, 4.0, 0.2);
}

TEST(NsDynamics, EnergyIdentityConverges) {
  const kf::SpectralBasis basis{kf::DomainSpec{}};
  const kf::NoiseModel noise(kf::NoiseSpec{}, basis);
  const kf::KickPath eta = noise.sample(kf::kick_stream(3, 0, 0));
  std::mt19937_64 gen(3);
  const kf::SpectralField u0 = random_field(basis, gen);
  double prev = 0.0;
  for (double dt : {4e-3, 2e-3, 1e-3}) {
    kf::SolverConfig s;
    s.dt = dt;
    const kf::GalerkinModel model(kf::DomainSpec{}, s);
    const double r = kf::energy_identity_residual(model.flow(u0, eta), model.basis());
    EXPECT_LE(r, 1e-3);
    if (prev > 0.0) {
      EXPECT_GE(prev / r, 1.8) << dt;
    }
    prev = r;
  }
}

TEST(NsDynamics, ZeroNoiseDecay) {
  const kf::GalerkinModel model(kf::DomainSpec{}, kf::SolverConfig{});
  std::mt19937_64 gen(4);
  kf::SpectralField u = random_field(model.basis(), gen);
  u *= 2.0 / kf::norm(u);
  const double n0 = kf::norm(u);
  const kf::KickPath zero(2, model.size());
  const double rate = 0.1 * model.basis().lambda1();
  for (int n = 1; n <= 10; ++n) {
    u = model.time_one_map(u, zero);
    EXPECT_LE(kf::norm(u), std::exp(-rate * n) * n0 * (1.0 + 1e-9));
  }
}

TEST(NsDynamics, TrajectoryRecording) {
  kf::SolverConfig s;
  s.dt = 0.01;
  const kf::GalerkinModel model(kf::DomainSpec{}, s);
  const kf::KickPath zero(1, model.size());
  std::mt19937_64 gen(5);
  const kf::SpectralField u0 = random_field(model.basis(), gen);
  const kf::Trajectory full = model.flow(u0, zero, true, true);
  EXPECT_EQ(full.states.size(), 101u);
  EXPECT_EQ(full.energy_log.size(), 101u);
  const kf::Trajectory ends = model.flow(u0, zero, false, false);
  EXPECT_EQ(ends.states.size(), 2u);
  EXPECT_EQ(full.final_state(), ends.final_state());
}

TEST(NsDynamics, ConfigurationErrors) {
  kf::SolverConfig s;
  s.dt = 0.3;
  try {
    s.validate();
    FAIL() << "expected config-error";
  } catch (const kf::Error& e) {
    EXPECT_EQ(e.kind(), kf::ErrorKind::kConfigError);
  }
  s = {};
  s.dealias = "none-such";
  EXPECT_THROW(s.validate(), kf::Error);
  const kf::GalerkinModel model(kf::DomainSpec{}, kf::SolverConfig{});
  EXPECT_THROW(model.time_one_map(model.basis().zero(), kf::KickPath(2, 3)), kf::Error);
}

TEST(NsDynamics, DivergenceIsReported) {
  kf::SolverConfig s;
  s.dt = 0.5;
  const kf::GalerkinModel model(kf::DomainSpec{}, s);
  std::mt19937_64 gen(6);
  kf::SpectralField u = random_field(model.basis(), gen);
  u *= 1e4 / kf::norm(u);
  const kf::KickPath zero(1, model.size());
  try {
    for (int i = 0; i < 20; ++i) u = model.time_one_map(u, zero);
    FAIL() << "expected divergence";
  } catch (const kf::DivergedTrajectory& e) {
    EXPECT_EQ(e.kind(), kf::ErrorKind::kDivergedTrajectory);
    EXPECT_EQ(kf::exit_code(e.kind()), 3);
  }
}
