#include <gtest/gtest.h>

#include <cmath>

#include "kickflow/dual_lipschitz.hpp"
#include "kickflow/error.hpp"
#include "kickflow/ergodicity.hpp"

namespace kf = kickflow;

namespace {

struct Small {
  kf::DomainSpec domain;
  kf::SolverConfig solver;
  kf::GalerkinModel model;
  kf::NoiseModel noise;

  static kf::DomainSpec make_domain() {
    kf::DomainSpec d;
    d.mx = 2;
    d.ny = 2;
    return d;
  }
  static kf::SolverConfig make_solver() {
    kf::SolverConfig s;
    s.dt = 1e-2;
    return s;
  }
  Small()
      : domain(make_domain()),
        solver(make_solver()),
        model(domain, solver),
        noise(kf::NoiseSpec{}, model.basis()) {}
};

}  // namespace

TEST(Ergodicity, UniformEnsemble) {
  const Small s;
  std::vector<kf::SpectralField> p(4, s.model.basis().zero());
  const auto e = kf::EmpiricalEnsemble::uniform(p, 10);
  EXPECT_EQ(e.size(), 4u);
  EXPECT_EQ(e.lineage[3], 13u);
  for (double w : e.weights) EXPECT_DOUBLE_EQ(w, 0.25);
  EXPECT_NO_THROW(e.check());
  auto bad = e;
  bad.weights[0] = 0.5;
  EXPECT_THROW(bad.check(), kf::Error);
}

TEST(Ergodicity, EnsembleStepMatchesMarkovRuns) {
  const Small s;
  auto e = kf::sphere_compact(s.model.basis(), 5, 1.0, 3, 20, 4);
  const auto start = e.particles;
  for (int k = 0; k < 3; ++k) e = kf::ensemble_step(e, s.model, s.noise, 9, 2);
  EXPECT_EQ(e.kick_index, 3u);
  for (std::size_t i = 0; i < e.size(); ++i) {
    const auto run = kf::markov_run(s.model, s.noise, start[i], 3, 9, 20 + i);
    ASSERT_EQ(run.size(), 4u);
    EXPECT_EQ(run.back(), e.particles[i]);
  }
  const auto serial = kf::ensemble_step(kf::sphere_compact(s.model.basis(), 5, 1.0, 3, 20, 4),
                                        s.model, s.noise, 9, 1);
  const auto parallel = kf::ensemble_step(kf::sphere_compact(s.model.basis(), 5, 1.0, 3, 20, 4),
                                          s.model, s.noise, 9, 3);
  EXPECT_EQ(serial.particles, parallel.particles);
}

TEST(Ergodicity, MarkovRunContinuation) {
  const Small s;
  const auto u0 = s.model.basis().zero();
  const auto full = kf::markov_run(s.model, s.noise, u0, 6, 4, 1);
  const auto head = kf::markov_run(s.model, s.noise, u0, 2, 4, 1);
  const auto tail = kf::markov_run(s.model, s.noise, head.back(), 4, 4, 1, 2);
  EXPECT_EQ(full[6], tail.back());
}

TEST(Ergodicity, KrylovAverage) {
  const Small s;
  std::vector<kf::SpectralField> traj;
  for (int i = 0; i < 6; ++i) {
    kf::SpectralField u = s.model.basis().zero();
    u[0] = i;
    traj.push_back(u);
  }
  const auto occ = kf::krylov_average(std::span<const kf::SpectralField>(traj), 2);
  ASSERT_EQ(occ.size(), 4u);
  EXPECT_EQ(occ.particles[0][0], 2.0);
  for (double w : occ.weights) EXPECT_DOUBLE_EQ(w, 0.25);

  std::vector<kf::EmpiricalEnsemble> hist;
  for (int i = 0; i < 5; ++i) {
    hist.push_back(kf::EmpiricalEnsemble::uniform({traj[i], traj[i + 1]}));
  }
  const auto mix = kf::krylov_average(std::span<const kf::EmpiricalEnsemble>(hist), 1, 2);
  ASSERT_EQ(mix.size(), 4u);  // history entries 1 and 3
  EXPECT_EQ(mix.particles[0][0], 1.0);
  EXPECT_EQ(mix.particles[2][0], 3.0);
  EXPECT_NO_THROW(mix.check());
}

TEST(Ergodicity, DictionaryFunctionalsAreAdmissible) {
  const Small s;
  const auto dict = kf::TestDictionary::standard(s.model.basis(), 4, 6, 1, 2.0);
  ASSERT_EQ(dict.size(), 10u);
  for (std::size_t i = 0; i < dict.size(); ++i) EXPECT_NEAR(kf::norm(dict.direction(i)), 1.0, 1e-14);
  EXPECT_EQ(dict.direction(0), kf::SpectralField::unit(s.model.basis().size(), 0));
  kf::SpectralField u = s.model.basis().zero();
  u[0] = 100.0;
  EXPECT_DOUBLE_EQ(dict.evaluate(0, u), 0.5);
  u[0] = 0.5;
  EXPECT_DOUBLE_EQ(dict.evaluate(0, u), 0.125);
}

TEST(Ergodicity, DistanceOfDiracsAlongDirection) {
  const Small s;
  const auto dict = kf::TestDictionary::standard(s.model.basis(), 3, 0, 1);
  kf::SpectralField u = s.model.basis().zero(), v = u;
  v[1] = 0.4;
  const auto a = kf::EmpiricalEnsemble::uniform({u});
  const auto b = kf::EmpiricalEnsemble::uniform({v});
  const kf::DistanceReport r = kf::dual_lipschitz_lower(a, b, dict);
  EXPECT_NEAR(r.projected_part, 2.0 * 0.4 / 2.4, 1e-12);
  EXPECT_NEAR(r.functional_part, 0.2, 1e-15);
  EXPECT_NEAR(r.value, 2.0 * 0.4 / 2.4, 1e-12);
  EXPECT_EQ(r.best_direction, 1u);
  EXPECT_EQ(kf::dual_lipschitz_lower(a, a, dict).value, 0.0);
}

TEST(Ergodicity, SplitHalfFloor) {
  const Small s;
  const auto dict = kf::TestDictionary::standard(s.model.basis(), 3, 2, 1);
  auto e = kf::sphere_compact(s.model.basis(), 64, 1.0, 5, 0, 3);
  const double f = kf::split_half_floor(e, dict);
  EXPECT_GT(f, 0.0);
  EXPECT_LT(f, 1.0);
  std::vector<kf::SpectralField> evens, odds;
  for (std::size_t i = 0; i < e.size(); ++i) (i % 2 ? odds : evens).push_back(e.particles[i]);
  EXPECT_EQ(f, kf::dual_lipschitz_lower(kf::EmpiricalEnsemble::uniform(evens),
                                        kf::EmpiricalEnsemble::uniform(odds), dict)
                   .value);
  EXPECT_THROW(kf::split_half_floor(kf::EmpiricalEnsemble::uniform({e.particles[0]}), dict),
               kf::Error);
}

TEST(Ergodicity, MixingFitRecoversExponential) {
  std::vector<double> d;
  for (int k = 0; k < 12; ++k) d.push_back(2.0 * std::exp(-0.3 * (k + 3)));
  const kf::MixingFit f = kf::mixing_fit(d, 3);
  EXPECT_NEAR(f.C, 2.0, 1e-12);
  EXPECT_NEAR(f.c, 0.3, 1e-12);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
  EXPECT_EQ(f.k0, 3u);
  EXPECT_EQ(f.k1, 14u);

  std::vector<double> floored = d;
  for (int i = 0; i < 5; ++i) floored.push_back(1e-3);
  const kf::MixingFit g = kf::mixing_fit_above(floored, 0.01);
  EXPECT_NEAR(g.c, 0.3, 1e-12);
  EXPECT_EQ(g.k1, 11u);

  try {
    kf::mixing_fit(std::vector<double>{1.0, 0.5, 0.25});
    FAIL();
  } catch (const kf::Error& e) {
    EXPECT_EQ(e.kind(), kf::ErrorKind::kInsufficientData);
    EXPECT_EQ(kf::exit_code(e.kind()), 6);
  }
  EXPECT_THROW(kf::mixing_fit(std::vector<double>{1.0, 0.5, 0.0, 0.1}), kf::Error);
}

TEST(Ergodicity, TailEnergy) {
  const Small s;
  const kf::SpectralBasis& b = s.model.basis();
  kf::SpectralField u(b.size());
  for (std::size_t k = 0; k < b.size(); ++k) u[k] = 1.0;
  const auto e = kf::EmpiricalEnsemble::uniform({u, 2.0 * u});
  const double cut = b.eigenvalue(b.size() / 2);
  std::size_t above = 0;
  for (std::size_t k = 0; k < b.size(); ++k) above += b.eigenvalue(k) > cut;
  const kf::TailEnergy t = kf::tail_energy(e, b, cut);
  EXPECT_DOUBLE_EQ(t.per_particle[0], static_cast<double>(above));
  EXPECT_DOUBLE_EQ(t.max, 4.0 * above);
}

TEST(Ergodicity, AbsorbingBoundsClosedForm) {
  const kf::SpectralBasis b{kf::DomainSpec{}};
  const kf::NoiseModel noise(kf::NoiseSpec{}, b);
  const double nu = 0.1, l1 = b.lambda1();
  const kf::AbsorbingBounds a = kf::absorbing_bounds(b, noise, 9.0);
  const double kb = std::exp(-nu * l1);
  const double m2 = noise.support_bound().vdual_sup / (nu * nu * l1);
  EXPECT_NEAR(a.kappa_bar, kb, 1e-15);
  EXPECT_NEAR(a.m2, m2, 1e-15);
  EXPECT_NEAR(a.radius2, 2.0 * m2 / (1.0 - kb), 1e-14);
  EXPECT_EQ(a.k_star, static_cast<std::size_t>(std::ceil(std::log(9.0 * (1.0 - kb) / m2) / (nu * l1))));
  EXPECT_EQ(a.burn_in, 2 * a.k_star);
  // The envelope reaches the radius by k_star.
  EXPECT_LE(a.envelope(a.k_star, 9.0), a.radius2);
  EXPECT_NEAR(a.envelope(3, 9.0), std::pow(kb, 3) * 9.0 + m2 / (1.0 - kb), 1e-14);
}

TEST(Ergodicity, SphereCompact) {
  const kf::SpectralBasis b{kf::DomainSpec{}};
  const auto e = kf::sphere_compact(b, 50, 3.0, 2, 100, 8);
  ASSERT_EQ(e.size(), 50u);
  EXPECT_EQ(e.lineage.front(), 100u);
  for (const auto& u : e.particles) {
    EXPECT_NEAR(kf::norm(u), 3.0, 1e-13);
    for (std::size_t k = 8; k < b.size(); ++k) EXPECT_EQ(u[k], 0.0);
  }
  const auto again = kf::sphere_compact(b, 50, 3.0, 2, 100, 8);
  EXPECT_EQ(again.particles, e.particles);
}
