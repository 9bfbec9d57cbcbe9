#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "kickflow/kernels.hpp"
#include "kickflow/ns_dynamics.hpp"

namespace kf = kickflow;
namespace kk = kickflow::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& gen) {
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

const kk::KernelTable* avx2_or_skip() {
  const kk::KernelTable* t = kk::avx2_kernels();
  if (!t || !kk::cpu_supports_avx2()) return nullptr;
  return t;
}

class IsaGuard {
 public:
  IsaGuard() : saved_(kk::active().isa) {}
  ~IsaGuard() { kk::set_active(saved_); }

 private:
  kk::Isa saved_;
};

}  // namespace

TEST(Kernels, ScalarGemmMatchesNaiveLoop) {
  std::mt19937_64 gen(1);
  const std::size_t m = 7, k = 13, n = 5;
  const auto a = random_vector(m * k, gen), b = random_vector(k * n, gen);
  std::vector<double> c(m * n, 0.0);
  kk::scalar_kernels().gemm(m, k, n, a.data(), b.data(), c.data(), false);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < k; ++l) s += a[i * k + l] * b[l * n + j];
      EXPECT_NEAR(c[i * n + j], s, 1e-13);
    }
  }
  std::vector<double> c2 = c;
  kk::scalar_kernels().gemm(m, k, n, a.data(), b.data(), c2.data(), true);
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(c2[i], 2.0 * c[i], 1e-13);
}

TEST(Kernels, ScalarElementwiseKernels) {
  std::mt19937_64 gen(2);
  const std::size_t n = 37;
  const auto x1 = random_vector(n, gen), y1 = random_vector(n, gen);
  const auto x2 = random_vector(n, gen), y2 = random_vector(n, gen);
  std::vector<double> out(n);
  kk::scalar_kernels().dot2(n, x1.data(), y1.data(), x2.data(), y2.data(), out.data(), false);
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(out[i], x1[i] * y1[i] + x2[i] * y2[i], 1e-14);

  const auto decay = random_vector(n, gen), gain = random_vector(n, gen);
  std::vector<double> c = random_vector(n, gen);
  const auto c0 = c;
  kk::scalar_kernels().exp_euler(n, decay.data(), gain.data(), c.data(), x1.data(), y1.data(),
                                 c.data());
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_NEAR(c[i], decay[i] * c0[i] + gain[i] * (x1[i] - y1[i]), 1e-13);
  }

  double dot = 0.0, wdot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dot += x1[i] * y1[i];
    wdot += x2[i] * x1[i] * y1[i];
  }
  EXPECT_NEAR(kk::scalar_kernels().dot(n, x1.data(), y1.data()), dot, 1e-12);
  EXPECT_NEAR(kk::scalar_kernels().weighted_dot(n, x2.data(), x1.data(), y1.data()), wdot, 1e-12);
}

TEST(Kernels, Avx2MatchesScalar) {
  const kk::KernelTable* v = avx2_or_skip();
  if (!v) GTEST_SKIP() << "AVX2 variant unavailable";
  const kk::KernelTable& s = kk::scalar_kernels();
  std::mt19937_64 gen(3);
  // Odd sizes exercise the vector tails.
  for (std::size_t n : {1u, 3u, 4u, 9u, 17u, 64u, 153u}) {
    const auto a = random_vector(n, gen), b = random_vector(n, gen);
    const auto c = random_vector(n, gen), d = random_vector(n, gen);
    EXPECT_NEAR(s.dot(n, a.data(), b.data()), v->dot(n, a.data(), b.data()), 1e-12);
    EXPECT_NEAR(s.weighted_dot(n, a.data(), b.data(), c.data()),
                v->weighted_dot(n, a.data(), b.data(), c.data()), 1e-12);
    std::vector<double> o1(n, 1.0), o2(n, 1.0);
    s.dot2(n, a.data(), b.data(), c.data(), d.data(), o1.data(), true);
    v->dot2(n, a.data(), b.data(), c.data(), d.data(), o2.data(), true);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(o1[i], o2[i], 1e-13);
    s.exp_euler(n, a.data(), b.data(), c.data(), d.data(), a.data(), o1.data());
    v->exp_euler(n, a.data(), b.data(), c.data(), d.data(), a.data(), o2.data());
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(o1[i], o2[i], 1e-13);
  }
  for (auto [m, k, n] : {std::tuple{1u, 1u, 1u}, {5u, 11u, 3u}, {17u, 11u, 9u}, {9u, 33u, 17u}}) {
    const auto a = random_vector(m * k, gen), b = random_vector(k * n, gen);
    std::vector<double> c1(m * n, 0.5), c2(m * n, 0.5);
    s.gemm(m, k, n, a.data(), b.data(), c1.data(), true);
    v->gemm(m, k, n, a.data(), b.data(), c2.data(), true);
    for (std::size_t i = 0; i < c1.size(); ++i) EXPECT_NEAR(c1[i], c2[i], 1e-12);
  }
}

TEST(Kernels, SolverAgreesAcrossIsas) {
  if (!avx2_or_skip()) GTEST_SKIP() << "AVX2 variant unavailable";
  IsaGuard guard;
  const kf::GalerkinModel model(kf::DomainSpec{}, kf::SolverConfig{});
  const kf::NoiseModel noise(kf::NoiseSpec{}, model.basis());
  const kf::KickPath eta = noise.sample(kf::kick_stream(5, 0, 0));
  kk::set_active(kk::Isa::kScalar);
  const kf::SpectralField a = model.time_one_map(model.basis().zero(), eta);
  kk::set_active(kk::Isa::kAvx2);
  const kf::SpectralField b = model.time_one_map(model.basis().zero(), eta);
  EXPECT_LE(kf::norm(a - b), 1e-13 * kf::norm(a));
}

TEST(Kernels, ActiveTableIsUsable) {
  const kk::KernelTable& t = kk::active();
  EXPECT_FALSE(t.name.empty());
  const double x[3] = {1.0, 2.0, 3.0};
  EXPECT_DOUBLE_EQ(t.dot(3, x, x), 14.0);
}
