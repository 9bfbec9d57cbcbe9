#include "kickflow/kick_noise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kickflow/error.hpp"

namespace kickflow {

void NoiseSpec::validate() const {
  require(P >= 1, ErrorKind::kInvalidArgument, "noise.P must be at least 1");
  require(std::isfinite(B0) && B0 >= 0.0, ErrorKind::kInvalidArgument,
          "noise.B0 must be nonnegative");
  require(s_t >= 2.0, ErrorKind::kInvalidArgument, "noise.s_t must be at least 2");
  require(s_x >= 1.0, ErrorKind::kInvalidArgument, "noise.s_x must be at least 1");
}

double shifted_legendre(int p, double t) {
  const double x = 2.0 * t - 1.0;
  double prev = 1.0;
  double cur = x;
  if (p == 0) return 1.0;
  for (int j = 1; j < p; ++j) {
    const double next = ((2.0 * j + 1.0) * x * cur - j * prev) / (j + 1.0);
    prev = cur;
    cur = next;
  }
  return std::sqrt(2.0 * p + 1.0) * cur;
}

namespace {

// Mass of rho on [1 - e, 1].
double tail_mass(double e) {
  return (15.0 / 16.0) * e * e * e * (4.0 / 3.0 - e + 0.2 * e * e);
}

}  // namespace

double KickDensity::pdf(double r) {
  if (r <= -1.0 || r >= 1.0) return 0.0;
  const double s = 1.0 - r * r;
  return (15.0 / 16.0) * s * s;
}

double KickDensity::cdf(double r) {
  if (r <= -1.0) return 0.0;
  if (r >= 1.0) return 1.0;
  return r >= 0.0 ? 1.0 - tail_mass(1.0 - r) : tail_mass(1.0 + r);
}

KickDensity::KickDensity(std::size_t table_size) {
  require(table_size >= 2, ErrorKind::kInvalidArgument, "density table needs two nodes");
  tail_.resize(table_size);
  for (std::size_t i = 0; i < table_size; ++i) {
    tail_[i] = tail_mass(static_cast<double>(i) / static_cast<double>(table_size - 1));
  }
}

double KickDensity::inverse_cdf(double u) const {
  require(u > 0.0 && u < 1.0, ErrorKind::kInvalidArgument, "inverse_cdf needs u in (0, 1)");
  // Solve tail_mass(e) = w with w = min(u, 1 - u); both branches are exact in
  // floating point, which keeps the sampler symmetric about 0.
  const bool upper = u > 0.5;
  const double w = upper ? 1.0 - u : u;
  if (w == 0.5) return 0.0;

  const std::size_t n = tail_.size();
  const auto it = std::upper_bound(tail_.begin(), tail_.end(), w);
  const std::size_t hi_i = std::min<std::size_t>(static_cast<std::size_t>(it - tail_.begin()), n - 1);
  const double step = 1.0 / static_cast<double>(n - 1);
  double lo = step * static_cast<double>(hi_i == 0 ? 0 : hi_i - 1);
  double hi = step * static_cast<double>(hi_i);
  double e = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double f = tail_mass(e) - w;
    if (f == 0.0) break;
    if (f > 0.0) hi = e; else lo = e;
    const double slope = pdf(1.0 - e);
    double next = slope > 0.0 ? e - f / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - e) <= 1e-16 || hi - lo <= 1e-15) {
      e = next;
      break;
    }
    e = next;
  }
  const double r = 1.0 - e;
  return upper ? r : -r;
}

KickPath::KickPath(std::size_t P, std::size_t K, std::vector<double> coeffs)
    : P_(P), K_(K), coeffs_(std::move(coeffs)) {
  require(coeffs_.size() == P_ * K_, ErrorKind::kInvalidArgument,
          "kick coefficient count does not match P x K");
}

double KickPath::norm() const {
  double s = 0.0;
  for (double c : coeffs_) s += c * c;
  return std::sqrt(s);
}

KickPath& KickPath::operator+=(const KickPath& other) {
  require(P_ == other.P_ && K_ == other.K_, ErrorKind::kInvalidArgument, "kick shape mismatch");
  for (std::size_t j = 0; j < coeffs_.size(); ++j) coeffs_[j] += other.coeffs_[j];
  return *this;
}

KickPath& KickPath::operator*=(double s) {
  for (double& c : coeffs_) c *= s;
  return *this;
}

NoiseModel::NoiseModel(const NoiseSpec& spec, const SpectralBasis& basis)
    : spec_(spec), P_(static_cast<std::size_t>(spec.P)), K_(basis.size()) {
  spec_.validate();
  amplitudes_.resize(P_ * K_);
  alpha_.assign(basis.eigenvalues().begin(), basis.eigenvalues().end());
  modes_.reserve(K_);
  for (std::size_t k = 0; k < K_; ++k) modes_.push_back(basis.mode(k));
  for (std::size_t p = 0; p < P_; ++p) {
    for (std::size_t k = 0; k < K_; ++k) {
      amplitudes_[p * K_ + k] = spec_.B0 * std::pow(1.0 + static_cast<double>(p), -spec_.s_t) *
                                std::pow(1.0 + alpha_[k], -spec_.s_x);
    }
  }
  order_.resize(P_ * K_);
  std::iota(order_.begin(), order_.end(), 0);
  std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
    if (amplitudes_[a] != amplitudes_[b]) return amplitudes_[a] > amplitudes_[b];
    const std::size_t ka = a % K_, kb = b % K_;
    if (ka != kb) return ka < kb;
    return a / K_ < b / K_;
  });
  rank_.resize(order_.size());
  for (std::size_t r = 0; r < order_.size(); ++r) rank_[order_[r]] = r;
}

std::uint64_t NoiseModel::entry_tag(std::size_t p, std::size_t k) const {
  const ModeIndex mode = modes_[k];
  const std::uint64_t m = static_cast<std::uint64_t>(static_cast<std::int64_t>(mode.m) + (1 << 20));
  return (static_cast<std::uint64_t>(p) << 44) | (m << 22) | static_cast<std::uint64_t>(mode.n);
}

KickPath NoiseModel::project_pm(const KickPath& eta, std::size_t M) const {
  require(M <= dimension(), ErrorKind::kInvalidArgument, "projection rank exceeds P x K");
  require(eta.time_order() == P_ && eta.modes() == K_, ErrorKind::kInvalidArgument,
          "kick shape does not match the noise model");
  KickPath out(P_, K_);
  for (std::size_t r = 0; r < M; ++r) out[order_[r]] = eta[order_[r]];
  return out;
}

KickPath NoiseModel::project_qm(const KickPath& eta, std::size_t M) const {
  require(M <= dimension(), ErrorKind::kInvalidArgument, "projection rank exceeds P x K");
  require(eta.time_order() == P_ && eta.modes() == K_, ErrorKind::kInvalidArgument,
          "kick shape does not match the noise model");
  KickPath out(P_, K_);
  for (std::size_t r = M; r < dimension(); ++r) out[order_[r]] = eta[order_[r]];
  return out;
}

SupportBound NoiseModel::support_bound() const {
  double e2 = 0.0, vd = 0.0;
  for (std::size_t p = 0; p < P_; ++p) {
    for (std::size_t k = 0; k < K_; ++k) {
      const double b2 = amplitudes_[p * K_ + k] * amplitudes_[p * K_ + k];
      e2 += b2;
      vd += b2 / alpha_[k];
    }
  }
  return {std::sqrt(e2), vd};
}

RngStream kick_stream(std::uint64_t seed, std::uint64_t lineage, std::uint64_t kick) {
  return RngStream(seed).derive(lineage).derive(kick);
}

void eval_kick_into(const KickPath& eta, double t, std::span<double> out) {
  require(t >= 0.0 && t <= 1.0, ErrorKind::kInvalidArgument, "kick time outside [0, 1]");
  require(out.size() == eta.modes(), ErrorKind::kInvalidArgument, "kick evaluation size mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t P = eta.time_order();
  const double x = 2.0 * t - 1.0;
  double prev = 0.0, cur = 1.0;  // Legendre P_{p-1}, P_p at x
  for (std::size_t p = 0; p < P; ++p) {
    if (p == 1) {
      prev = 1.0;
      cur = x;
    } else if (p > 1) {
      const double j = static_cast<double>(p - 1);
      const double next = ((2.0 * j + 1.0) * x * cur - j * prev) / (j + 1.0);
      prev = cur;
      cur = next;
    }
    const double tau = std::sqrt(2.0 * static_cast<double>(p) + 1.0) * cur;
    const auto row = eta.row(p);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += tau * row[k];
  }
}

SpectralField eval_kick(const KickPath& eta, double t) {
  SpectralField f(eta.modes());
  eval_kick_into(eta, t, f.coeffs());
  return f;
}

}  // namespace kickflow
