#include "kickflow/ergodicity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kickflow/dual_lipschitz.hpp"
#include "kickflow/error.hpp"
#include "kickflow/parallel.hpp"
#include "kickflow/rng.hpp"

namespace kickflow {

EmpiricalEnsemble EmpiricalEnsemble::uniform(std::vector<SpectralField> particles,
                                             std::uint64_t first_lineage) {
  EmpiricalEnsemble e;
  const std::size_t n = particles.size();
  e.particles = std::move(particles);
  e.weights.assign(n, n == 0 ? 0.0 : 1.0 / static_cast<double>(n));
  e.lineage.resize(n);
  std::iota(e.lineage.begin(), e.lineage.end(), first_lineage);
  return e;
}

void EmpiricalEnsemble::check() const {
  require(weights.size() == particles.size() && lineage.size() == particles.size(),
          ErrorKind::kInvalidState, "ensemble arrays disagree in length");
  if (particles.empty()) return;
  double total = 0.0;
  for (std::size_t i = 0; i < particles.size(); ++i) {
    require(weights[i] >= 0.0, ErrorKind::kInvalidState, "negative ensemble weight");
    require(particles[i].size() == particles[0].size(), ErrorKind::kInvalidState,
            "ensemble particles differ in dimension");
    total += weights[i];
  }
  require(std::abs(total - 1.0) <= 1e-12, ErrorKind::kInvalidState,
          "ensemble weights are not normalised");
}

std::vector<SpectralField> markov_run(const GalerkinModel& model, const NoiseModel& noise,
                                      const SpectralField& u0, std::size_t n_kicks,
                                      std::uint64_t seed, std::uint64_t lineage,
                                      std::uint64_t first_kick) {
  std::vector<SpectralField> out;
  out.reserve(n_kicks + 1);
  out.push_back(u0);
  for (std::size_t j = 0; j < n_kicks; ++j) {
    const KickPath eta = noise.sample(kick_stream(seed, lineage, first_kick + j));
    out.push_back(model.time_one_map(out.back(), eta));
  }
  return out;
}

EmpiricalEnsemble ensemble_step(const EmpiricalEnsemble& ens, const GalerkinModel& model,
                                const NoiseModel& noise, std::uint64_t seed, unsigned workers) {
  ens.check();
  EmpiricalEnsemble next = ens;
  parallel_for(ens.size(), workers, [&](std::size_t i) {
    const KickPath eta = noise.sample(kick_stream(seed, ens.lineage[i], ens.kick_index));
    next.particles[i] = model.time_one_map(ens.particles[i], eta);
  });
  next.kick_index = ens.kick_index + 1;
  return next;
}

EmpiricalEnsemble krylov_average(std::span<const EmpiricalEnsemble> history, std::size_t burn_in,
                                 std::size_t thin) {
  require(thin >= 1, ErrorKind::kInvalidArgument, "thinning must be at least 1");
  require(history.size() > burn_in, ErrorKind::kInsufficientData,
          "history is not longer than the burn-in");
  std::size_t slices = 0;
  for (std::size_t t = burn_in; t < history.size(); t += thin) ++slices;
  EmpiricalEnsemble out;
  for (std::size_t t = burn_in; t < history.size(); t += thin) {
    const EmpiricalEnsemble& e = history[t];
    e.check();
    for (std::size_t i = 0; i < e.size(); ++i) {
      out.particles.push_back(e.particles[i]);
      out.weights.push_back(e.weights[i] / static_cast<double>(slices));
      out.lineage.push_back(e.lineage[i]);
    }
  }
  require(!out.empty(), ErrorKind::kInsufficientData, "history has no particles");
  out.kick_index = history.back().kick_index;
  return out;
}

EmpiricalEnsemble krylov_average(std::span<const SpectralField> trajectory, std::size_t burn_in) {
  require(trajectory.size() > burn_in, ErrorKind::kInsufficientData,
          "history is not longer than the burn-in");
  std::vector<SpectralField> states(trajectory.begin() + static_cast<std::ptrdiff_t>(burn_in),
                                    trajectory.end());
  EmpiricalEnsemble out = EmpiricalEnsemble::uniform(std::move(states));
  std::fill(out.lineage.begin(), out.lineage.end(), 0);
  out.kick_index = trajectory.size() - 1;
  return out;
}

TestDictionary::TestDictionary(std::vector<SpectralField> directions, double clamp_radius)
    : directions_(std::move(directions)), radius_(clamp_radius) {
  require(clamp_radius > 0.0, ErrorKind::kInvalidArgument, "clamp radius must be positive");
  for (auto& w : directions_) {
    const double n = norm(w);
    require(n > 0.0, ErrorKind::kInvalidArgument, "dictionary direction is zero");
    w *= 1.0 / n;
  }
}

TestDictionary TestDictionary::standard(const SpectralBasis& basis, std::size_t modes,
                                        std::size_t random, std::uint64_t seed,
                                        double clamp_radius) {
  std::vector<SpectralField> dirs;
  const std::size_t K = basis.size();
  for (std::size_t k = 0; k < std::min(modes, K); ++k) dirs.push_back(SpectralField::unit(K, k));
  RngStream rng = RngStream(seed).derive(0x64696374ULL);
  for (std::size_t r = 0; r < random; ++r) {
    SpectralField w(K);
    for (std::size_t k = 0; k < K; ++k) w[k] = rng.next_normal();
    dirs.push_back(std::move(w));
  }
  return TestDictionary(std::move(dirs), clamp_radius);
}

double TestDictionary::evaluate(std::size_t i, const SpectralField& u) const {
  const double p = inner(u, directions_[i]);
  return 0.5 * std::clamp(p, -radius_, radius_) / std::max(1.0, radius_);
}

namespace {

std::vector<double> projections(const EmpiricalEnsemble& e, const SpectralField& w) {
  std::vector<double> out(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) out[i] = inner(e.particles[i], w);
  return out;
}

}  // namespace

DistanceReport dual_lipschitz_lower(const EmpiricalEnsemble& mu1, const EmpiricalEnsemble& mu2,
                                    const TestDictionary& dict, unsigned workers) {
  mu1.check();
  mu2.check();
  require(!mu1.empty() && !mu2.empty(), ErrorKind::kInvalidArgument, "empty ensemble");
  require(mu1.particles[0].size() == mu2.particles[0].size(), ErrorKind::kInvalidArgument,
          "ensembles differ in dimension");
  require(dict.size() > 0 && dict.direction(0).size() == mu1.particles[0].size(),
          ErrorKind::kInvalidArgument, "dictionary does not match the ensembles");
  std::vector<double> functional(dict.size()), projected(dict.size());
  parallel_for(dict.size(), workers, [&](std::size_t i) {
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t a = 0; a < mu1.size(); ++a) m1 += mu1.weights[a] * dict.evaluate(i, mu1.particles[a]);
    for (std::size_t b = 0; b < mu2.size(); ++b) m2 += mu2.weights[b] * dict.evaluate(i, mu2.particles[b]);
    functional[i] = std::abs(m1 - m2);
    const auto x = projections(mu1, dict.direction(i));
    const auto y = projections(mu2, dict.direction(i));
    projected[i] = bl_distance_1d(x, mu1.weights, y, mu2.weights);
  });
  DistanceReport r;
  for (std::size_t i = 0; i < dict.size(); ++i) {
    r.functional_part = std::max(r.functional_part, functional[i]);
    if (projected[i] > r.projected_part) {
      r.projected_part = projected[i];
      r.best_direction = i;
    }
  }
  r.value = std::max(r.functional_part, r.projected_part);
  return r;
}

double split_half_floor(const EmpiricalEnsemble& ens, const TestDictionary& dict,
                        unsigned workers) {
  require(ens.size() >= 2, ErrorKind::kInsufficientData, "split-half needs two particles");
  std::vector<SpectralField> even, odd;
  for (std::size_t i = 0; i < ens.size(); ++i) (i % 2 == 0 ? even : odd).push_back(ens.particles[i]);
  return dual_lipschitz_lower(EmpiricalEnsemble::uniform(std::move(even)),
                              EmpiricalEnsemble::uniform(std::move(odd)), dict, workers)
      .value;
}

MixingFit mixing_fit(std::span<const double> d, std::size_t k0) {
  require(d.size() >= 4, ErrorKind::kInsufficientData, "mixing fit needs at least 4 points");
  const double n = static_cast<double>(d.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    require(d[i] > 0.0 && std::isfinite(d[i]), ErrorKind::kInsufficientData,
            "mixing fit needs positive distances");
    sx += static_cast<double>(k0 + i);
    sy += std::log(d[i]);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double dx = static_cast<double>(k0 + i) - mx;
    const double dy = std::log(d[i]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  const double slope = sxy / sxx;
  MixingFit fit;
  fit.c = -slope;
  fit.C = std::exp(my - slope * mx);
  double sse = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double pred = my + slope * (static_cast<double>(k0 + i) - mx);
    const double e = std::log(d[i]) - pred;
    sse += e * e;
  }
  fit.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  fit.k0 = k0;
  fit.k1 = k0 + d.size() - 1;
  return fit;
}

MixingFit mixing_fit_above(std::span<const double> d, double floor, std::size_t k0) {
  std::size_t end = k0;
  while (end < d.size() && d[end] > floor) ++end;
  require(end >= k0 + 4, ErrorKind::kInsufficientData,
          "fewer than 4 distances above the Monte-Carlo floor");
  return mixing_fit(d.subspan(k0, end - k0), k0);
}

TailEnergy tail_energy(const EmpiricalEnsemble& ens, const SpectralBasis& basis, double lambda) {
  require(lambda > 0.0, ErrorKind::kInvalidArgument, "tail cutoff must be positive");
  TailEnergy t;
  t.per_particle.reserve(ens.size());
  for (const SpectralField& u : ens.particles) {
    basis.check(u);
    double e = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      if (basis.eigenvalue(k) > lambda) e += u[k] * u[k];
    }
    t.per_particle.push_back(e);
    t.max = std::max(t.max, e);
  }
  return t;
}

double AbsorbingBounds::envelope(std::size_t k, double m1) const {
  const double geometric = std::pow(kappa_bar, static_cast<double>(k)) * m1;
  return geometric + m2 / (1.0 - kappa_bar);
}

AbsorbingBounds absorbing_bounds(const SpectralBasis& basis, const NoiseModel& noise, double m1) {
  require(m1 >= 0.0, ErrorKind::kInvalidArgument, "initial bound must be nonnegative");
  const DomainSpec& d = basis.spec();
  const double rate = d.viscosity * basis.lambda1();
  AbsorbingBounds b;
  b.kappa_bar = std::exp(-rate);
  b.m2 = noise.support_bound().vdual_sup / (d.viscosity * d.viscosity * basis.lambda1());
  b.radius2 = 2.0 * b.m2 / (1.0 - b.kappa_bar);
  if (b.m2 > 0.0 && m1 > 0.0) {
    const double arg = m1 * (1.0 - b.kappa_bar) / b.m2;
    b.k_star = arg > 1.0 ? static_cast<std::size_t>(std::ceil(std::log(arg) / rate)) : 0;
  }
  b.burn_in = 2 * b.k_star;
  return b;
}

EmpiricalEnsemble sphere_compact(const SpectralBasis& basis, std::size_t count, double radius,
                                 std::uint64_t seed, std::uint64_t first_lineage,
                                 std::size_t modes) {
  require(radius >= 0.0, ErrorKind::kInvalidArgument, "compact radius must be nonnegative");
  const std::size_t K = basis.size();
  const std::size_t m = std::min(modes, K);
  require(m >= 1, ErrorKind::kInvalidArgument, "compact needs at least one mode");
  const RngStream root = RngStream(seed).derive(0x636f6d70ULL);
  std::vector<SpectralField> pts;
  pts.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    RngStream rng = root.derive(first_lineage + i);
    SpectralField u(K);
    double n2 = 0.0;
    while (n2 == 0.0) {
      for (std::size_t k = 0; k < m; ++k) {
        u[k] = rng.next_normal();
        n2 += u[k] * u[k];
      }
    }
    u *= radius / std::sqrt(n2);
    pts.push_back(std::move(u));
  }
  return EmpiricalEnsemble::uniform(std::move(pts), first_lineage);
}

}  // namespace kickflow
