#include "kickflow/linearization.hpp"

#include <algorithm>
#include <cmath>

#include "kickflow/error.hpp"
#include "kickflow/kernels.hpp"
#include "kickflow/parallel.hpp"

namespace kickflow {

TangentContext::TangentContext(const GalerkinModel& model, const Trajectory& base)
    : model_(&model), base_(&base) {
  require(base.has_substeps() && base.states.size() == model.steps() + 1,
          ErrorKind::kInvalidState, "linearisation needs a trajectory recorded at substeps");
  const PseudoSpectral& tr = model.transform();
  auto ws = tr.make_workspace();
  fields_.resize(model.steps());
  for (std::size_t n = 0; n < fields_.size(); ++n) {
    fields_[n].resize(tr.grid().points());
    tr.gradient(base.states[n].data(), fields_[n], ws);
  }
}

namespace {

// Linearised exponential Euler from w0 with optional source zeta.
SpectralField linear_solve(const TangentContext& ctx, const SpectralField& w0,
                           const KickPath* zeta) {
  const GalerkinModel& model = ctx.model();
  const PseudoSpectral& tr = model.transform();
  const auto& kt = kernels::active();
  const std::size_t K = model.size();
  auto ws = tr.make_workspace();
  SpectralField w = w0;
  std::vector<double> q(K), src(K, 0.0);
  const double dt = model.dt();
  for (std::size_t n = 0; n < ctx.steps(); ++n) {
    tr.gradient(w.data(), ws.b, ws);
    tr.symmetric_advection(ctx.fields(n), ws.b, q.data(), ws);
    if (zeta) eval_kick_into(*zeta, (static_cast<double>(n) + 0.5) * dt, src);
    kt.exp_euler(K, model.decay().data(), model.gain().data(), w.data(), src.data(), q.data(),
                 w.data());
  }
  return w;
}

}  // namespace

SpectralField tangent_apply(const TangentContext& ctx, const SpectralField& w0) {
  ctx.model().basis().check(w0);
  return linear_solve(ctx, w0, nullptr);
}

SpectralField forcing_derivative_apply(const TangentContext& ctx, const KickPath& zeta) {
  require(zeta.modes() == ctx.model().size(), ErrorKind::kInvalidArgument,
          "control does not match the model dimension");
  return linear_solve(ctx, ctx.model().basis().zero(), &zeta);
}

void psi_split(const TangentContext& ctx, TangentOperators& ops, unsigned workers) {
  const GalerkinModel& model = ctx.model();
  const SpectralBasis& basis = model.basis();
  const DomainSpec& d = model.domain();
  const std::size_t K = model.size();
  ops.psi1.resize(static_cast<Eigen::Index>(K));
  for (std::size_t k = 0; k < K; ++k) {
    ops.psi1[static_cast<Eigen::Index>(k)] = std::exp(-(d.viscosity * basis.eigenvalue(k) + d.damping));
  }
  ops.psi2.resize(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
  parallel_for(K, workers, [&](std::size_t k) {
    const SpectralField col = tangent_apply(ctx, SpectralField::unit(K, k));
    const auto c = static_cast<Eigen::Index>(k);
    for (std::size_t i = 0; i < K; ++i) ops.psi2(static_cast<Eigen::Index>(i), c) = col[i];
    ops.psi2(c, c) -= ops.psi1[c];
  });
}

void assemble_gram(const TangentContext& ctx, std::size_t time_order, TangentOperators& ops,
                   unsigned workers) {
  require(time_order >= 1, ErrorKind::kInvalidArgument, "time order must be at least 1");
  const std::size_t K = ctx.model().size();
  const std::size_t cols = time_order * K;
  ops.a_matrix.resize(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(cols));
  parallel_for(cols, workers, [&](std::size_t j) {
    KickPath e(time_order, K);
    e[j] = 1.0;
    const SpectralField col = forcing_derivative_apply(ctx, e);
    for (std::size_t i = 0; i < K; ++i) {
      ops.a_matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
    }
  });
  ops.gram = ops.a_matrix * ops.a_matrix.transpose();
  ops.gram = 0.5 * (ops.gram + ops.gram.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ops.gram);
  ops.gram_eigenvalues = eig.eigenvalues();
  ops.gram_eigenvectors = eig.eigenvectors();
}

TangentOperators assemble_all(const TangentContext& ctx, std::size_t time_order,
                              unsigned workers) {
  TangentOperators ops;
  psi_split(ctx, ops, workers);
  assemble_gram(ctx, time_order, ops, workers);
  return ops;
}

std::vector<double> gram_limit_check(const TangentOperators& ops, const SpectralField& f,
                                     std::span<const double> gammas) {
  require(ops.has_gram(), ErrorKind::kInvalidState, "gram not assembled");
  require(static_cast<Eigen::Index>(f.size()) == ops.gram.rows(), ErrorKind::kInvalidArgument,
          "field dimension mismatch");
  const Eigen::Map<const Eigen::VectorXd> fv(f.data(), ops.gram.rows());
  const double fn = fv.norm();
  require(fn > 0.0, ErrorKind::kInvalidArgument, "gram limit check needs f != 0");
  std::vector<double> out;
  out.reserve(gammas.size());
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(ops.gram.rows(), ops.gram.cols());
  for (double gamma : gammas) {
    require(gamma > 0.0, ErrorKind::kInvalidArgument, "gamma must be positive");
    const Eigen::LLT<Eigen::MatrixXd> llt(ops.gram + gamma * id);
    const Eigen::VectorXd x = llt.solve(fv);
    out.push_back((ops.gram * x - fv).norm() / fn);
  }
  return out;
}

std::size_t CompactnessReport::tail_index(double eps) const {
  for (std::size_t j = 0; j < singular_values.size(); ++j) {
    if (singular_values[j] <= eps) return j;
  }
  return singular_values.size();
}

CompactnessReport compactness_diagnostic(const TangentOperators& ops) {
  require(ops.has_psi(), ErrorKind::kInvalidState, "psi2 not assembled");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(ops.psi2);
  const Eigen::VectorXd s = svd.singularValues();
  CompactnessReport r;
  r.singular_values.assign(s.data(), s.data() + s.size());
  return r;
}

}  // namespace kickflow
