#include "kickflow/pseudo_spectral.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "kickflow/error.hpp"
#include "kickflow/kernels.hpp"

namespace kickflow {

CollocationGrid CollocationGrid::minimum(const DomainSpec& spec) {
  // x: 3 mx < nx, and at least ceil(3 (2 mx + 1) / 2) points.
  // y: 3 Ny < 2 (ny - 1), and at least ceil(3 Ny / 2) + 1 points.
  const int nx = 3 * spec.mx + 2;
  const int ny = (3 * spec.ny) / 2 + 2;
  return {nx, ny};
}

void GradientFields::resize(std::size_t points) {
  for (auto* v : {&u1, &u2, &dxu1, &dyu1, &dxu2, &dyu2}) v->assign(points, 0.0);
}

PseudoSpectral::PseudoSpectral(const SpectralBasis& basis, CollocationGrid grid)
    : basis_(basis), grid_(grid) {
  const DomainSpec& spec = basis_.spec();
  const CollocationGrid min = CollocationGrid::minimum(spec);
  if (grid_.nx < min.nx || grid_.ny < min.ny) {
    fail(ErrorKind::kInvalidArgument,
         "collocation grid " + std::to_string(grid_.nx) + "x" + std::to_string(grid_.ny) +
             " too small for the truncation; need at least " + std::to_string(min.nx) + "x" +
             std::to_string(min.ny));
  }
  width_ = static_cast<std::size_t>(2 * spec.mx + 1);
  rows_ = static_cast<std::size_t>(spec.ny);
  const std::size_t nx = static_cast<std::size_t>(grid_.nx);
  const std::size_t ny = static_cast<std::size_t>(grid_.ny);
  const double pi = std::numbers::pi;

  ex_.assign(width_ * nx, 0.0);
  dx_.assign(width_ * nx, 0.0);
  d2x_.assign(width_ * nx, 0.0);
  wex_.assign(nx * width_, 0.0);
  wdx_.assign(nx * width_, 0.0);
  const double wx = spec.length / static_cast<double>(nx);
  for (std::size_t mi = 0; mi < width_; ++mi) {
    const int m = static_cast<int>(mi) - spec.mx;
    const double kappa = 2.0 * pi * std::abs(m) / spec.length;
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double arg = kappa * x(static_cast<int>(ix));
      double e, de;
      if (m >= 0) {
        e = std::cos(arg);
        de = -kappa * std::sin(arg);
      } else {
        e = std::sin(arg);
        de = kappa * std::cos(arg);
      }
      ex_[mi * nx + ix] = e;
      dx_[mi * nx + ix] = de;
      d2x_[mi * nx + ix] = -kappa * kappa * e;
      wex_[ix * width_ + mi] = wx * e;
      wdx_[ix * width_ + mi] = wx * de;
    }
  }

  yc_.assign(ny * rows_, 0.0);
  ys_neg_.assign(ny * rows_, 0.0);
  ys_n2_.assign(ny * rows_, 0.0);
  ac_.assign(rows_ * ny, 0.0);
  as_.assign(rows_ * ny, 0.0);
  const double h = 1.0 / static_cast<double>(ny - 1);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    const double wy = (iy == 0 || iy + 1 == ny) ? 0.5 * h : h;
    for (std::size_t r = 0; r < rows_; ++r) {
      const double k = pi * static_cast<double>(r + 1);
      const double c = std::cos(k * y(static_cast<int>(iy)));
      const double s = std::sin(k * y(static_cast<int>(iy)));
      yc_[iy * rows_ + r] = k * c;
      ys_neg_[iy * rows_ + r] = -s;
      ys_n2_[iy * rows_ + r] = -k * k * s;
      ac_[r * ny + iy] = wy * k * c;
      as_[r * ny + iy] = -wy * s;
    }
  }
}

double PseudoSpectral::x(int ix) const {
  return basis_.spec().length * static_cast<double>(ix) / static_cast<double>(grid_.nx);
}

double PseudoSpectral::y(int iy) const {
  return static_cast<double>(iy) / static_cast<double>(grid_.ny - 1);
}

PseudoSpectral::Workspace PseudoSpectral::make_workspace() const {
  Workspace ws;
  const std::size_t nx = static_cast<std::size_t>(grid_.nx);
  ws.tensor.assign(rows_ * width_, 0.0);
  ws.te.assign(rows_ * nx, 0.0);
  ws.td.assign(rows_ * nx, 0.0);
  ws.td2.assign(rows_ * nx, 0.0);
  ws.s1.assign(rows_ * nx, 0.0);
  ws.s2.assign(rows_ * nx, 0.0);
  ws.proj.assign(rows_ * width_, 0.0);
  ws.g1.assign(grid_.points(), 0.0);
  ws.g2.assign(grid_.points(), 0.0);
  ws.a.resize(grid_.points());
  ws.b.resize(grid_.points());
  return ws;
}

void PseudoSpectral::synthesize_stage_x(const double* coeffs, Workspace& ws,
                                        bool need_second) const {
  const auto& kt = kernels::active();
  const std::size_t nx = static_cast<std::size_t>(grid_.nx);
  for (std::size_t k = 0; k < basis_.size(); ++k) {
    ws.tensor[basis_.tensor_slot(k)] = basis_.normalisation(k) * coeffs[k];
  }
  kt.gemm(rows_, width_, nx, ws.tensor.data(), ex_.data(), ws.te.data(), false);
  kt.gemm(rows_, width_, nx, ws.tensor.data(), dx_.data(), ws.td.data(), false);
  if (need_second) kt.gemm(rows_, width_, nx, ws.tensor.data(), d2x_.data(), ws.td2.data(), false);
}

void PseudoSpectral::gradient(const double* coeffs, GradientFields& out, Workspace& ws) const {
  const auto& kt = kernels::active();
  const std::size_t nx = static_cast<std::size_t>(grid_.nx);
  const std::size_t ny = static_cast<std::size_t>(grid_.ny);
  synthesize_stage_x(coeffs, ws, true);
  kt.gemm(ny, rows_, nx, yc_.data(), ws.te.data(), out.u1.data(), false);
  kt.gemm(ny, rows_, nx, ys_neg_.data(), ws.td.data(), out.u2.data(), false);
  kt.gemm(ny, rows_, nx, yc_.data(), ws.td.data(), out.dxu1.data(), false);
  kt.gemm(ny, rows_, nx, ys_n2_.data(), ws.te.data(), out.dyu1.data(), false);
  kt.gemm(ny, rows_, nx, ys_neg_.data(), ws.td2.data(), out.dxu2.data(), false);
  const std::size_t n = grid_.points();
  for (std::size_t i = 0; i < n; ++i) out.dyu2[i] = -out.dxu1[i];
}

void PseudoSpectral::project(const double* g1, const double* g2, double* coeffs,
                             Workspace& ws) const {
  const auto& kt = kernels::active();
  const std::size_t nx = static_cast<std::size_t>(grid_.nx);
  const std::size_t ny = static_cast<std::size_t>(grid_.ny);
  kt.gemm(rows_, ny, nx, ac_.data(), g1, ws.s1.data(), false);
  kt.gemm(rows_, ny, nx, as_.data(), g2, ws.s2.data(), false);
  kt.gemm(rows_, nx, width_, ws.s1.data(), wex_.data(), ws.proj.data(), false);
  kt.gemm(rows_, nx, width_, ws.s2.data(), wdx_.data(), ws.proj.data(), true);
  for (std::size_t k = 0; k < basis_.size(); ++k) {
    coeffs[k] = basis_.normalisation(k) * ws.proj[basis_.tensor_slot(k)];
  }
}

void PseudoSpectral::advection(const GradientFields& a, const GradientFields& b, double* out,
                               Workspace& ws) const {
  const auto& kt = kernels::active();
  const std::size_t n = grid_.points();
  kt.dot2(n, a.u1.data(), b.dxu1.data(), a.u2.data(), b.dyu1.data(), ws.g1.data(), false);
  kt.dot2(n, a.u1.data(), b.dxu2.data(), a.u2.data(), b.dyu2.data(), ws.g2.data(), false);
  project(ws.g1.data(), ws.g2.data(), out, ws);
}

void PseudoSpectral::symmetric_advection(const GradientFields& a, const GradientFields& b,
                                         double* out, Workspace& ws) const {
  const auto& kt = kernels::active();
  const std::size_t n = grid_.points();
  kt.dot2(n, a.u1.data(), b.dxu1.data(), a.u2.data(), b.dyu1.data(), ws.g1.data(), false);
  kt.dot2(n, b.u1.data(), a.dxu1.data(), b.u2.data(), a.dyu1.data(), ws.g1.data(), true);
  kt.dot2(n, a.u1.data(), b.dxu2.data(), a.u2.data(), b.dyu2.data(), ws.g2.data(), false);
  kt.dot2(n, b.u1.data(), a.dxu2.data(), b.u2.data(), a.dyu2.data(), ws.g2.data(), true);
  project(ws.g1.data(), ws.g2.data(), out, ws);
}

VelocitySamples PseudoSpectral::synthesize(const SpectralField& u) const {
  basis_.check(u);
  Workspace ws = make_workspace();
  const auto& kt = kernels::active();
  const std::size_t nx = static_cast<std::size_t>(grid_.nx);
  const std::size_t ny = static_cast<std::size_t>(grid_.ny);
  synthesize_stage_x(u.data(), ws, false);
  VelocitySamples s{grid_, std::vector<double>(grid_.points()), std::vector<double>(grid_.points())};
  kt.gemm(ny, rows_, nx, yc_.data(), ws.te.data(), s.u1.data(), false);
  kt.gemm(ny, rows_, nx, ys_neg_.data(), ws.td.data(), s.u2.data(), false);
  return s;
}

SpectralField PseudoSpectral::analyze(const VelocitySamples& samples) const {
  require(samples.grid == grid_ && samples.u1.size() == grid_.points() &&
              samples.u2.size() == grid_.points(),
          ErrorKind::kInvalidArgument, "samples do not match the collocation grid");
  Workspace ws = make_workspace();
  SpectralField out(basis_.size());
  project(samples.u1.data(), samples.u2.data(), out.data(), ws);
  return out;
}

}  // namespace kickflow
