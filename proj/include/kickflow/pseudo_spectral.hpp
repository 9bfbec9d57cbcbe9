#pragma once

// Tensor-product collocation on the strip: synthesis of velocity fields and
// their gradients from basis coefficients, and Galerkin projection back.
//
// x is sampled at nx equispaced periodic points, y at ny points
// y_j = j / (ny - 1) including both walls. Products of three truncated fields
// are integrated exactly by the trapezoid rule once nx > 3 mx and
// 2 (ny - 1) > 3 Ny, which is what makes the projected advection term
// energy-neutral to round-off.

#include <cstddef>
#include <vector>

#include "kickflow/spectral_basis.hpp"

namespace kickflow {

struct CollocationGrid {
  int nx = 0;
  int ny = 0;

  std::size_t points() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }

  // Smallest grid for which the advection quadrature is exact.
  static CollocationGrid minimum(const DomainSpec& spec);

  friend bool operator==(const CollocationGrid&, const CollocationGrid&) = default;
};

// Point values on the grid, row-major [iy][ix].
struct VelocitySamples {
  CollocationGrid grid;
  std::vector<double> u1;
  std::vector<double> u2;
};

// u1, u2 and the velocity gradient on the grid (d_y u2 = -d_x u1).
struct GradientFields {
  std::vector<double> u1, u2, dxu1, dyu1, dxu2, dyu2;

  void resize(std::size_t points);
};

class PseudoSpectral {
 public:
  // Throws invalid-argument when the grid is below CollocationGrid::minimum.
  PseudoSpectral(const SpectralBasis& basis, CollocationGrid grid);

  struct Workspace {
    std::vector<double> tensor, te, td, td2, s1, s2, proj;
    std::vector<double> g1, g2;
    GradientFields a, b;
  };

  Workspace make_workspace() const;

  const SpectralBasis& basis() const { return basis_; }
  const CollocationGrid& grid() const { return grid_; }
  double x(int ix) const;
  double y(int iy) const;

  VelocitySamples synthesize(const SpectralField& u) const;
  SpectralField analyze(const VelocitySamples& samples) const;

  void gradient(const double* coeffs, GradientFields& out, Workspace& ws) const;

  // coeffs_k = <(g1, g2), phi_k> by exact quadrature.
  void project(const double* g1, const double* g2, double* coeffs, Workspace& ws) const;

  // Pi(a . grad b) for fields already expanded on the grid.
  void advection(const GradientFields& a, const GradientFields& b, double* out,
                 Workspace& ws) const;

  // Pi(a . grad b) + Pi(b . grad a).
  void symmetric_advection(const GradientFields& a, const GradientFields& b, double* out,
                           Workspace& ws) const;

 private:
  void synthesize_stage_x(const double* coeffs, Workspace& ws, bool need_second) const;

  SpectralBasis basis_;
  CollocationGrid grid_;
  std::size_t width_ = 0;  // 2 mx + 1
  std::size_t rows_ = 0;   // Ny
  std::vector<double> ex_, dx_, d2x_;             // [mi][ix]
  std::vector<double> yc_, ys_neg_, ys_n2_;       // [iy][n]
  std::vector<double> ac_, as_;                   // [n][iy], weighted
  std::vector<double> wex_, wdx_;                 // [ix][mi], weighted
};

}  // namespace kickflow
