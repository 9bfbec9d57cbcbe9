#pragma once

// Data-parallel inner loops of the pseudo-spectral solver.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2/FMA variant. The variant is picked once at runtime from CPU support and
// the KICKFLOW_SIMD environment variable (auto|scalar|avx2). Both variants
// compute the same sums in the same order; they differ only by FMA rounding.

#include <cstddef>
#include <string_view>

namespace kickflow::kernels {

enum class Isa { kScalar, kAvx2 };

struct KernelTable {
  Isa isa;
  std::string_view name;

  // C[m x n] = A[m x k] * B[k x n] (or +=), all row-major and dense.
  void (*gemm)(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
               double* c, bool accumulate);

  // out[i] = x1[i] * y1[i] + x2[i] * y2[i] (or +=).
  void (*dot2)(std::size_t n, const double* x1, const double* y1, const double* x2,
               const double* y2, double* out, bool accumulate);

  // out[i] = decay[i] * c[i] + gain[i] * (f[i] - b[i]); out may alias c.
  void (*exp_euler)(std::size_t n, const double* decay, const double* gain, const double* c,
                    const double* f, const double* b, double* out);

  double (*dot)(std::size_t n, const double* x, const double* y);

  // sum_i w[i] * x[i] * y[i]
  double (*weighted_dot)(std::size_t n, const double* w, const double* x, const double* y);
};

const KernelTable& scalar_kernels();

// nullptr when the AVX2 variant was not compiled in.
const KernelTable* avx2_kernels();

bool cpu_supports_avx2();

// The table used by the solver. Resolved on first use.
const KernelTable& active();

// Overrides the runtime choice; requesting AVX2 on a machine without it
// throws invalid-argument.
void set_active(Isa isa);

}  // namespace kickflow::kernels
