#include "kernels_impl.hpp"

namespace kickflow::kernels::scalar {

void gemm(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c,
          bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      double acc = accumulate ? crow[j] : 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * b[p * n + j];
      crow[j] = acc;
    }
  }
}

void dot2(std::size_t n, const double* x1, const double* y1, const double* x2, const double* y2,
          double* out, bool accumulate) {
  if (accumulate) {
    for (std::size_t i = 0; i < n; ++i) out[i] += x1[i] * y1[i] + x2[i] * y2[i];
  } else {
    for (std::size_t i = 0; i < n; ++i) out[i] = x1[i] * y1[i] + x2[i] * y2[i];
  }
}

void exp_euler(std::size_t n, const double* decay, const double* gain, const double* c,
               const double* f, const double* b, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = decay[i] * c[i] + gain[i] * (f[i] - b[i]);
}

// Four interleaved partial sums, matching the lane layout of the AVX2 variant.
double dot(std::size_t n, const double* x, const double* y) {
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t l = 0; l < 4; ++l) s[l] += x[i + l] * y[i + l];
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += x[i] * y[i];
  return ((s[0] + s[1]) + (s[2] + s[3])) + tail;
}

double weighted_dot(std::size_t n, const double* w, const double* x, const double* y) {
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t l = 0; l < 4; ++l) s[l] += w[i + l] * x[i + l] * y[i + l];
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += w[i] * x[i] * y[i];
  return ((s[0] + s[1]) + (s[2] + s[3])) + tail;
}

}  // namespace kickflow::kernels::scalar
