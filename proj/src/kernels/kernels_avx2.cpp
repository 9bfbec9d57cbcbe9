#include "kernels_impl.hpp"

#if defined(KICKFLOW_HAVE_AVX2_TU)

#include <immintrin.h>

namespace kickflow::kernels::avx2 {
namespace {

inline __m256i tail_mask(std::size_t r) {
  return _mm256_setr_epi64x(r > 0 ? -1 : 0, r > 1 ? -1 : 0, r > 2 ? -1 : 0, 0);
}

inline double hsum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

}  // namespace

void gemm(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c,
          bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    std::size_t j = 0;
    for (; j + 16 <= n; j += 16) {
      __m256d c0, c1, c2, c3;
      if (accumulate) {
        c0 = _mm256_loadu_pd(crow + j);
        c1 = _mm256_loadu_pd(crow + j + 4);
        c2 = _mm256_loadu_pd(crow + j + 8);
        c3 = _mm256_loadu_pd(crow + j + 12);
      } else {
        c0 = c1 = c2 = c3 = _mm256_setzero_pd();
      }
      for (std::size_t p = 0; p < k; ++p) {
        const __m256d av = _mm256_broadcast_sd(arow + p);
        const double* brow = b + p * n + j;
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow), c0);
        c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 4), c1);
        c2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 8), c2);
        c3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 12), c3);
      }
      _mm256_storeu_pd(crow + j, c0);
      _mm256_storeu_pd(crow + j + 4, c1);
      _mm256_storeu_pd(crow + j + 8, c2);
      _mm256_storeu_pd(crow + j + 12, c3);
    }
    for (; j + 4 <= n; j += 4) {
      __m256d c0 = accumulate ? _mm256_loadu_pd(crow + j) : _mm256_setzero_pd();
      for (std::size_t p = 0; p < k; ++p) {
        c0 = _mm256_fmadd_pd(_mm256_broadcast_sd(arow + p), _mm256_loadu_pd(b + p * n + j), c0);
      }
      _mm256_storeu_pd(crow + j, c0);
    }
    if (j < n) {
      const __m256i mask = tail_mask(n - j);
      __m256d c0 = accumulate ? _mm256_maskload_pd(crow + j, mask) : _mm256_setzero_pd();
      for (std::size_t p = 0; p < k; ++p) {
        c0 = _mm256_fmadd_pd(_mm256_broadcast_sd(arow + p), _mm256_maskload_pd(b + p * n + j, mask),
                             c0);
      }
      _mm256_maskstore_pd(crow + j, mask, c0);
    }
  }
}

void dot2(std::size_t n, const double* x1, const double* y1, const double* x2, const double* y2,
          double* out, bool accumulate) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_mul_pd(_mm256_loadu_pd(x2 + i), _mm256_loadu_pd(y2 + i));
    v = _mm256_fmadd_pd(_mm256_loadu_pd(x1 + i), _mm256_loadu_pd(y1 + i), v);
    if (accumulate) v = _mm256_add_pd(_mm256_loadu_pd(out + i), v);
    _mm256_storeu_pd(out + i, v);
  }
  for (; i < n; ++i) {
    const double v = x1[i] * y1[i] + x2[i] * y2[i];
    out[i] = accumulate ? out[i] + v : v;
  }
}

void exp_euler(std::size_t n, const double* decay, const double* gain, const double* c,
               const double* f, const double* b, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d src = _mm256_sub_pd(_mm256_loadu_pd(f + i), _mm256_loadu_pd(b + i));
    const __m256d lin = _mm256_mul_pd(_mm256_loadu_pd(decay + i), _mm256_loadu_pd(c + i));
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(_mm256_loadu_pd(gain + i), src, lin));
  }
  for (; i < n; ++i) out[i] = decay[i] * c[i] + gain[i] * (f[i] - b[i]);
}

double dot(std::size_t n, const double* x, const double* y) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += x[i] * y[i];
  return hsum(acc) + tail;
}

double weighted_dot(std::size_t n, const double* w, const double* x, const double* y) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d wx = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(x + i));
    acc = _mm256_fmadd_pd(wx, _mm256_loadu_pd(y + i), acc);
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += w[i] * x[i] * y[i];
  return hsum(acc) + tail;
}

}  // namespace kickflow::kernels::avx2

#endif
