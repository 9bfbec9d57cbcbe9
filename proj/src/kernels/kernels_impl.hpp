#pragma once

#include <cstddef>

namespace kickflow::kernels {

namespace scalar {
void gemm(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c,
          bool accumulate);
void dot2(std::size_t n, const double* x1, const double* y1, const double* x2, const double* y2,
          double* out, bool accumulate);
void exp_euler(std::size_t n, const double* decay, const double* gain, const double* c,
               const double* f, const double* b, double* out);
double dot(std::size_t n, const double* x, const double* y);
double weighted_dot(std::size_t n, const double* w, const double* x, const double* y);
}  // namespace scalar

namespace avx2 {
void gemm(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c,
          bool accumulate);
void dot2(std::size_t n, const double* x1, const double* y1, const double* x2, const double* y2,
          double* out, bool accumulate);
void exp_euler(std::size_t n, const double* decay, const double* gain, const double* c,
               const double* f, const double* b, double* out);
double dot(std::size_t n, const double* x, const double* y);
double weighted_dot(std::size_t n, const double* w, const double* x, const double* y);
}  // namespace avx2

}  // namespace kickflow::kernels
