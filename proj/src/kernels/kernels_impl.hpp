#pragma once

#include "cvdelay/kernels.hpp"

namespace cvdelay::kernels::detail {

double dot_scalar(const double* a, const double* b, std::size_t n);
double sum_scalar(const double* a, std::size_t n);
PairMoments pair_moments_scalar(const double* x, const double* y, std::size_t n, double mean_x,
                                double mean_y);
void multiply_scalar(const double* a, const double* b, double* out, std::size_t n);
void scale_scalar(double* x, double factor, std::size_t n);

#if defined(CVDELAY_HAVE_AVX2)
double dot_avx2(const double* a, const double* b, std::size_t n);
double sum_avx2(const double* a, std::size_t n);
PairMoments pair_moments_avx2(const double* x, const double* y, std::size_t n, double mean_x,
                              double mean_y);
void multiply_avx2(const double* a, const double* b, double* out, std::size_t n);
void scale_avx2(double* x, double factor, std::size_t n);
#endif

#if defined(CVDELAY_HAVE_NEON)
double dot_neon(const double* a, const double* b, std::size_t n);
double sum_neon(const double* a, std::size_t n);
PairMoments pair_moments_neon(const double* x, const double* y, std::size_t n, double mean_x,
                              double mean_y);
void multiply_neon(const double* a, const double* b, double* out, std::size_t n);
void scale_neon(double* x, double factor, std::size_t n);
#endif

}  // namespace cvdelay::kernels::detail
