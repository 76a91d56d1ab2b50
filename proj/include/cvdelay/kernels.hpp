#pragma once

// Hot inner loops with a scalar reference and vectorized variants picked at
// runtime. All spans passed together must have equal length.

#include <cstddef>
#include <span>
#include <string_view>

namespace cvdelay::kernels {

enum class Isa { scalar, avx2, neon };

// Centered second moments of a sample pair about given means.
struct PairMoments {
  double xx = 0.0;
  double yy = 0.0;
  double xy = 0.0;
};

struct KernelTable {
  Isa isa;
  std::string_view name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  PairMoments (*pair_moments)(const double* x, const double* y, std::size_t n, double mean_x,
                              double mean_y);
  void (*multiply)(const double* a, const double* b, double* out, std::size_t n);
  void (*scale)(double* x, double factor, std::size_t n);
};

const KernelTable& scalar_table();
// nullptr when the variant was not compiled in or the CPU lacks support.
const KernelTable* avx2_table();
const KernelTable* neon_table();

const KernelTable& active();
Isa active_isa();
bool isa_available(Isa isa);
// Forces a variant for the whole process; throws InvalidArgument when unavailable.
void force_isa(Isa isa);
// Back to the automatic choice (also honours CVDELAY_ISA=scalar|avx2|neon).
void reset_isa();
std::string_view isa_name(Isa isa);

double dot(std::span<const double> a, std::span<const double> b);
double sum(std::span<const double> a);
double mean(std::span<const double> a);
PairMoments pair_moments(std::span<const double> x, std::span<const double> y, double mean_x,
                         double mean_y);
void multiply(std::span<const double> a, std::span<const double> b, std::span<double> out);
void scale(std::span<double> x, double factor);

}  // namespace cvdelay::kernels
