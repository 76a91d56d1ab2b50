#include <atomic>
#include <cstdlib>
#include <string>

#include "cvdelay/error.hpp"
#include "kernels_impl.hpp"

namespace cvdelay::kernels {

namespace {

const KernelTable kScalar{Isa::scalar,
                          "scalar",
                          detail::dot_scalar,
                          detail::sum_scalar,
                          detail::pair_moments_scalar,
                          detail::multiply_scalar,
                          detail::scale_scalar};

#if defined(CVDELAY_HAVE_AVX2)
const KernelTable kAvx2{Isa::avx2,
                        "avx2",
                        detail::dot_avx2,
                        detail::sum_avx2,
                        detail::pair_moments_avx2,
                        detail::multiply_avx2,
                        detail::scale_avx2};
#endif

#if defined(CVDELAY_HAVE_NEON)
const KernelTable kNeon{Isa::neon,
                        "neon",
                        detail::dot_neon,
                        detail::sum_neon,
                        detail::pair_moments_neon,
                        detail::multiply_neon,
                        detail::scale_neon};
#endif

const KernelTable* automatic() {
  if (const char* env = std::getenv("CVDELAY_ISA")) {
    const std::string want(env);
    if (want == "scalar") return &kScalar;
    if (want == "avx2" && avx2_table()) return avx2_table();
    if (want == "neon" && neon_table()) return neon_table();
  }
  if (const KernelTable* t = avx2_table()) return t;
  if (const KernelTable* t = neon_table()) return t;
  return &kScalar;
}

std::atomic<const KernelTable*> g_active{nullptr};

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw InvalidArgument("kernel operands differ in length");
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

const KernelTable* avx2_table() {
#if defined(CVDELAY_HAVE_AVX2)
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok ? &kAvx2 : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_table() {
#if defined(CVDELAY_HAVE_NEON)
  return &kNeon;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (!t) {
    t = automatic();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

Isa active_isa() { return active().isa; }

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2: return avx2_table() != nullptr;
    case Isa::neon: return neon_table() != nullptr;
  }
  return false;
}

void force_isa(Isa isa) {
  const KernelTable* t = nullptr;
  switch (isa) {
    case Isa::scalar: t = &kScalar; break;
    case Isa::avx2: t = avx2_table(); break;
    case Isa::neon: t = neon_table(); break;
  }
  if (!t) throw InvalidArgument(std::string("kernel variant unavailable: ") +
                                std::string(isa_name(isa)));
  g_active.store(t, std::memory_order_release);
}

void reset_isa() { g_active.store(automatic(), std::memory_order_release); }

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

double dot(std::span<const double> a, std::span<const double> b) {
  check_sizes(a.size(), b.size());
  return active().dot(a.data(), b.data(), a.size());
}

double sum(std::span<const double> a) { return active().sum(a.data(), a.size()); }

double mean(std::span<const double> a) {
  if (a.empty()) throw InvalidArgument("mean of empty sequence");
  return sum(a) / static_cast<double>(a.size());
}

PairMoments pair_moments(std::span<const double> x, std::span<const double> y, double mean_x,
                         double mean_y) {
  check_sizes(x.size(), y.size());
  return active().pair_moments(x.data(), y.data(), x.size(), mean_x, mean_y);
}

void multiply(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  check_sizes(a.size(), b.size());
  check_sizes(a.size(), out.size());
  active().multiply(a.data(), b.data(), out.data(), a.size());
}

void scale(std::span<double> x, double factor) { active().scale(x.data(), factor, x.size()); }

}  // namespace cvdelay::kernels
