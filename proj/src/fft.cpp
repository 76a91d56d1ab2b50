#include "cvdelay/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <new>

#include "cvdelay/error.hpp"

namespace cvdelay::fft {

namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

template <class T>
T* alloc(std::size_t count) {
  void* p = fftw_malloc(sizeof(T) * std::max<std::size_t>(count, 1));
  if (!p) throw std::bad_alloc();
  return static_cast<T*>(p);
}

void check_size(std::size_t n) {
  if (n == 0) throw InvalidArgument("FFT size must be positive");
}

}  // namespace

struct RealForward::Impl {
  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan plan = nullptr;
};

RealForward::RealForward(std::size_t n) : n_(n), impl_(std::make_unique<Impl>()) {
  check_size(n);
  impl_->in = alloc<double>(n);
  impl_->out = alloc<fftw_complex>(n / 2 + 1);
  std::lock_guard lock(planner_mutex());
  impl_->plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), impl_->in, impl_->out, FFTW_ESTIMATE);
}

RealForward::~RealForward() {
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(impl_->plan);
  }
  fftw_free(impl_->in);
  fftw_free(impl_->out);
}

std::span<double> RealForward::input() { return {impl_->in, n_}; }

std::span<const cplx> RealForward::execute() {
  fftw_execute(impl_->plan);
  return {reinterpret_cast<const cplx*>(impl_->out), n_ / 2 + 1};
}

struct RealInverse::Impl {
  fftw_complex* in = nullptr;
  double* out = nullptr;
  fftw_plan plan = nullptr;
};

RealInverse::RealInverse(std::size_t n) : n_(n), impl_(std::make_unique<Impl>()) {
  check_size(n);
  impl_->in = alloc<fftw_complex>(n / 2 + 1);
  impl_->out = alloc<double>(n);
  std::lock_guard lock(planner_mutex());
  impl_->plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), impl_->in, impl_->out, FFTW_ESTIMATE);
}

RealInverse::~RealInverse() {
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(impl_->plan);
  }
  fftw_free(impl_->in);
  fftw_free(impl_->out);
}

std::span<cplx> RealInverse::input() { return {reinterpret_cast<cplx*>(impl_->in), n_ / 2 + 1}; }

std::span<const double> RealInverse::execute() {
  fftw_execute(impl_->plan);
  return {impl_->out, n_};
}

struct Complex::Impl {
  fftw_complex* buf = nullptr;
  fftw_plan plan = nullptr;
};

Complex::Complex(std::size_t n, int sign) : n_(n), impl_(std::make_unique<Impl>()) {
  check_size(n);
  impl_->buf = alloc<fftw_complex>(n);
  std::lock_guard lock(planner_mutex());
  impl_->plan = fftw_plan_dft_1d(static_cast<int>(n), impl_->buf, impl_->buf,
                                 sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
}

Complex::~Complex() {
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(impl_->plan);
  }
  fftw_free(impl_->buf);
}

std::span<cplx> Complex::data() { return {reinterpret_cast<cplx*>(impl_->buf), n_}; }

void Complex::execute() { fftw_execute(impl_->plan); }

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace cvdelay::fft
