#pragma once

// Thin RAII layer over FFTW. Transforms are unnormalized, as in FFTW.

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace cvdelay::fft {

using cplx = std::complex<double>;

// Real-to-complex forward transform of fixed size n (n/2+1 output bins).
class RealForward {
 public:
  explicit RealForward(std::size_t n);
  ~RealForward();
  RealForward(const RealForward&) = delete;
  RealForward& operator=(const RealForward&) = delete;

  std::size_t size() const { return n_; }
  std::span<double> input();
  std::span<const cplx> execute();

 private:
  struct Impl;
  std::size_t n_;
  std::unique_ptr<Impl> impl_;
};

// Complex-to-real inverse transform of size n, reading n/2+1 bins.
class RealInverse {
 public:
  explicit RealInverse(std::size_t n);
  ~RealInverse();
  RealInverse(const RealInverse&) = delete;
  RealInverse& operator=(const RealInverse&) = delete;

  std::size_t size() const { return n_; }
  std::span<cplx> input();
  // The input buffer is clobbered.
  std::span<const double> execute();

 private:
  struct Impl;
  std::size_t n_;
  std::unique_ptr<Impl> impl_;
};

// In-place complex transform of size n; sign -1 forward, +1 backward.
class Complex {
 public:
  Complex(std::size_t n, int sign);
  ~Complex();
  Complex(const Complex&) = delete;
  Complex& operator=(const Complex&) = delete;

  std::size_t size() const { return n_; }
  std::span<cplx> data();
  void execute();

 private:
  struct Impl;
  std::size_t n_;
  std::unique_ptr<Impl> impl_;
};

std::size_t next_pow2(std::size_t n);

}  // namespace cvdelay::fft
