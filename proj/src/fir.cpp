#include "cvdelay/fir.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cvdelay/error.hpp"
#include "cvdelay/fft.hpp"
#include "cvdelay/kernels.hpp"

namespace cvdelay::dsp {

std::vector<double> design_lowpass(double sample_rate, double cutoff, double transition_width) {
  if (!(sample_rate > 0.0)) throw InvalidArgument("sample rate must be > 0");
  if (!(cutoff > 0.0 && cutoff < 0.5 * sample_rate))
    throw InvalidArgument("low-pass cutoff must lie in (0, sample_rate/2)");
  if (!(transition_width > 0.0)) throw InvalidArgument("transition width must be > 0");
  std::size_t n = static_cast<std::size_t>(std::ceil(5.5 * sample_rate / transition_width));
  n |= 1;
  const double mid = 0.5 * static_cast<double>(n - 1);
  const double fc = cutoff / sample_rate;
  std::vector<double> h(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double k = static_cast<double>(i) - mid;
    const double sinc = k == 0.0 ? 2.0 * fc
                                 : std::sin(2.0 * std::numbers::pi * fc * k) / (std::numbers::pi * k);
    const double x = n > 1 ? 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
    const double w = 0.42 - 0.5 * std::cos(x) + 0.08 * std::cos(2.0 * x);
    h[i] = sinc * w;
    total += h[i];
  }
  for (auto& v : h) v /= total;
  return h;
}

double magnitude_response(std::span<const double> taps, double sample_rate, double f) {
  const double mid = 0.5 * static_cast<double>(taps.size() - 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < taps.size(); ++i)
    acc += taps[i] * std::cos(2.0 * std::numbers::pi * f / sample_rate * (static_cast<double>(i) - mid));
  return std::abs(acc);
}

std::size_t valid_output_count(std::size_t input_size, std::size_t taps, std::size_t decimation) {
  if (decimation == 0) throw InvalidArgument("decimation must be >= 1");
  if (taps == 0 || input_size < taps) return 0;
  return (input_size - taps) / decimation + 1;
}

std::vector<double> fir_decimate_direct(std::span<const double> x, std::span<const double> taps,
                                        std::size_t decimation) {
  const std::size_t n_out = valid_output_count(x.size(), taps.size(), decimation);
  std::vector<double> y(n_out);
  for (std::size_t k = 0; k < n_out; ++k)
    y[k] = kernels::dot(taps, x.subspan(k * decimation, taps.size()));
  return y;
}

std::vector<double> fir_decimate_fft(std::span<const double> x, std::span<const double> taps,
                                     std::size_t decimation) {
  const std::size_t n_out = valid_output_count(x.size(), taps.size(), decimation);
  std::vector<double> y(n_out);
  if (n_out == 0) return y;
  const std::size_t l = taps.size();
  const std::size_t block = fft::next_pow2(std::max<std::size_t>(4 * l, 4096));
  const std::size_t step = block - l + 1;

  fft::RealForward fwd(block);
  fft::RealInverse inv(block);
  std::vector<fft::cplx> h(block / 2 + 1);
  {
    auto in = fwd.input();
    std::fill(in.begin(), in.end(), 0.0);
    std::copy(taps.begin(), taps.end(), in.begin());
    const auto spec = fwd.execute();
    std::copy(spec.begin(), spec.end(), h.begin());
  }
  const double norm = 1.0 / static_cast<double>(block);

  // Full-convolution index m = l-1 + k*D; block starting at s yields m in [s+l-1, s+block).
  std::size_t k = 0;
  for (std::size_t s = 0; k < n_out; s += step) {
    auto in = fwd.input();
    const std::size_t avail = s < x.size() ? std::min(block, x.size() - s) : 0;
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(s), avail, in.begin());
    std::fill(in.begin() + static_cast<std::ptrdiff_t>(avail), in.end(), 0.0);
    const auto spec = fwd.execute();
    auto buf = inv.input();
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = spec[i] * h[i];
    const auto out = inv.execute();
    while (k < n_out) {
      const std::size_t m = l - 1 + k * decimation;
      if (m >= s + block) break;
      y[k] = out[m - s] * norm;
      ++k;
    }
  }
  return y;
}

std::vector<double> fir_decimate(std::span<const double> x, std::span<const double> taps,
                                 std::size_t decimation) {
  const double n_out = static_cast<double>(valid_output_count(x.size(), taps.size(), decimation));
  const double direct = n_out * static_cast<double>(taps.size());
  const double block = static_cast<double>(fft::next_pow2(std::max<std::size_t>(4 * taps.size(), 4096)));
  const double blocks = static_cast<double>(x.size()) / (block - static_cast<double>(taps.size()) + 1.0) + 1.0;
  const double via_fft = blocks * 6.0 * block * std::log2(block);
  return direct <= via_fft ? fir_decimate_direct(x, taps, decimation)
                           : fir_decimate_fft(x, taps, decimation);
}

}  // namespace cvdelay::dsp

namespace cvdelay::dsp {

std::vector<double> downmix_lowpass(double sample_rate, double cutoff) {
  return design_lowpass(sample_rate, cutoff, 0.1 * cutoff);
}

std::vector<double> antialias_lowpass(double sample_rate, double cutoff) {
  const double nyquist = 0.5 * sample_rate;
  if (!(cutoff < nyquist)) throw InvalidArgument("anti-alias cutoff must be below Nyquist");
  return design_lowpass(sample_rate, cutoff, 2.0 * (nyquist - cutoff));
}

}  // namespace cvdelay::dsp
