#include "cvdelay/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "cvdelay/error.hpp"
#include "cvdelay/fft.hpp"
#include "cvdelay/kernels.hpp"

namespace cvdelay::dsp {

namespace {

double variance(std::span<const double> x) {
  if (x.size() < 2) throw InvalidArgument("variance needs at least two samples");
  const double m = kernels::mean(x);
  return kernels::pair_moments(x, x, m, m).xx / static_cast<double>(x.size());
}

// Total scale that maps raw units to QNL units, from a calibrated-or-raw reference.
double target_scale(std::span<const double> ref, double ref_scale, double signal_var) {
  const double v_raw = variance(ref) / (ref_scale * ref_scale);
  if (!(v_raw > 1e-12 * signal_var) || !(v_raw > 0.0))
    throw CalibrationError("vacuum reference variance is below the calibration floor");
  return 1.0 / std::sqrt(v_raw);
}

void rescale(std::vector<double>& v, double factor) { kernels::scale(v, factor); }

}  // namespace

double BasebandRecord::duration() const {
  return sample_rate > 0.0 ? static_cast<double>(in_phase.size()) / sample_rate : 0.0;
}

void BasebandRecord::validate() const {
  if (!(sample_rate > 0.0)) throw InvalidArgument("baseband sample_rate must be > 0");
  if (bandwidth > 0.5 * sample_rate) throw InvalidArgument("baseband bandwidth exceeds Nyquist");
  if (!quadrature_part.empty() && quadrature_part.size() != in_phase.size())
    throw InvalidArgument("baseband quadrature component length mismatch");
  for (double v : in_phase)
    if (!std::isfinite(v)) throw InvalidArgument("baseband record has non-finite samples");
}

TimeSeriesRecord normalize_to_qnl(const TimeSeriesRecord& rec, const TimeSeriesRecord& vacuum_ref) {
  if (vacuum_ref.samples.empty()) throw CalibrationError("missing QNL reference record");
  if (rec.sample_rate != vacuum_ref.sample_rate)
    throw CalibrationError("QNL reference sample rate differs from the record's");
  const double signal_var = variance(rec.samples) / (rec.qnl_scale * rec.qnl_scale);
  const double target = target_scale(vacuum_ref.samples, vacuum_ref.qnl_scale, signal_var);
  TimeSeriesRecord out = rec;
  if (rec.qnl_scale == target) return out;
  rescale(out.samples, target / rec.qnl_scale);
  out.qnl_scale = target;
  return out;
}

BasebandRecord normalize_to_qnl(const BasebandRecord& rec, const BasebandRecord& vacuum_ref) {
  if (vacuum_ref.in_phase.empty()) throw CalibrationError("missing QNL reference record");
  if (rec.sample_rate != vacuum_ref.sample_rate || rec.center_frequency != vacuum_ref.center_frequency ||
      rec.bandwidth != vacuum_ref.bandwidth)
    throw CalibrationError("QNL reference band differs from the record's");
  const double signal_var = variance(rec.in_phase) / (rec.qnl_scale * rec.qnl_scale);
  const double target = target_scale(vacuum_ref.in_phase, vacuum_ref.qnl_scale, signal_var);
  BasebandRecord out = rec;
  if (rec.qnl_scale == target) return out;
  const double factor = target / rec.qnl_scale;
  rescale(out.in_phase, factor);
  rescale(out.quadrature_part, factor);
  out.qnl_scale = target;
  return out;
}

BasebandRecord downmix(const TimeSeriesRecord& rec, double f0, double cutoff,
                       std::size_t decimation) {
  rec.validate();
  const double fs = rec.sample_rate;
  if (!(f0 >= 0.0) || !(cutoff > 0.0)) throw InvalidArgument("downmix needs f0 >= 0 and cutoff > 0");
  if (!(f0 + cutoff < 0.5 * fs))
    throw InvalidArgument("aliasing configuration: f0 + cutoff must stay below Nyquist");
  if (decimation == 0) throw InvalidArgument("decimation must be >= 1");
  const auto taps = downmix_lowpass(fs, cutoff);
  const double stop_edge = cutoff + 0.05 * cutoff;
  if (!(fs / static_cast<double>(decimation) > 2.0 * stop_edge))
    throw InvalidArgument("aliasing configuration: decimated rate too low for the cutoff");
  if (rec.samples.size() < taps.size())
    throw InvalidArgument("record shorter than the down-mix filter");

  const std::size_t n = rec.samples.size();
  std::vector<double> lo_i(n), lo_q(n);
  const double w = 2.0 * std::numbers::pi * f0 / fs;
  for (std::size_t k = 0; k < n; ++k) {
    const double ph = w * static_cast<double>(k);
    lo_i[k] = 2.0 * std::cos(ph);
    lo_q[k] = -2.0 * std::sin(ph);
  }
  std::vector<double> mixed(n);
  kernels::multiply(rec.samples, lo_i, mixed);
  BasebandRecord out;
  out.in_phase = fir_decimate(mixed, taps, decimation);
  kernels::multiply(rec.samples, lo_q, mixed);
  out.quadrature_part = fir_decimate(mixed, taps, decimation);

  out.sample_rate = fs / static_cast<double>(decimation);
  out.center_frequency = f0;
  out.bandwidth = cutoff;
  out.start_time = 0.5 * static_cast<double>(taps.size() - 1) / fs;
  out.quadrature = rec.quadrature;
  out.channel = rec.channel;
  out.qnl_scale = rec.qnl_scale;
  return out;
}

PsdEstimate estimate_psd(const TimeSeriesRecord& rec, std::size_t segment_length, double overlap) {
  if (segment_length < 2) throw InvalidArgument("PSD segment length must be >= 2");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw InvalidArgument("PSD overlap must lie in [0, 1)");
  if (rec.samples.size() < segment_length)
    throw InvalidArgument("record too short for one PSD segment");
  const std::size_t step =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(segment_length * (1.0 - overlap))));
  std::vector<double> window(segment_length);
  double wss = 0.0;
  for (std::size_t i = 0; i < segment_length; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                     static_cast<double>(segment_length));
    wss += window[i] * window[i];
  }
  const std::size_t bins = segment_length / 2 + 1;
  PsdEstimate psd;
  psd.power.assign(bins, 0.0);
  fft::RealForward fwd(segment_length);
  std::span<const double> x = rec.samples;
  for (std::size_t s = 0; s + segment_length <= x.size(); s += step) {
    const auto seg = x.subspan(s, segment_length);
    const double m = kernels::mean(seg);
    auto in = fwd.input();
    for (std::size_t i = 0; i < segment_length; ++i) in[i] = (seg[i] - m) * window[i];
    const auto spec = fwd.execute();
    for (std::size_t k = 0; k < bins; ++k) psd.power[k] += std::norm(spec[k]);
    ++psd.segments;
  }
  const double fs = rec.sample_rate;
  const double scale = 1.0 / (fs * wss * static_cast<double>(psd.segments));
  psd.resolution = fs / static_cast<double>(segment_length);
  psd.frequency.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const bool edge = k == 0 || (segment_length % 2 == 0 && k == bins - 1);
    psd.power[k] *= scale * (edge ? 1.0 : 2.0);
    psd.frequency[k] = static_cast<double>(k) * psd.resolution;
  }
  return psd;
}

std::vector<double> to_qnl_db(const PsdEstimate& psd, const PsdEstimate& vacuum) {
  if (psd.power.size() != vacuum.power.size() || psd.resolution != vacuum.resolution)
    throw CalibrationError("PSD and vacuum reference use different frequency grids");
  std::vector<double> out(psd.power.size());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = vacuum.power[k] > 0.0 ? 10.0 * std::log10(psd.power[k] / vacuum.power[k])
                                   : std::numeric_limits<double>::quiet_NaN();
  return out;
}

double integrate_psd(const PsdEstimate& psd, double f_lo, double f_hi) {
  double acc = 0.0;
  for (std::size_t k = 0; k < psd.power.size(); ++k)
    if (psd.frequency[k] >= f_lo && psd.frequency[k] <= f_hi) acc += psd.power[k];
  return acc * psd.resolution;
}

CorrelationCurve CorrelationCurve::normalized_to(double reference_peak) const {
  if (!(std::abs(reference_peak) > 0.0)) throw InvalidArgument("reference peak must be non-zero");
  CorrelationCurve out = *this;
  for (auto& v : out.g) v /= std::abs(reference_peak);
  return out;
}

DelayEstimate estimate_delay(const BasebandRecord& x, const BasebandRecord& y, double max_lag) {
  x.validate();
  y.validate();
  if (x.sample_rate != y.sample_rate) throw InvalidArgument("delay estimation needs equal sample rates");
  if (std::abs(x.start_time - y.start_time) > 1e-12 || x.center_frequency != y.center_frequency)
    throw InvalidArgument("delay estimation needs records on a common clock and band");
  const double fs = x.sample_rate;
  const std::size_t n = std::min(x.size(), y.size());
  if (!(max_lag > 0.0) || !(max_lag < 0.25 * static_cast<double>(n) / fs))
    throw InvalidArgument("max_lag must be positive and below a quarter of the record");
  const auto lmax = static_cast<std::ptrdiff_t>(std::floor(max_lag * fs));
  const bool complex_env = !x.quadrature_part.empty() && !y.quadrature_part.empty();

  auto power = [&](const BasebandRecord& r) {
    double p = kernels::dot(r.samples().first(n), r.samples().first(n));
    if (complex_env) p += kernels::dot(std::span(r.quadrature_part).first(n), std::span(r.quadrature_part).first(n));
    return p / static_cast<double>(n);
  };
  const double norm = std::sqrt(power(x) * power(y));
  if (!(norm > 0.0)) throw DegenerateError("delay estimation on silent records");

  const double w0 = 2.0 * std::numbers::pi * x.center_frequency;
  DelayEstimate est;
  est.curve.lags.reserve(2 * lmax + 1);
  est.curve.g.reserve(2 * lmax + 1);
  for (std::ptrdiff_t l = -lmax; l <= lmax; ++l) {
    // y[k] against x[k - l] over the overlap only.
    const std::size_t ys = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, l));
    const std::size_t xs = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -l));
    const std::size_t len = n - static_cast<std::size_t>(std::abs(l));
    auto yi = std::span(y.in_phase).subspan(ys, len);
    auto xi = std::span(x.in_phase).subspan(xs, len);
    std::complex<double> c(kernels::dot(yi, xi), 0.0);
    if (complex_env) {
      auto yq = std::span(y.quadrature_part).subspan(ys, len);
      auto xq = std::span(x.quadrature_part).subspan(xs, len);
      c = {kernels::dot(yi, xi) + kernels::dot(yq, xq), kernels::dot(yq, xi) - kernels::dot(yi, xq)};
    }
    c /= static_cast<double>(len);
    const double tau = static_cast<double>(l) / fs;
    const double g = complex_env ? std::real(c * std::polar(1.0, w0 * tau)) / norm : c.real() / norm;
    est.curve.lags.push_back(tau);
    est.curve.g.push_back(g);
  }

  const auto& g = est.curve.g;
  std::size_t best = 0;
  for (std::size_t i = 1; i < g.size(); ++i)
    if (std::abs(g[i]) > std::abs(g[best])) best = i;
  double offset = 0.0;
  double peak = g[best];
  if (best > 0 && best + 1 < g.size()) {
    const double a = g[best - 1], b = g[best], c = g[best + 1];
    const double denom = a - 2.0 * b + c;
    if (denom != 0.0) {
      offset = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
      peak = b - 0.25 * (a - c) * offset;
    }
  }
  est.tau_hat = est.curve.lags[best] + offset / fs;
  est.peak = peak;
  const double n_eff = 2.0 * x.bandwidth * static_cast<double>(n) / fs;
  est.threshold = 3.0 / std::sqrt(std::max(1.0, n_eff));
  if (!(std::abs(peak) > est.threshold))
    throw NoCorrelationError("no detectable correlation: peak " + std::to_string(peak) +
                             " below threshold " + std::to_string(est.threshold));
  return est;
}

std::pair<BasebandRecord, BasebandRecord> align(const BasebandRecord& x, const BasebandRecord& y,
                                                double tau) {
  if (x.sample_rate != y.sample_rate) throw InvalidArgument("align needs equal sample rates");
  const double fs = x.sample_rate;
  const double shift = tau * fs;  // y'[k] = y[k + shift]
  const auto whole = static_cast<std::ptrdiff_t>(std::floor(shift));
  const double frac = shift - static_cast<double>(whole);
  const auto nx = static_cast<std::ptrdiff_t>(x.size());
  const auto ny = static_cast<std::ptrdiff_t>(y.size());
  // Valid k needs 0 <= k + whole and k + whole + 1 < ny.
  const std::ptrdiff_t k0 = std::max<std::ptrdiff_t>(0, -whole);
  const std::ptrdiff_t k1 = std::min<std::ptrdiff_t>(nx, ny - whole - 1);
  if (k1 - k0 < 2) throw InvalidArgument("delay leaves no overlap between records");
  const bool has_q = !y.quadrature_part.empty();
  const double ph = 2.0 * std::numbers::pi * x.center_frequency * tau;
  const double cs = std::cos(ph), sn = std::sin(ph);

  BasebandRecord ax = x, ay = y;
  const auto len = static_cast<std::size_t>(k1 - k0);
  ax.in_phase.assign(x.in_phase.begin() + k0, x.in_phase.begin() + k1);
  if (!x.quadrature_part.empty())
    ax.quadrature_part.assign(x.quadrature_part.begin() + k0, x.quadrature_part.begin() + k1);
  ax.start_time = x.start_time + static_cast<double>(k0) / fs;
  ay.in_phase.resize(len);
  ay.quadrature_part.resize(has_q ? len : 0);
  for (std::size_t i = 0; i < len; ++i) {
    const auto j = static_cast<std::size_t>(k0 + static_cast<std::ptrdiff_t>(i) + whole);
    const double yi = (1.0 - frac) * y.in_phase[j] + frac * y.in_phase[j + 1];
    if (has_q) {
      const double yq = (1.0 - frac) * y.quadrature_part[j] + frac * y.quadrature_part[j + 1];
      ay.in_phase[i] = yi * cs - yq * sn;
      ay.quadrature_part[i] = yi * sn + yq * cs;
    } else {
      ay.in_phase[i] = yi;
    }
  }
  ay.start_time = ax.start_time;
  return {ax, ay};
}

}  // namespace cvdelay::dsp
