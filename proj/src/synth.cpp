#include "cvdelay/synth.hpp"

#include <bit>
#include <cmath>
#include <numbers>

#include "cvdelay/error.hpp"
#include "cvdelay/fft.hpp"
#include "cvdelay/fir.hpp"
#include "parallel.hpp"

namespace cvdelay {

using gaussian::Mode;
using gaussian::Quadrature;

std::string to_string(Channel ch) {
  switch (ch) {
    case Channel::c: return "c";
    case Channel::d: return "d";
    case Channel::vacuum_ref: return "vacuum_ref";
  }
  return "?";
}

Channel parse_channel(const std::string& s) {
  if (s == "c") return Channel::c;
  if (s == "d") return Channel::d;
  if (s == "vacuum_ref" || s == "vacuum") return Channel::vacuum_ref;
  throw InvalidArgument("unknown channel label: " + s);
}

Quadrature quadrature_of_angle(double angle) {
  return std::abs(std::cos(angle)) >= std::abs(std::sin(angle)) ? Quadrature::plus
                                                                : Quadrature::minus;
}

void SimulationConfig::validate() const {
  auto fraction = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument(std::string(name) + " must lie in [0, 1]");
  };
  if (!(sample_rate > 0.0)) throw InvalidArgument("sample_rate must be > 0");
  if (!(antialias_cutoff > 0.0)) throw InvalidArgument("antialias_cutoff must be > 0");
  if (!(sample_rate > 2.0 * antialias_cutoff))
    throw InvalidArgument("sample_rate must exceed twice the antialias_cutoff");
  if (!(duration > 0.0)) throw InvalidArgument("duration must be > 0");
  if (sample_count() < 2) throw InvalidArgument("duration too short for two samples");
  if (!std::isfinite(homodyne_angle_c) || !std::isfinite(homodyne_angle_d))
    throw InvalidArgument("homodyne angles must be finite");
  fraction(visibility_c, "visibility_c");
  fraction(visibility_d, "visibility_d");
  fraction(passive_loss, "passive_loss");
  fraction(split_reflectivity, "split_reflectivity");
  if (!std::isfinite(split_phase)) throw InvalidArgument("split_phase must be finite");
}

std::size_t SimulationConfig::sample_count() const {
  return static_cast<std::size_t>(std::llround(duration * sample_rate));
}

Quadrature SimulationConfig::quadrature() const { return quadrature_of_angle(homodyne_angle_c); }

double TimeSeriesRecord::duration() const {
  return sample_rate > 0.0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
}

void TimeSeriesRecord::validate() const {
  if (!(sample_rate > 0.0)) throw InvalidArgument("record sample_rate must be > 0");
  for (double v : samples)
    if (!std::isfinite(v)) throw InvalidArgument("record contains non-finite samples");
}

namespace {

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double uniform_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream) {
  return splitmix(seed ^ splitmix(stream ^ 0x5851f42d4c957f2dULL));
}

// Two independent standard normals from counters 2k, 2k+1.
std::pair<double, double> normal_pair(std::uint64_t key, std::uint64_t k) {
  const double u1 = uniform_open(splitmix(key ^ splitmix(2 * k)));
  const double u2 = uniform_open(splitmix(key ^ splitmix(2 * k + 1)));
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

std::uint64_t angle_bits(double a) { return std::bit_cast<std::uint64_t>(a); }

std::uint64_t pair_stream(const SimulationConfig& cfg) {
  return splitmix(0x70616972ULL ^ splitmix(angle_bits(cfg.homodyne_angle_c)) ^
                  (splitmix(angle_bits(cfg.homodyne_angle_d)) << 1));
}

std::uint64_t vacuum_stream(const SimulationConfig& cfg) {
  return splitmix(0x76616375756dULL ^ splitmix(angle_bits(cfg.homodyne_angle_c)));
}

struct Grid {
  std::size_t n = 0;  // record length
  std::size_t m = 0;  // transform length
  std::vector<double> aa_power;  // |AA|^2 / kappa per rfft bin, DC and Nyquist zeroed
};

Grid make_grid(const SimulationConfig& cfg) {
  Grid g;
  g.n = cfg.sample_count();
  g.m = fft::next_pow2(g.n);
  const auto taps = dsp::antialias_lowpass(cfg.sample_rate, cfg.antialias_cutoff);
  if (taps.size() > g.m) throw InvalidArgument("record shorter than the anti-alias filter");
  fft::RealForward fwd(g.m);
  auto in = fwd.input();
  std::fill(in.begin(), in.end(), 0.0);
  // Centre the symmetric taps on index 0 (circularly) so the response is real.
  const std::size_t half = taps.size() / 2;
  for (std::size_t i = 0; i < taps.size(); ++i) in[(i + g.m - half) % g.m] = taps[i];
  const auto spec = fwd.execute();
  const std::size_t bins = g.m / 2 + 1;
  g.aa_power.assign(bins, 0.0);
  double total = 0.0;
  for (std::size_t k = 1; k + 1 < bins; ++k) {
    g.aa_power[k] = std::norm(spec[k]);
    total += 2.0 * g.aa_power[k];
  }
  const double kappa = total / static_cast<double>(g.m);
  for (auto& p : g.aa_power) p /= kappa;
  return g;
}

struct Projection {
  double s_cc, s_dd, s_cd;
};

Projection project(const gaussian::TwoModeCovariance& cov, double theta_c, double theta_d) {
  const Eigen::Vector2d pc(std::cos(theta_c), std::sin(theta_c));
  const Eigen::Vector2d pd(std::cos(theta_d), std::sin(theta_d));
  return {pc.dot(cov.local_block(Mode::c) * pc), pd.dot(cov.local_block(Mode::d) * pd),
          pc.dot(cov.cross_block() * pd)};
}

std::vector<double> inverse(std::vector<fft::cplx>& bins, std::size_t m, std::size_t n) {
  fft::RealInverse inv(m);
  auto in = inv.input();
  std::copy(bins.begin(), bins.end(), in.begin());
  std::vector<fft::cplx>().swap(bins);
  const auto out = inv.execute();
  const double norm = 1.0 / std::sqrt(static_cast<double>(m));
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = out[i] * norm;
  return x;
}

}  // namespace

double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  const auto [a, b] = normal_pair(stream_key(seed, stream), counter / 2);
  return counter % 2 == 0 ? a : b;
}

gaussian::TwoModeCovariance detected_covariance(const SimulationConfig& cfg,
                                                const SpectralModel& source,
                                                const EITWindow& window, double f) {
  auto cov = gaussian::beamsplit(source.at(f), gaussian::SingleModeCov::vacuum(),
                                 cfg.split_reflectivity, cfg.split_phase);
  cov = gaussian::apply_loss(cov, Mode::c, power_transmission(window, f));
  cov = gaussian::add_noise(cov, Mode::c, excess_noise_at(window, f));
  cov = gaussian::apply_loss(cov, Mode::c, (1.0 - cfg.passive_loss) * cfg.visibility_c * cfg.visibility_c);
  cov = gaussian::apply_loss(cov, Mode::d, (1.0 - cfg.passive_loss) * cfg.visibility_d * cfg.visibility_d);
  return cov;
}

gaussian::TwoModeCovariance band_covariance(const SimulationConfig& cfg,
                                            const SpectralModel& source,
                                            const EITWindow& window, double f0, double cutoff) {
  const auto taps = dsp::downmix_lowpass(cfg.sample_rate, cutoff);
  const std::size_t p = fft::next_pow2(std::max<std::size_t>(
      taps.size(), static_cast<std::size_t>(cfg.sample_rate / (cutoff / 256.0))));
  fft::RealForward fwd(p);
  auto in = fwd.input();
  std::fill(in.begin(), in.end(), 0.0);
  std::copy(taps.begin(), taps.end(), in.begin());
  const auto spec = fwd.execute();
  const double df = cfg.sample_rate / static_cast<double>(p);
  const auto kmax = static_cast<std::size_t>(std::ceil(1.2 * cutoff / df));
  Eigen::Matrix4d acc = Eigen::Matrix4d::Zero();
  double wsum = 0.0;
  for (std::size_t k = 0; k <= kmax && k < spec.size(); ++k) {
    const double w = std::norm(spec[k]);
    for (int sign : {+1, -1}) {
      if (k == 0 && sign < 0) continue;
      const double f = f0 + sign * static_cast<double>(k) * df;
      acc += w * detected_covariance(cfg, source, window, std::abs(f)).matrix();
      wsum += w;
    }
  }
  return gaussian::TwoModeCovariance(acc / wsum);
}

std::vector<double> vacuum_density(const SimulationConfig& cfg, std::span<const double> freqs) {
  cfg.validate();
  const Grid g = make_grid(cfg);
  const double df = cfg.sample_rate / static_cast<double>(g.m);
  std::vector<double> out;
  out.reserve(freqs.size());
  for (double f : freqs) {
    const auto k = static_cast<std::size_t>(std::llround(std::abs(f) / df));
    out.push_back(k < g.aa_power.size() ? 2.0 * g.aa_power[k] / cfg.sample_rate : 0.0);
  }
  return out;
}

RecordPair synthesize_pair(const SimulationConfig& cfg, const SpectralModel& source,
                           const EITWindow& window) {
  cfg.validate();
  window.validate();
  if (quadrature_of_angle(cfg.homodyne_angle_c) != quadrature_of_angle(cfg.homodyne_angle_d))
    throw InvalidArgument("both detectors must measure the same quadrature label");

  const Grid g = make_grid(cfg);
  const std::size_t bins = g.m / 2 + 1;
  const double df = cfg.sample_rate / static_cast<double>(g.m);
  const std::uint64_t key = stream_key(cfg.rng_seed, pair_stream(cfg));
  std::vector<fft::cplx> xc(bins), xd(bins);

  detail::parallel_for(bins, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      if (g.aa_power[k] == 0.0) {
        xc[k] = xd[k] = 0.0;
        continue;
      }
      const double f = static_cast<double>(k) * df;
      const Projection s =
          project(detected_covariance(cfg, source, window, f), cfg.homodyne_angle_c, cfg.homodyne_angle_d);
      const fft::cplx s_cd = s.s_cd * std::polar(1.0, -2.0 * std::numbers::pi * f * window.group_delay);
      const double l11 = std::sqrt(s.s_cc);
      const double l22 = std::sqrt(std::max(0.0, s.s_dd - std::norm(s_cd) / s.s_cc));
      const auto [a1, b1] = normal_pair(key, 2 * k);
      const auto [a2, b2] = normal_pair(key, 2 * k + 1);
      const fft::cplx w1(a1 * std::numbers::sqrt2 / 2, b1 * std::numbers::sqrt2 / 2);
      const fft::cplx w2(a2 * std::numbers::sqrt2 / 2, b2 * std::numbers::sqrt2 / 2);
      const double amp = std::sqrt(g.aa_power[k]);
      xc[k] = amp * l11 * w1;
      xd[k] = amp * (std::conj(s_cd) / l11 * w1 + l22 * w2);
    }
  });

  RecordPair out;
  out.c.samples = inverse(xc, g.m, g.n);
  out.d.samples = inverse(xd, g.m, g.n);
  for (auto* r : {&out.c, &out.d}) {
    r->sample_rate = cfg.sample_rate;
    r->quadrature = cfg.quadrature();
    r->seed = cfg.rng_seed;
  }
  out.c.channel = Channel::c;
  out.d.channel = Channel::d;
  return out;
}

TimeSeriesRecord vacuum_reference(const SimulationConfig& cfg) {
  cfg.validate();
  const Grid g = make_grid(cfg);
  const std::size_t bins = g.m / 2 + 1;
  const std::uint64_t key = stream_key(cfg.rng_seed, vacuum_stream(cfg));
  std::vector<fft::cplx> x(bins);
  detail::parallel_for(bins, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const auto [a, b] = normal_pair(key, k);
      x[k] = std::sqrt(0.5 * g.aa_power[k]) * fft::cplx(a, b);
    }
  });
  TimeSeriesRecord r;
  r.samples = inverse(x, g.m, g.n);
  r.sample_rate = cfg.sample_rate;
  r.quadrature = cfg.quadrature();
  r.channel = Channel::vacuum_ref;
  r.seed = cfg.rng_seed;
  return r;
}

}  // namespace cvdelay
