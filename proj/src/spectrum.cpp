#include "cvdelay/spectrum.hpp"

#include <cmath>

#include "cvdelay/error.hpp"

namespace cvdelay {

void SourceParams::validate() const {
  if (!(squeezing_db >= 0.0) || !(antisqueezing_db >= 0.0))
    throw InvalidArgument("squeezing levels are magnitudes and must be >= 0 dB");
  if (squeezing_db > antisqueezing_db)
    throw InvalidArgument("squeezing below QNL cannot exceed anti-squeezing above QNL");
  if (!(cavity_rolloff_hz > 0.0)) throw InvalidArgument("cavity_rolloff_hz must be > 0");
  if (!(low_freq_corner_hz >= 0.0)) throw InvalidArgument("low_freq_corner_hz must be >= 0");
}

SpectralModel::SpectralModel() = default;

SpectralModel SpectralModel::squeezed_source(const SourceParams& p) {
  p.validate();
  SpectralModel m;
  m.source_ = p;
  const auto sq = gaussian::squeezed_vacuum(p.squeezing_db, p.antisqueezing_db);
  m.v0_plus_ = sq.v_plus;
  m.v0_minus_ = sq.v_minus;
  return m;
}

SpectralModel SpectralModel::from_detected_levels(const SourceParams& detected, double efficiency) {
  detected.validate();
  if (!(efficiency > 0.0 && efficiency <= 1.0))
    throw InvalidArgument("detection efficiency must lie in (0, 1]");
  const auto sq = gaussian::squeezed_vacuum(detected.squeezing_db, detected.antisqueezing_db);
  const double vp = (sq.v_plus - (1.0 - efficiency)) / efficiency;
  const double vm = (sq.v_minus - (1.0 - efficiency)) / efficiency;
  if (!(vp > 0.0)) throw InvalidArgument("detected squeezing exceeds what the efficiency allows");
  SourceParams src = detected;
  src.squeezing_db = -10.0 * std::log10(vp);
  src.antisqueezing_db = 10.0 * std::log10(vm);
  return squeezed_source(src);
}

double SpectralModel::source_shape(double f) const {
  const double af = std::abs(f);
  const double x = af / source_.cavity_rolloff_hz;
  double shape = 1.0 / (1.0 + x * x);
  if (source_.low_freq_corner_hz > 0.0) {
    const double y = af / source_.low_freq_corner_hz;
    shape *= y * y / (1.0 + y * y);
  }
  return shape;
}

gaussian::SingleModeCov SpectralModel::source_at(double f) const {
  const double g = source_shape(f);
  return {1.0 + (v0_plus_ - 1.0) * g, 1.0 + (v0_minus_ - 1.0) * g, 0.0};
}

double SpectralModel::apply_stages(double v, double f) const {
  for (const auto& st : stages_) {
    if (const auto* w = std::get_if<EITWindow>(&st)) {
      const double t = power_transmission(*w, f);
      v = t * v + (1.0 - t) + excess_noise_at(*w, f);
    } else {
      const double eta = std::get<LossStage>(st).efficiency;
      v = eta * v + (1.0 - eta);
    }
  }
  return v;
}

double SpectralModel::v_plus(double f) const { return apply_stages(source_at(f).v_plus, f); }
double SpectralModel::v_minus(double f) const { return apply_stages(source_at(f).v_minus, f); }

double SpectralModel::variance(gaussian::Quadrature q, double f) const {
  return q == gaussian::Quadrature::plus ? v_plus(f) : v_minus(f);
}

gaussian::SingleModeCov SpectralModel::at(double f) const { return {v_plus(f), v_minus(f), 0.0}; }

SpectralModel SpectralModel::through(const EITWindow& w) const {
  w.validate();
  SpectralModel m = *this;
  m.stages_.emplace_back(w);
  return m;
}

SpectralModel SpectralModel::with_efficiency(double eta) const {
  if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidArgument("efficiency must lie in [0, 1]");
  SpectralModel m = *this;
  m.stages_.emplace_back(LossStage{eta});
  return m;
}

}  // namespace cvdelay
