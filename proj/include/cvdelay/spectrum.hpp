#pragma once

// Quadrature noise spectra of a single beam as a function of sideband
// frequency: an OPO source followed by a chain of channels.

#include <variant>
#include <vector>

#include "cvdelay/eit.hpp"
#include "cvdelay/gaussian.hpp"

namespace cvdelay {

struct SourceParams {
  double squeezing_db = 0.0;
  double antisqueezing_db = 0.0;
  double cavity_rolloff_hz = 6e6;   // Lorentzian half width of the OPO response
  double low_freq_corner_hz = 200;  // below this the squeezing ramps back to QNL

  void validate() const;
};

struct LossStage {
  double efficiency = 1.0;
};

class SpectralModel {
 public:
  using Stage = std::variant<EITWindow, LossStage>;

  SpectralModel();  // vacuum
  static SpectralModel vacuum() { return {}; }
  static SpectralModel squeezed_source(const SourceParams& p);
  // Levels quoted after a detection chain of the given efficiency; the source
  // is de-embedded so that the same chain reproduces them.
  static SpectralModel from_detected_levels(const SourceParams& detected, double efficiency);

  double v_plus(double f) const;
  double v_minus(double f) const;
  double variance(gaussian::Quadrature q, double f) const;
  // Source spectrum only, before any stage.
  gaussian::SingleModeCov source_at(double f) const;
  gaussian::SingleModeCov at(double f) const;

  SpectralModel through(const EITWindow& w) const;
  SpectralModel with_efficiency(double eta) const;

  const SourceParams& source() const { return source_; }
  const std::vector<Stage>& stages() const { return stages_; }
  // Roll-off and ramp factor in [0, 1] that scales (V0 - 1).
  double source_shape(double f) const;

 private:
  double apply_stages(double v, double f) const;

  SourceParams source_;
  double v0_plus_ = 1.0;
  double v0_minus_ = 1.0;
  std::vector<Stage> stages_;
};

}  // namespace cvdelay
