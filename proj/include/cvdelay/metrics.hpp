#pragma once

// Empirical entanglement analysis on QNL-normalized sample pairs.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cvdelay/dsp.hpp"
#include "cvdelay/gaussian.hpp"

namespace cvdelay::metrics {

using gaussian::Quadrature;
using gaussian::TwoModeCovariance;

inline constexpr std::size_t kMinScatterPairs = 1000;

struct ScatterSet {
  std::vector<double> x_c;
  std::vector<double> x_d;
  Quadrature quadrature = Quadrature::plus;

  std::size_t size() const { return x_c.size(); }
  ScatterSet slice(std::size_t begin, std::size_t count) const;
  void validate(std::size_t min_pairs = kMinScatterPairs) const;

  // In-phase components of two aligned baseband records. parity flips the sign
  // of x_d, for data taken with the opposite error-signal slope.
  static ScatterSet from_baseband(const dsp::BasebandRecord& c, const dsp::BasebandRecord& d,
                                  bool parity = false);
};

// Centered sample moments of a scatter set (divisor n).
struct SampleMoments {
  double mean_c = 0.0, mean_d = 0.0;
  double v_c = 0.0, v_d = 0.0, cov = 0.0;
  Eigen::Matrix2d block() const;
};
SampleMoments sample_moments(const ScatterSet& s);

struct EllipseCurve {
  std::vector<double> theta;
  std::vector<double> sigma;
  double min_value = 0.0;
  double min_angle = 0.0;
};

std::vector<double> default_theta_grid(std::size_t points = 180);
EllipseCurve empirical_sigma_theta(const ScatterSet& s, std::span<const double> theta_grid);

struct EmpiricalCovariance {
  TwoModeCovariance cov;
  bool cross_blocks_zeroed = true;  // +/- cross moments not jointly measured
};
EmpiricalCovariance empirical_covariance(const ScatterSet& s_plus, const ScatterSet& s_minus);

TwoModeCovariance standard_form_II(const TwoModeCovariance& cov);

// Angle of the ellipse minimum measured from its lossless orientation
// (-pi/4 for anti-correlated pairs, +pi/4 for correlated), wrapped to (-pi/2, pi/2].
double tilt_from_diagonal(const Eigen::Matrix2d& block);

struct ReportOptions {
  std::size_t theta_points = 180;
  std::size_t bootstrap_segments = 20;
};

struct Uncertainties {
  double epr_cd = 0.0, epr_dc = 0.0, duan_i = 0.0, duan_i_standard_form = 0.0;
  double rotation_offset = 0.0;
};

struct EntanglementReport {
  double epr_cd = 0.0;
  double epr_dc = 0.0;
  double duan_i = 0.0;                  // ellipse-minima route
  double duan_i_standard_form = 0.0;    // standard-form-II route
  bool standard_form_degenerate = false;
  double standard_form_shift = 0.0;     // isotropic noise added to reach the physical set
  EllipseCurve ellipse_plus, ellipse_minus, ellipse_qnl;
  double rotation_offset = 0.0;  // mean of the two tilts
  double rotation_offset_plus = 0.0, rotation_offset_minus = 0.0;
  Uncertainties uncertainties;
  bool cross_blocks_zeroed = true;
  double qnl_variance = 1.0;  // mean variance of the reference set
  std::size_t samples = 0;
  TwoModeCovariance covariance;

  // Filled in by the pipeline when a delay was estimated.
  std::optional<double> tau_hat;
  std::optional<double> g_peak;
  std::optional<Quadrature> delay_quadrature;

  std::string to_text() const;
};

EntanglementReport full_report(const ScatterSet& s_plus, const ScatterSet& s_minus,
                               const ScatterSet& qnl_ref, const ReportOptions& opt = {});

}  // namespace cvdelay::metrics
