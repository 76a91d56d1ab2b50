#include "cvdelay/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "cvdelay/error.hpp"
#include "cvdelay/kernels.hpp"

namespace cvdelay::metrics {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_half_pi(double a) {
  while (a > kPi / 2) a -= kPi;
  while (a <= -kPi / 2) a += kPi;
  return a;
}

struct PointMetrics {
  double epr_cd, epr_dc, duan_i, duan_sf, rot, sf_shift;
  bool sf_ok;
};

PointMetrics point_metrics(const ScatterSet& p, const ScatterSet& m) {
  const Eigen::Matrix2d bp = sample_moments(p).block();
  const Eigen::Matrix2d bm = sample_moments(m).block();
  PointMetrics r{};
  r.epr_cd = std::pow(gaussian::sigma_theta(bp, 0.0) * gaussian::sigma_theta(bm, 0.0), 2);
  r.epr_dc = std::pow(gaussian::sigma_theta(bp, kPi / 2) * gaussian::sigma_theta(bm, kPi / 2), 2);
  r.duan_i = gaussian::ellipse_minimum(bp).variance * gaussian::ellipse_minimum(bm).variance;
  r.rot = 0.5 * (tilt_from_diagonal(bp) + tilt_from_diagonal(bm));
  try {
    // Sample covariances of near-minimum-uncertainty states can dip just below
    // the physical boundary; lift them by the deficit before reducing.
    TwoModeCovariance cov = empirical_covariance(p, m).cov;
    const auto nu = cov.symplectic_eigenvalues();
    r.sf_shift = std::max(0.0, 1.0 + 1e-9 - std::min(nu[0], nu[1]));
    if (r.sf_shift > 0.0) cov = TwoModeCovariance(cov.matrix() + r.sf_shift * Eigen::Matrix4d::Identity());
    const auto d = gaussian::duan_inseparability(cov);
    r.duan_sf = d.value;
    r.sf_ok = true;
  } catch (const Error&) {
    r.duan_sf = std::numeric_limits<double>::quiet_NaN();
    r.sf_ok = false;
  }
  return r;
}

double standard_error(const std::vector<double>& v) {
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

ScatterSet ScatterSet::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > size()) throw InvalidArgument("scatter slice out of range");
  ScatterSet s;
  s.quadrature = quadrature;
  s.x_c.assign(x_c.begin() + begin, x_c.begin() + begin + count);
  s.x_d.assign(x_d.begin() + begin, x_d.begin() + begin + count);
  return s;
}

void ScatterSet::validate(std::size_t min_pairs) const {
  if (x_c.size() != x_d.size()) throw InvalidArgument("scatter set columns differ in length");
  if (x_c.size() < min_pairs)
    throw InvalidArgument("insufficient samples: " + std::to_string(x_c.size()) + " pairs, need " +
                          std::to_string(min_pairs));
}

ScatterSet ScatterSet::from_baseband(const dsp::BasebandRecord& c, const dsp::BasebandRecord& d,
                                     bool parity) {
  if (c.sample_rate != d.sample_rate || std::abs(c.start_time - d.start_time) > 1e-12)
    throw InvalidArgument("scatter pairs need records on a common clock");
  if (c.quadrature != d.quadrature) throw InvalidArgument("scatter pairs need one quadrature label");
  const std::size_t n = std::min(c.size(), d.size());
  ScatterSet s;
  s.quadrature = c.quadrature;
  s.x_c.assign(c.in_phase.begin(), c.in_phase.begin() + n);
  s.x_d.assign(d.in_phase.begin(), d.in_phase.begin() + n);
  if (parity) kernels::scale(s.x_d, -1.0);
  return s;
}

Eigen::Matrix2d SampleMoments::block() const {
  Eigen::Matrix2d b;
  b << v_c, cov, cov, v_d;
  return b;
}

SampleMoments sample_moments(const ScatterSet& s) {
  if (s.x_c.size() != s.x_d.size() || s.size() < 2)
    throw InvalidArgument("insufficient samples for moments");
  SampleMoments m;
  m.mean_c = kernels::mean(s.x_c);
  m.mean_d = kernels::mean(s.x_d);
  const auto pm = kernels::pair_moments(s.x_c, s.x_d, m.mean_c, m.mean_d);
  const double n = static_cast<double>(s.size());
  m.v_c = pm.xx / n;
  m.v_d = pm.yy / n;
  m.cov = pm.xy / n;
  return m;
}

std::vector<double> default_theta_grid(std::size_t points) {
  if (points < 3) throw InvalidArgument("theta grid needs at least 3 points");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) g[i] = kPi * static_cast<double>(i) / static_cast<double>(points);
  return g;
}

EllipseCurve empirical_sigma_theta(const ScatterSet& s, std::span<const double> theta_grid) {
  s.validate();
  if (theta_grid.size() < 3) throw InvalidArgument("theta grid needs at least 3 points");
  const SampleMoments m = sample_moments(s);
  const double scale = std::max(m.v_c, m.v_d);
  const double level = std::max({1.0, m.mean_c * m.mean_c, m.mean_d * m.mean_d});
  if (!(scale > 1e-24 * level)) throw DegenerateError("degenerate scatter data: zero variance");
  const Eigen::Matrix2d b = m.block();
  if (b.determinant() < 0.0 && std::abs(b.determinant()) > 1e-12 * scale * scale)
    throw DegenerateError("sample covariance is not positive semidefinite");

  EllipseCurve out;
  out.theta.assign(theta_grid.begin(), theta_grid.end());
  out.sigma.resize(theta_grid.size());
  for (std::size_t i = 0; i < theta_grid.size(); ++i) out.sigma[i] = gaussian::sigma_theta(b, theta_grid[i]);

  const std::size_t n = theta_grid.size();
  std::size_t i = 0;
  for (std::size_t k = 1; k < n; ++k)
    if (out.sigma[k] < out.sigma[i]) i = k;
  // Neighbours wrap around the period pi.
  const double t0 = i == 0 ? theta_grid[n - 1] - kPi : theta_grid[i - 1];
  const double s0 = out.sigma[i == 0 ? n - 1 : i - 1];
  const double t2 = i + 1 == n ? theta_grid[0] + kPi : theta_grid[i + 1];
  const double s2 = out.sigma[i + 1 == n ? 0 : i + 1];
  const double t1 = theta_grid[i], s1 = out.sigma[i];
  const double d0 = t0 - t1, d2 = t2 - t1;
  const double denom = d0 * d2 * (d0 - d2);
  double angle = t1, value = s1;
  if (denom != 0.0) {
    // Parabola through (d0, s0), (0, s1), (d2, s2).
    const double a = (d2 * (s0 - s1) - d0 * (s2 - s1)) / denom;
    const double bb = (d0 * d0 * (s2 - s1) - d2 * d2 * (s0 - s1)) / denom;
    if (a > 0.0) {
      const double x = std::clamp(-bb / (2.0 * a), std::min(d0, d2), std::max(d0, d2));
      angle = t1 + x;
      value = s1 + bb * x + a * x * x;
    }
  }
  out.min_angle = wrap_half_pi(angle);
  out.min_value = std::max(0.0, value);
  return out;
}

EmpiricalCovariance empirical_covariance(const ScatterSet& s_plus, const ScatterSet& s_minus) {
  if (s_plus.size() < 2 || s_minus.size() < 2) throw InvalidArgument("insufficient samples for covariance");
  if (s_plus.quadrature != Quadrature::plus || s_minus.quadrature != Quadrature::minus)
    throw InvalidArgument("empirical_covariance expects a plus set and a minus set");
  const SampleMoments p = sample_moments(s_plus);
  const SampleMoments m = sample_moments(s_minus);
  Eigen::Matrix4d v = Eigen::Matrix4d::Zero();
  v(0, 0) = p.v_c;
  v(2, 2) = p.v_d;
  v(0, 2) = v(2, 0) = p.cov;
  v(1, 1) = m.v_c;
  v(3, 3) = m.v_d;
  v(1, 3) = v(3, 1) = m.cov;
  if (!(v.diagonal().minCoeff() > 0.0)) throw DegenerateError("degenerate scatter data: zero variance");
  return {TwoModeCovariance(v), true};
}

TwoModeCovariance standard_form_II(const TwoModeCovariance& cov) {
  return gaussian::reduce_to_standard_form(cov).cov;
}

double tilt_from_diagonal(const Eigen::Matrix2d& block) {
  const double ref = block(0, 1) < 0.0 ? -kPi / 4 : kPi / 4;
  return wrap_half_pi(gaussian::ellipse_minimum(block).angle - ref);
}

EntanglementReport full_report(const ScatterSet& s_plus, const ScatterSet& s_minus,
                               const ScatterSet& qnl_ref, const ReportOptions& opt) {
  s_plus.validate();
  s_minus.validate();
  qnl_ref.validate();
  if (opt.bootstrap_segments < 2) throw InvalidArgument("bootstrap needs at least 2 segments");

  EntanglementReport r;
  const auto grid = default_theta_grid(opt.theta_points);
  r.ellipse_plus = empirical_sigma_theta(s_plus, grid);
  r.ellipse_minus = empirical_sigma_theta(s_minus, grid);
  r.ellipse_qnl = empirical_sigma_theta(qnl_ref, grid);
  const SampleMoments q = sample_moments(qnl_ref);
  r.qnl_variance = 0.5 * (q.v_c + q.v_d);

  const PointMetrics pm = point_metrics(s_plus, s_minus);
  r.epr_cd = pm.epr_cd;
  r.epr_dc = pm.epr_dc;
  r.duan_i = pm.duan_i;
  r.duan_i_standard_form = pm.duan_sf;
  r.standard_form_degenerate = !pm.sf_ok;
  r.standard_form_shift = pm.sf_shift;
  r.rotation_offset = pm.rot;
  r.rotation_offset_plus = tilt_from_diagonal(sample_moments(s_plus).block());
  r.rotation_offset_minus = tilt_from_diagonal(sample_moments(s_minus).block());
  const auto ec = empirical_covariance(s_plus, s_minus);
  r.covariance = ec.cov;
  r.cross_blocks_zeroed = ec.cross_blocks_zeroed;
  r.samples = std::min(s_plus.size(), s_minus.size());

  const std::size_t k = opt.bootstrap_segments;
  const std::size_t seg_p = s_plus.size() / k, seg_m = s_minus.size() / k;
  if (seg_p < 2 || seg_m < 2) throw InvalidArgument("insufficient samples for bootstrap segments");
  std::vector<double> e1, e2, d1, d2, ro;
  for (std::size_t i = 0; i < k; ++i) {
    const PointMetrics s = point_metrics(s_plus.slice(i * seg_p, seg_p), s_minus.slice(i * seg_m, seg_m));
    e1.push_back(s.epr_cd);
    e2.push_back(s.epr_dc);
    d1.push_back(s.duan_i);
    if (s.sf_ok) d2.push_back(s.duan_sf);
    ro.push_back(s.rot);
  }
  r.uncertainties = {standard_error(e1), standard_error(e2), standard_error(d1), standard_error(d2),
                     standard_error(ro)};
  return r;
}

std::string EntanglementReport::to_text() const {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "epr_cd: " << epr_cd << '\n'
     << "epr_cd_stderr: " << uncertainties.epr_cd << '\n'
     << "epr_dc: " << epr_dc << '\n'
     << "epr_dc_stderr: " << uncertainties.epr_dc << '\n'
     << "duan_i: " << duan_i << '\n'
     << "duan_i_stderr: " << uncertainties.duan_i << '\n'
     << "duan_i_standard_form: " << duan_i_standard_form << '\n'
     << "duan_i_standard_form_stderr: " << uncertainties.duan_i_standard_form << '\n'
     << "standard_form_degenerate: " << (standard_form_degenerate ? "true" : "false") << '\n'
     << "standard_form_shift: " << standard_form_shift << '\n'
     << "rotation_offset_rad: " << rotation_offset << '\n'
     << "rotation_offset_stderr: " << uncertainties.rotation_offset << '\n'
     << "rotation_offset_plus_rad: " << rotation_offset_plus << '\n'
     << "rotation_offset_minus_rad: " << rotation_offset_minus << '\n'
     << "ellipse_plus_min: " << ellipse_plus.min_value << '\n'
     << "ellipse_plus_min_angle_rad: " << ellipse_plus.min_angle << '\n'
     << "ellipse_minus_min: " << ellipse_minus.min_value << '\n'
     << "ellipse_minus_min_angle_rad: " << ellipse_minus.min_angle << '\n'
     << "v_plus_c_given_d: " << std::pow(gaussian::sigma_theta(covariance, 0.0, Quadrature::plus), 2) << '\n'
     << "v_minus_c_given_d: " << std::pow(gaussian::sigma_theta(covariance, 0.0, Quadrature::minus), 2) << '\n'
     << "v_plus_d_given_c: " << std::pow(gaussian::sigma_theta(covariance, kPi / 2, Quadrature::plus), 2) << '\n'
     << "v_minus_d_given_c: " << std::pow(gaussian::sigma_theta(covariance, kPi / 2, Quadrature::minus), 2) << '\n'
     << "qnl_variance: " << qnl_variance << '\n'
     << "cross_blocks_zeroed: " << (cross_blocks_zeroed ? "true" : "false") << '\n'
     << "samples: " << samples << '\n';
  if (tau_hat) os << "tau_hat_s: " << *tau_hat << '\n';
  if (g_peak) os << "g_peak: " << *g_peak << '\n';
  if (delay_quadrature) os << "delay_quadrature: " << gaussian::to_string(*delay_quadrature) << '\n';
  return os.str();
}

}  // namespace cvdelay::metrics
