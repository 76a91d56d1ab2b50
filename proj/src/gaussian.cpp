#include "cvdelay/gaussian.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include "cvdelay/error.hpp"

namespace cvdelay::gaussian {

namespace {

constexpr int offset(Mode m) { return m == Mode::c ? 0 : 2; }
constexpr int index(Quadrature q) { return q == Quadrature::plus ? 0 : 1; }

Eigen::Matrix2d rotation(double angle) {
  Eigen::Matrix2d r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

void check_fraction(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument(std::string(what) + " must lie in [0, 1]");
}

}  // namespace

std::string to_string(Quadrature q) { return q == Quadrature::plus ? "plus" : "minus"; }

Quadrature parse_quadrature(const std::string& s) {
  if (s == "plus" || s == "+" || s == "amplitude") return Quadrature::plus;
  if (s == "minus" || s == "-" || s == "phase") return Quadrature::minus;
  throw InvalidArgument("unknown quadrature label: " + s);
}

bool SingleModeCov::is_physical(double tol) const {
  return v_plus > 0.0 && v_minus > 0.0 && uncertainty_product() >= 1.0 - tol;
}

Eigen::Matrix2d SingleModeCov::matrix() const {
  Eigen::Matrix2d m;
  m << v_plus, cross, cross, v_minus;
  return m;
}

TwoModeCovariance::TwoModeCovariance() : m_(Eigen::Matrix4d::Identity()) {}

TwoModeCovariance::TwoModeCovariance(const Eigen::Matrix4d& m, double symmetry_tol) : m_(m) {
  if (!m.allFinite()) throw InvalidArgument("covariance has non-finite entries");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > symmetry_tol * scale)
    throw InvalidArgument("covariance is not symmetric");
  for (int i = 0; i < 4; ++i)
    if (!(m(i, i) > 0.0)) throw InvalidArgument("covariance diagonal must be positive");
  m_ = 0.5 * (m + m.transpose());
}

TwoModeCovariance TwoModeCovariance::product(const SingleModeCov& c, const SingleModeCov& d) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m.block<2, 2>(0, 0) = c.matrix();
  m.block<2, 2>(2, 2) = d.matrix();
  return TwoModeCovariance(m);
}

Eigen::Matrix2d TwoModeCovariance::quadrature_block(Quadrature q) const {
  const int i = index(q);
  Eigen::Matrix2d b;
  b << m_(i, i), m_(i, i + 2), m_(i + 2, i), m_(i + 2, i + 2);
  return b;
}

Eigen::Matrix2d TwoModeCovariance::local_block(Mode m) const {
  const int o = offset(m);
  return m_.block<2, 2>(o, o);
}

Eigen::Matrix2d TwoModeCovariance::cross_block() const { return m_.block<2, 2>(0, 2); }

std::array<double, 2> TwoModeCovariance::symplectic_eigenvalues() const {
  const double delta = local_block(Mode::c).determinant() + local_block(Mode::d).determinant() +
                       2.0 * cross_block().determinant();
  const double disc = std::sqrt(std::max(0.0, delta * delta - 4.0 * m_.determinant()));
  const double lo = std::sqrt(std::max(0.0, 0.5 * (delta - disc)));
  const double hi = std::sqrt(std::max(0.0, 0.5 * (delta + disc)));
  return {lo, hi};
}

bool TwoModeCovariance::is_physical(double tol) const {
  Eigen::Matrix4cd h = m_.cast<std::complex<double>>();
  const std::complex<double> i1(0.0, 1.0);
  for (int k = 0; k < 4; k += 2) {
    h(k, k + 1) += i1;
    h(k + 1, k) -= i1;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol * std::max(1.0, m_.trace());
}

std::string TwoModeCovariance::to_text() const {
  std::ostringstream os;
  os << *this;
  return os.str();
}

TwoModeCovariance TwoModeCovariance::from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Eigen::Matrix4d m;
  int count = 0;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double v;
    while (ls >> v) {
      if (count >= 16) throw InvalidArgument("covariance text has more than 16 entries");
      m(count / 4, count % 4) = v;
      ++count;
    }
    if (!ls.eof()) throw InvalidArgument("covariance text has a non-numeric token");
  }
  if (count != 16) throw InvalidArgument("covariance text needs 16 entries, got " +
                                         std::to_string(count));
  return TwoModeCovariance(m);
}

std::ostream& operator<<(std::ostream& os, const TwoModeCovariance& cov) {
  std::ostringstream tmp;
  tmp << std::setprecision(17);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) tmp << (j ? " " : "") << cov(i, j);
    tmp << '\n';
  }
  return os << tmp.str();
}

SingleModeCov squeezed_vacuum(double squeezing_db, double antisqueezing_db) {
  if (!(squeezing_db >= 0.0) || !(antisqueezing_db >= 0.0))
    throw InvalidArgument("squeezing levels are magnitudes and must be >= 0 dB");
  return {std::pow(10.0, -squeezing_db / 10.0), std::pow(10.0, antisqueezing_db / 10.0), 0.0};
}

TwoModeCovariance beamsplit(const SingleModeCov& a, const SingleModeCov& b, double reflectivity,
                            double relative_phase) {
  check_fraction(reflectivity, "reflectivity");
  if (!(a.v_plus > 0 && a.v_minus > 0 && b.v_plus > 0 && b.v_minus > 0))
    throw InvalidArgument("input variances must be positive");
  const double t = std::sqrt(1.0 - reflectivity);
  const double r = std::sqrt(reflectivity);
  const Eigen::Matrix2d rot = rotation(relative_phase);
  Eigen::Matrix4d s;
  s.block<2, 2>(0, 0) = t * Eigen::Matrix2d::Identity();
  s.block<2, 2>(0, 2) = r * rot;
  s.block<2, 2>(2, 0) = r * Eigen::Matrix2d::Identity();
  s.block<2, 2>(2, 2) = -t * rot;
  const Eigen::Matrix4d in = TwoModeCovariance::product(a, b).matrix();
  return TwoModeCovariance(s * in * s.transpose());
}

TwoModeCovariance apply_loss(const TwoModeCovariance& cov, Mode mode, double efficiency) {
  check_fraction(efficiency, "efficiency");
  const int o = offset(mode);
  Eigen::Matrix4d s = Eigen::Matrix4d::Identity();
  s(o, o) = s(o + 1, o + 1) = std::sqrt(efficiency);
  Eigen::Matrix4d out = s * cov.matrix() * s;
  out(o, o) += 1.0 - efficiency;
  out(o + 1, o + 1) += 1.0 - efficiency;
  return TwoModeCovariance(out);
}

TwoModeCovariance add_noise(const TwoModeCovariance& cov, Mode mode, double variance) {
  if (!(variance >= 0.0)) throw InvalidArgument("added noise variance must be >= 0");
  const int o = offset(mode);
  Eigen::Matrix4d out = cov.matrix();
  out(o, o) += variance;
  out(o + 1, o + 1) += variance;
  return TwoModeCovariance(out);
}

TwoModeCovariance rotate_phase(const TwoModeCovariance& cov, Mode mode, double angle) {
  const int o = offset(mode);
  Eigen::Matrix4d s = Eigen::Matrix4d::Identity();
  s.block<2, 2>(o, o) = rotation(angle);
  return TwoModeCovariance(s * cov.matrix() * s.transpose());
}

double conditional_variance(const TwoModeCovariance& cov, Quadrature q, Inference dir) {
  const Eigen::Matrix2d b = cov.quadrature_block(q);
  const bool c_given_d = dir == Inference::c_given_d;
  const double target = c_given_d ? b(0, 0) : b(1, 1);
  const double cond = c_given_d ? b(1, 1) : b(0, 0);
  if (!(cond > 0.0)) throw DegenerateError("conditioning variance is zero");
  return std::max(0.0, target - b(0, 1) * b(0, 1) / cond);
}

double sigma_theta(const Eigen::Matrix2d& block, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double vc = block(0, 0), vd = block(1, 1), x = block(0, 1);
  const double v = c * c * vc - 2.0 * c * s * x + s * s * vd;
  const double v_perp = s * s * vc + 2.0 * c * s * x + c * c * vd;
  const double cov = c * s * (vd - vc) + (s * s - c * c) * x;
  const double scale = std::max(vc, vd);
  if (!(scale > 0.0)) throw DegenerateError("conditioning variance is zero");
  // A constant conditioning variable carries no information.
  if (v_perp <= 1e-13 * scale) return std::sqrt(std::max(0.0, v));
  return std::sqrt(std::max(0.0, v - cov * cov / v_perp));
}

double sigma_theta(const TwoModeCovariance& cov, double theta, Quadrature q) {
  return sigma_theta(cov.quadrature_block(q), theta);
}

EllipseMinimum ellipse_minimum(const Eigen::Matrix2d& block) {
  const double half_tr = 0.5 * (block(0, 0) + block(1, 1));
  const double half_diff = 0.5 * (block(0, 0) - block(1, 1));
  const double x = block(0, 1);
  const double rad = std::hypot(half_diff, x);
  const double lmin = half_tr - rad;
  // Eigenvector of lmin is (cos t, -sin t) with t the minimizing angle.
  double angle = 0.5 * std::atan2(2.0 * x, 2.0 * half_diff);
  angle = -angle + std::numbers::pi / 2.0;
  while (angle > std::numbers::pi / 2.0) angle -= std::numbers::pi;
  while (angle <= -std::numbers::pi / 2.0) angle += std::numbers::pi;
  return {std::max(0.0, lmin), angle};
}

double epr_product(const TwoModeCovariance& cov, Inference dir) {
  return conditional_variance(cov, Quadrature::plus, dir) *
         conditional_variance(cov, Quadrature::minus, dir);
}

CorrelationMatrix correlation_matrix(const TwoModeCovariance& cov) {
  const auto& m = cov.matrix();
  return {m(0, 2), m(0, 3), m(1, 2), m(1, 3)};
}

double duan_from_minima(const TwoModeCovariance& cov) {
  return ellipse_minimum(cov.quadrature_block(Quadrature::plus)).variance *
         ellipse_minimum(cov.quadrature_block(Quadrature::minus)).variance;
}

DuanResult duan_inseparability(const TwoModeCovariance& cov) {
  const StandardFormResult sf = reduce_to_standard_form(cov);
  const auto& m = sf.cov.matrix();
  const double n1 = m(0, 0), n2 = m(1, 1), m1 = m(2, 2), m2 = m(3, 3);
  const double c1 = m(0, 2), c2 = m(1, 3);
  if (std::abs(n1 - 1.0) < 1e-9 || std::abs(m1 - 1.0) < 1e-9) return {1.0, true};
  const double k = std::sqrt((m1 - 1.0) / (n1 - 1.0));
  const double ci_plus = k * n1 + m1 / k - 2.0 * std::abs(c1);
  const double ci_minus = k * n2 + m2 / k - 2.0 * std::abs(c2);
  const double norm = k + 1.0 / k;
  return {ci_plus * ci_minus / (norm * norm), false};
}

}  // namespace cvdelay::gaussian
