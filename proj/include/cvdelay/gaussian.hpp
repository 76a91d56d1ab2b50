#pragma once

// Covariance-matrix algebra for one and two Gaussian modes. Variances are in
// units of the quantum noise limit (vacuum = 1). The two-mode basis is
// (X_c+, X_c-, X_d+, X_d-).

#include <Eigen/Dense>
#include <array>
#include <iosfwd>
#include <string>

namespace cvdelay::gaussian {

enum class Quadrature { plus, minus };
enum class Inference { c_given_d, d_given_c };
enum class Mode { c, d };

std::string to_string(Quadrature q);
Quadrature parse_quadrature(const std::string& s);

struct SingleModeCov {
  double v_plus = 1.0;
  double v_minus = 1.0;
  double cross = 0.0;

  static SingleModeCov vacuum() { return {}; }
  // v_plus * v_minus - cross^2, which is >= 1 for physical states.
  double uncertainty_product() const { return v_plus * v_minus - cross * cross; }
  bool is_physical(double tol = 1e-12) const;
  Eigen::Matrix2d matrix() const;
};

class TwoModeCovariance {
 public:
  TwoModeCovariance();  // vacuum on both modes
  // Validates symmetry (to tol) and positive diagonal; physicality is checked separately.
  explicit TwoModeCovariance(const Eigen::Matrix4d& m, double symmetry_tol = 1e-9);

  static TwoModeCovariance vacuum() { return {}; }
  static TwoModeCovariance product(const SingleModeCov& c, const SingleModeCov& d);

  const Eigen::Matrix4d& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  // 2x2 (c, d) block of one quadrature: [[V_c, C], [C, V_d]].
  Eigen::Matrix2d quadrature_block(Quadrature q) const;
  Eigen::Matrix2d local_block(Mode m) const;
  Eigen::Matrix2d cross_block() const;

  // Both symplectic eigenvalues, ascending.
  std::array<double, 2> symplectic_eigenvalues() const;
  // V + i Omega >= 0.
  bool is_physical(double tol = 1e-9) const;

  std::string to_text() const;
  static TwoModeCovariance from_text(const std::string& text);

  bool operator==(const TwoModeCovariance& o) const { return m_ == o.m_; }

 private:
  Eigen::Matrix4d m_;
};

std::ostream& operator<<(std::ostream& os, const TwoModeCovariance& cov);

SingleModeCov squeezed_vacuum(double squeezing_db, double antisqueezing_db);

// c = sqrt(1-R) a + sqrt(R) e^{i phi} b, d = sqrt(R) a - sqrt(1-R) e^{i phi} b.
TwoModeCovariance beamsplit(const SingleModeCov& a, const SingleModeCov& b, double reflectivity,
                            double relative_phase);

TwoModeCovariance apply_loss(const TwoModeCovariance& cov, Mode mode, double efficiency);
// Phase-insensitive classical noise added to both quadratures of one mode.
TwoModeCovariance add_noise(const TwoModeCovariance& cov, Mode mode, double variance);
// Rotates the quadrature frame of one mode: X+ -> cos X+ - sin X-, X- -> sin X+ + cos X-.
TwoModeCovariance rotate_phase(const TwoModeCovariance& cov, Mode mode, double angle);

double conditional_variance(const TwoModeCovariance& cov, Quadrature q, Inference dir);

// Conditional deviation of X_theta = cos(theta) X_c - sin(theta) X_d given the
// orthogonal projection. sigma(0)^2 = V(c|d), sigma(pi/2)^2 = V(d|c).
double sigma_theta(const TwoModeCovariance& cov, double theta, Quadrature q);
// Same, from a bare 2x2 block [[V_c, C], [C, V_d]].
double sigma_theta(const Eigen::Matrix2d& block, double theta);
// Minimum of sigma_theta^2 over theta (smallest eigenvalue of the block) and where it sits.
struct EllipseMinimum {
  double variance;
  double angle;  // in (-pi/2, pi/2]
};
EllipseMinimum ellipse_minimum(const Eigen::Matrix2d& block);

double epr_product(const TwoModeCovariance& cov, Inference dir);

struct CorrelationMatrix {
  double pp = 0.0;  // C^{++}
  double pm = 0.0;  // C^{+-}: c plus with d minus
  double mp = 0.0;  // C^{-+}
  double mm = 0.0;  // C^{--}
};
CorrelationMatrix correlation_matrix(const TwoModeCovariance& cov);

struct DuanResult {
  double value = 1.0;
  bool degenerate = false;
};
DuanResult duan_inseparability(const TwoModeCovariance& cov);
double duan_from_minima(const TwoModeCovariance& cov);

// Standard form II reduction by local symplectic operations. Throws
// InvalidArgument for non-physical input.
struct StandardFormResult {
  TwoModeCovariance cov;
  // Standard form I parameters n, m, c, c' (local determinants already unit-scaled).
  double n = 1.0, m = 1.0, c = 0.0, c_prime = 0.0;
  // Local squeezings that take form I to form II.
  double r1 = 1.0, r2 = 1.0;
};
StandardFormResult reduce_to_standard_form(const TwoModeCovariance& cov);

}  // namespace cvdelay::gaussian
