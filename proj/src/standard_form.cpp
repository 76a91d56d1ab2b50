#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

#include "cvdelay/error.hpp"
#include "cvdelay/gaussian.hpp"

namespace cvdelay::gaussian {

namespace {

constexpr double kDiagTol = 1e-14;

bool is_diagonal(const Eigen::Matrix2d& m) {
  return std::abs(m(0, 1)) <= kDiagTol * m.cwiseAbs().maxCoeff() &&
         std::abs(m(1, 0)) <= kDiagTol * m.cwiseAbs().maxCoeff();
}

// Local symplectic map taking a single-mode block to sqrt(det) * identity.
Eigen::Matrix2d local_williamson(const Eigen::Matrix2d& a) {
  Eigen::Matrix2d rot = Eigen::Matrix2d::Identity();
  double a1 = a(0, 0), a2 = a(1, 1);
  if (!is_diagonal(a)) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(a);
    Eigen::Matrix2d u = es.eigenvectors();
    if (u.determinant() < 0) u.col(1) *= -1.0;
    rot = u.transpose();
    a1 = es.eigenvalues()(0);
    a2 = es.eigenvalues()(1);
  }
  const double s = std::pow(a2 / a1, 0.25);
  return Eigen::Vector2d(s, 1.0 / s).asDiagonal() * rot;
}

// r2 solving (n r1 - 1)(m / r2 - 1) = (n / r1 - 1)(m r2 - 1), positive root.
double solve_r2(double n, double m, double r1) {
  const double a = n * r1 - 1.0;
  const double b = n / r1 - 1.0;
  const double disc = std::sqrt((a - b) * (a - b) + 4.0 * a * b * m * m);
  if (a >= b) return 2.0 * a * m / ((a - b) + disc);
  return (-(a - b) + disc) / (2.0 * b * m);
}

double condition_ii(double n, double m, double c, double cp, double log_r1) {
  const double r1 = std::exp(log_r1);
  const double r2 = solve_r2(n, m, r1);
  const double g = std::sqrt(r1 * r2);
  return std::abs(c) * g - std::abs(cp) / g -
         std::sqrt(std::max(0.0, (n * r1 - 1.0) * (m * r2 - 1.0))) +
         std::sqrt(std::max(0.0, (n / r1 - 1.0) * (m / r2 - 1.0)));
}

}  // namespace

StandardFormResult reduce_to_standard_form(const TwoModeCovariance& cov) {
  if (!cov.is_physical()) throw InvalidArgument("standard form requires a physical covariance");

  Eigen::Matrix4d s = Eigen::Matrix4d::Identity();
  s.block<2, 2>(0, 0) = local_williamson(cov.local_block(Mode::c));
  s.block<2, 2>(2, 2) = local_williamson(cov.local_block(Mode::d));
  Eigen::Matrix4d v = s * cov.matrix() * s.transpose();

  const Eigen::Matrix2d cross = v.block<2, 2>(0, 2);
  if (!is_diagonal(cross)) {
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix2d u = svd.matrixU();
    Eigen::Matrix2d w = svd.matrixV();
    if (u.determinant() < 0) u.col(1) *= -1.0;
    if (w.determinant() < 0) w.col(1) *= -1.0;
    Eigen::Matrix4d rot = Eigen::Matrix4d::Identity();
    rot.block<2, 2>(0, 0) = u.transpose();
    rot.block<2, 2>(2, 2) = w.transpose();
    v = rot * v * rot.transpose();
    v(0, 3) = v(3, 0) = v(1, 2) = v(2, 1) = 0.0;
  }

  StandardFormResult out;
  out.n = std::sqrt(std::max(1.0, v(0, 0) * v(1, 1)));
  out.m = std::sqrt(std::max(1.0, v(2, 2) * v(3, 3)));
  out.c = v(0, 2);
  out.c_prime = v(1, 3);

  const double n = out.n, m = out.m;
  if (n - 1.0 > 1e-12 && m - 1.0 > 1e-12) {
    const double span = std::log(n) * (1.0 - 1e-12);
    double lo = -span, hi = span;
    double flo = condition_ii(n, m, out.c, out.c_prime, lo);
    if (flo == 0.0) {
      hi = lo;
    } else {
      for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = condition_ii(n, m, out.c, out.c_prime, mid);
        if (fmid == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((fmid < 0) == (flo < 0)) {
          lo = mid;
          flo = fmid;
        } else {
          hi = mid;
        }
      }
    }
    out.r1 = std::exp(0.5 * (lo + hi));
    out.r2 = solve_r2(n, m, out.r1);
  }

  Eigen::Matrix4d sq = Eigen::Matrix4d::Zero();
  sq(0, 0) = std::sqrt(out.r1);
  sq(1, 1) = 1.0 / std::sqrt(out.r1);
  sq(2, 2) = std::sqrt(out.r2);
  sq(3, 3) = 1.0 / std::sqrt(out.r2);
  v = sq * v * sq;
  out.cov = TwoModeCovariance(v);
  return out;
}

}  // namespace cvdelay::gaussian
