#pragma once

// Shared helpers for the test suite: random physical states and a Monte Carlo
// sampler that share no code with the library's analytic routines.

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "cvdelay/gaussian.hpp"

namespace testing {

using cvdelay::gaussian::Mode;
using cvdelay::gaussian::SingleModeCov;
using cvdelay::gaussian::TwoModeCovariance;

inline SingleModeCov random_single(std::mt19937_64& rng, bool pure, bool rotated = true) {
  std::uniform_real_distribution<double> sq(-8.0, 8.0), th(0.0, 1.5), ang(0.0, M_PI);
  const double r = std::pow(10.0, sq(rng) / 10.0);
  const double mix = pure ? 1.0 : 1.0 + th(rng);
  const double a = rotated ? ang(rng) : 0.0;
  Eigen::Matrix2d rot;
  rot << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  Eigen::Matrix2d m = rot * Eigen::Vector2d(mix * r, mix / r).asDiagonal() * rot.transpose();
  return {m(0, 0), m(1, 1), m(0, 1)};
}

// Diagonal squeezer pair mixed on a splitter, then optional losses and phase.
inline TwoModeCovariance random_state(std::mt19937_64& rng, bool general = true) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const SingleModeCov a = random_single(rng, u(rng) < 0.5, general);
  const SingleModeCov b = random_single(rng, u(rng) < 0.5, general);
  auto cov = cvdelay::gaussian::beamsplit(a, b, 0.05 + 0.9 * u(rng), general ? 2 * M_PI * u(rng) : 0.0);
  cov = cvdelay::gaussian::apply_loss(cov, Mode::c, 0.2 + 0.8 * u(rng));
  cov = cvdelay::gaussian::apply_loss(cov, Mode::d, 0.2 + 0.8 * u(rng));
  if (general) cov = cvdelay::gaussian::rotate_phase(cov, Mode::d, 2 * M_PI * u(rng));
  return cov;
}

// Columns are independent draws from N(0, cov).
inline Eigen::MatrixXd sample_gaussian(const Eigen::MatrixXd& cov, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const Eigen::MatrixXd l = cov.llt().matrixL();
  Eigen::MatrixXd z(cov.rows(), static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < z.cols(); ++j)
    for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, j) = nd(rng);
  return l * z;
}

inline Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x) {
  const Eigen::VectorXd mu = x.rowwise().mean();
  const Eigen::MatrixXd c = x.colwise() - mu;
  return c * c.transpose() / static_cast<double>(x.cols());
}

inline double variance(const std::vector<double>& x) {
  double m = 0.0, s = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size());
}

}  // namespace testing
