#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cvdelay/error.hpp"
#include "cvdelay/gaussian.hpp"
#include "support.hpp"

using namespace cvdelay::gaussian;
using cvdelay::DegenerateError;
using testing::random_state;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Matrix2d rot(double a) {
  Eigen::Matrix2d r;
  r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return r;
}

// Beamsplitter as an explicit linear map on (a+, a-, b+, b-) -> (c+, c-, d+, d-).
Eigen::Matrix4d splitter_map(double refl, double phi) {
  const double t = std::sqrt(1 - refl), r = std::sqrt(refl);
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m.block<2, 2>(0, 0) = t * Eigen::Matrix2d::Identity();
  m.block<2, 2>(0, 2) = r * rot(phi);
  m.block<2, 2>(2, 0) = r * Eigen::Matrix2d::Identity();
  m.block<2, 2>(2, 2) = -t * rot(phi);
  return m;
}

Eigen::Matrix4d input_cov(const SingleModeCov& a, const SingleModeCov& b) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m.block<2, 2>(0, 0) = a.matrix();
  m.block<2, 2>(2, 2) = b.matrix();
  return m;
}

// Sampling standard error of a covariance entry for Gaussian data.
double entry_se(const Eigen::MatrixXd& v, int i, int j, double n) {
  return std::sqrt((v(i, i) * v(j, j) + v(i, j) * v(i, j)) / n);
}

// Ellipse radius from the projected-axes definition, independent of the library.
double sigma_by_projection(const Eigen::Matrix2d& b, double theta) {
  const Eigen::Vector2d u(std::cos(theta), -std::sin(theta));
  const Eigen::Vector2d w(-std::sin(theta), -std::cos(theta));
  const double vu = u.dot(b * u), vw = w.dot(b * w), cuw = u.dot(b * w);
  return std::sqrt(vu * (1.0 - cuw * cuw / (vu * vw)));
}

double dense_grid_min(const Eigen::Matrix2d& b) {
  double best = 1e300;
  for (int i = 0; i < 200000; ++i) best = std::min(best, std::pow(sigma_by_projection(b, kPi * i / 200000.0), 2));
  return best;
}

double eq4(const SingleModeCov& a, const SingleModeCov& b) {
  return 4 * a.v_minus * b.v_minus * a.v_plus * b.v_plus /
         ((a.v_minus + b.v_plus) * (a.v_plus + b.v_minus));
}

}  // namespace

TEST_CASE("squeezed_vacuum converts dB levels") {
  const auto v = squeezed_vacuum(0, 0);
  CHECK(v.v_plus == 1.0);
  CHECK(v.v_minus == 1.0);
  const auto p = squeezed_vacuum(3.2, 12);
  CHECK(p.v_plus == doctest::Approx(0.4786).epsilon(1e-3));
  CHECK(p.v_minus == doctest::Approx(15.849).epsilon(1e-3));
  CHECK(p.cross == 0.0);
  const auto m = squeezed_vacuum(3.0103, 3.0103);
  CHECK(m.v_plus * m.v_minus == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(m.v_plus == doctest::Approx(0.5).epsilon(1e-4));
  CHECK_THROWS_AS(squeezed_vacuum(-1, 3), cvdelay::InvalidArgument);
}

TEST_CASE("beamsplit of vacuum is vacuum and R = 0 is transparent") {
  const auto v = beamsplit(SingleModeCov::vacuum(), SingleModeCov::vacuum(), 0.5, 0.0);
  CHECK((v.matrix() - Eigen::Matrix4d::Identity()).norm() < 1e-15);
  const SingleModeCov a{0.4, 3.0, 0.2}, b{1.5, 0.9, -0.1};
  const auto t = beamsplit(a, b, 0.0, 0.0);
  CHECK((t.local_block(Mode::c) - a.matrix()).norm() < 1e-15);
  CHECK((t.local_block(Mode::d) - b.matrix()).norm() < 1e-15);
  CHECK(t.cross_block().norm() < 1e-15);
}

TEST_CASE("beamsplit of a squeezer and vacuum matches the worked example and Monte Carlo") {
  const SingleModeCov a{0.5, 2.0, 0.0};
  const auto cov = beamsplit(a, SingleModeCov::vacuum(), 0.5, 0.0);
  CHECK(cov(0, 0) == doctest::Approx(0.75));
  CHECK(cov(2, 2) == doctest::Approx(0.75));
  CHECK(cov(0, 2) == doctest::Approx(-0.25));
  CHECK(cov(1, 1) == doctest::Approx(1.5));
  CHECK(cov(3, 3) == doctest::Approx(1.5));
  CHECK(cov(1, 3) == doctest::Approx(0.5));

  const double n = 1e6;
  const SingleModeCov b{1.3, 0.9, 0.2};
  const Eigen::MatrixXd x = testing::sample_gaussian(input_cov(a, b), 1000000, 11);
  for (double phi : {0.0, kPi / 2, 1.1}) {
    const Eigen::MatrixXd mc = testing::sample_covariance(splitter_map(0.3, phi) * x);
    const auto an = beamsplit(a, b, 0.3, phi);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) CHECK(std::abs(mc(i, j) - an(i, j)) < 5 * entry_se(an.matrix(), i, j, n));
  }
}

TEST_CASE("apply_loss follows the loss formula and a vacuum-ancilla Monte Carlo") {
  const auto sq = TwoModeCovariance::product(squeezed_vacuum(3.2, 12), SingleModeCov::vacuum());
  CHECK(apply_loss(sq, Mode::c, 0.8)(0, 0) == doctest::Approx(0.8 * 0.47863 + 0.2).epsilon(1e-4));
  CHECK(apply_loss(sq, Mode::c, 0.8)(0, 0) == doctest::Approx(0.583).epsilon(1e-3));

  std::mt19937_64 rng(3);
  const auto cov = random_state(rng);
  CHECK(apply_loss(cov, Mode::d, 1.0) == cov);
  const auto gone = apply_loss(cov, Mode::d, 0.0);
  CHECK((gone.local_block(Mode::d) - Eigen::Matrix2d::Identity()).norm() < 1e-15);
  CHECK(gone.cross_block().norm() < 1e-15);

  // Mix mode c with a vacuum ancilla on a splitter of transmission eta and drop the ancilla.
  const double eta = 0.37;
  Eigen::MatrixXd big = Eigen::MatrixXd::Identity(6, 6);
  big.topLeftCorner<4, 4>() = cov.matrix();
  const Eigen::MatrixXd x = testing::sample_gaussian(big, 1000000, 12);
  Eigen::MatrixXd map = Eigen::MatrixXd::Zero(4, 6);
  map.block<2, 2>(0, 0) = std::sqrt(eta) * Eigen::Matrix2d::Identity();
  map.block<2, 2>(0, 4) = std::sqrt(1 - eta) * Eigen::Matrix2d::Identity();
  map.block<2, 2>(2, 2) = Eigen::Matrix2d::Identity();
  const Eigen::MatrixXd mc = testing::sample_covariance(map * x);
  const auto an = apply_loss(cov, Mode::c, eta);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(std::abs(mc(i, j) - an(i, j)) < 5 * entry_se(an.matrix(), i, j, 1e6));
}

TEST_CASE("conditional variance") {
  const auto unc = TwoModeCovariance::product({0.7, 2.0, 0.0}, {1.4, 1.1, 0.0});
  CHECK(conditional_variance(unc, Quadrature::plus, Inference::c_given_d) == doctest::Approx(0.7));
  CHECK(conditional_variance(unc, Quadrature::minus, Inference::d_given_c) == doctest::Approx(1.1));

  const auto cov = beamsplit({0.5, 2.0, 0.0}, SingleModeCov::vacuum(), 0.5, 0.0);
  CHECK(conditional_variance(cov, Quadrature::plus, Inference::c_given_d) == doctest::Approx(2 * 0.5 / 1.5));

  // Monte Carlo oracle: residual variance of the least-squares regression of X_c on X_d.
  const Eigen::MatrixXd x = testing::sample_gaussian(cov.matrix(), 400000, 13);
  const Eigen::VectorXd xc = x.row(0).transpose(), xd = x.row(2).transpose();
  const double beta = xc.dot(xd) / xd.dot(xd);
  const double resid = (xc - beta * xd).squaredNorm() / static_cast<double>(xc.size());
  CHECK(resid == doctest::Approx(2.0 / 3.0).epsilon(5 * std::sqrt(2.0 / 4e5)));

  Eigen::Matrix4d bad = Eigen::Matrix4d::Identity();
  bad(2, 2) = 1e-300;
  bad(2, 2) = 0.0;
  CHECK_THROWS_AS(TwoModeCovariance{bad}, cvdelay::InvalidArgument);
  Eigen::Matrix2d blk;
  blk << 1.0, 0.0, 0.0, 0.0;
  CHECK(sigma_theta(blk, 0.0) == 1.0);
  CHECK_THROWS_AS(sigma_theta(Eigen::Matrix2d::Zero().eval(), 0.0), DegenerateError);
}

TEST_CASE("sigma_theta limits and vacuum circle") {
  const auto vac = TwoModeCovariance::vacuum();
  for (double th = -1.5; th < 1.6; th += 0.1) CHECK(sigma_theta(vac, th, Quadrature::plus) == doctest::Approx(1.0));

  const auto cov = beamsplit({0.5, 2.0, 0.0}, SingleModeCov::vacuum(), 0.5, 0.0);
  CHECK(sigma_theta(cov, -kPi / 4, Quadrature::plus) == doctest::Approx(std::sqrt(0.5)));
  CHECK(sigma_theta(cov, kPi / 4, Quadrature::plus) == doctest::Approx(1.0));
  CHECK(sigma_theta(cov, 0.0, Quadrature::plus) ==
        doctest::Approx(std::sqrt(conditional_variance(cov, Quadrature::plus, Inference::c_given_d))));
  CHECK(sigma_theta(cov, kPi / 2, Quadrature::plus) ==
        doctest::Approx(std::sqrt(conditional_variance(cov, Quadrature::plus, Inference::d_given_c))));
}

TEST_CASE("sigma_theta matches the projected-axes definition") {
  std::mt19937_64 rng(21);
  for (int k = 0; k < 200; ++k) {
    const auto cov = random_state(rng);
    for (auto q : {Quadrature::plus, Quadrature::minus})
      for (double th = -1.5; th < 1.6; th += 0.25)
        CHECK(sigma_theta(cov, th, q) == doctest::Approx(sigma_by_projection(cov.quadrature_block(q), th)).epsilon(1e-10));
  }
}

TEST_CASE("ellipse limits of a quadrature-swapping 50/50 mix") {
  // With the second input rotated by pi/2 the four quoted limits all hold.
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(0.05, 20.0);
  for (int k = 0; k < 500; ++k) {
    const SingleModeCov a{u(rng), u(rng), 0.0}, b{u(rng), u(rng), 0.0};
    const auto cov = beamsplit(a, b, 0.5, kPi / 2);
    CHECK(sigma_theta(cov, -kPi / 4, Quadrature::plus) == doctest::Approx(std::sqrt(a.v_plus)).epsilon(1e-12));
    CHECK(sigma_theta(cov, kPi / 4, Quadrature::minus) == doctest::Approx(std::sqrt(b.v_plus)).epsilon(1e-12));
    CHECK(sigma_theta(cov, kPi / 4, Quadrature::plus) == doctest::Approx(std::sqrt(b.v_minus)).epsilon(1e-12));
    CHECK(sigma_theta(cov, -kPi / 4, Quadrature::minus) == doctest::Approx(std::sqrt(a.v_minus)).epsilon(1e-12));
  }
}

TEST_CASE("EPR product equals the closed form for lossless mixing") {
  const SingleModeCov s{0.5, 2.0, 0.0};
  const auto two = beamsplit(s, s, 0.5, kPi / 2);
  CHECK(epr_product(two, Inference::c_given_d) == doctest::Approx(0.64).epsilon(1e-12));
  CHECK(epr_product(TwoModeCovariance::vacuum(), Inference::c_given_d) == doctest::Approx(1.0));

  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.05, 20.0);
  for (int k = 0; k < 1000; ++k) {
    SingleModeCov a{u(rng), 0.0, 0.0}, b{u(rng), 0.0, 0.0};
    a.v_minus = k % 2 ? 1.0 / a.v_plus : std::max(u(rng), 1.0 / a.v_plus);
    b.v_minus = k % 2 ? 1.0 / b.v_plus : std::max(u(rng), 1.0 / b.v_plus);
    const auto cov = beamsplit(a, b, 0.5, kPi / 2);
    const double e = eq4(a, b);
    CHECK(std::abs(epr_product(cov, Inference::c_given_d) - e) <= 1e-12 * e);
  }
}

TEST_CASE("correlation matrix elements") {
  const auto vac = correlation_matrix(TwoModeCovariance::vacuum());
  CHECK(vac.pp == 0.0);
  CHECK(vac.mm == 0.0);
  const auto c = correlation_matrix(beamsplit({0.5, 2.0, 0.0}, SingleModeCov::vacuum(), 0.5, 0.0));
  CHECK(c.pp == doctest::Approx(-0.25));
  CHECK(c.mm == doctest::Approx(0.5));
  CHECK(c.pm == 0.0);
  CHECK(c.mp == 0.0);
}

TEST_CASE("Duan criterion on reference states") {
  const auto vac = duan_inseparability(TwoModeCovariance::vacuum());
  CHECK(vac.value == 1.0);
  CHECK(vac.degenerate);
  CHECK(duan_from_minima(TwoModeCovariance::vacuum()) == doctest::Approx(1.0));

  const auto biased = beamsplit({0.5, 2.0, 0.0}, SingleModeCov::vacuum(), 0.5, 0.0);
  CHECK(duan_from_minima(biased) == doctest::Approx(0.5));
  CHECK(duan_inseparability(biased).value == doctest::Approx(0.5).epsilon(1e-9));

  // Equal loss on two squeezers: the product of the two lossy squeezed variances.
  const SingleModeCov a{0.4, 3.0, 0.0}, b{0.6, 2.0, 0.0};
  const double eta = 0.7;
  auto cov = beamsplit(a, b, 0.5, kPi / 2);
  cov = apply_loss(apply_loss(cov, Mode::c, eta), Mode::d, eta);
  const double expect = (eta * a.v_plus + 1 - eta) * (eta * b.v_plus + 1 - eta);
  CHECK(duan_from_minima(cov) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(duan_inseparability(cov).value == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("Duan minima route agrees with a dense theta grid") {
  std::mt19937_64 rng(24);
  for (int k = 0; k < 20; ++k) {
    const auto cov = random_state(rng);
    const double grid = dense_grid_min(cov.quadrature_block(Quadrature::plus)) *
                        dense_grid_min(cov.quadrature_block(Quadrature::minus));
    CHECK(duan_from_minima(cov) == doctest::Approx(grid).epsilon(1e-6));
  }
}

TEST_CASE("Duan routes agree under equal loss") {
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    const SingleModeCov a = testing::random_single(rng, u(rng) < 0.5, false);
    const SingleModeCov b = testing::random_single(rng, u(rng) < 0.5, false);
    const double eta = 0.2 + 0.8 * u(rng);
    auto cov = beamsplit(a, b, 0.5, kPi / 2);
    cov = apply_loss(apply_loss(cov, Mode::c, eta), Mode::d, eta);
    const auto sf = duan_inseparability(cov);
    if (sf.degenerate) continue;
    CHECK(std::abs(sf.value - duan_from_minima(cov)) < 1e-9);
  }
}

TEST_CASE("standard form reduction") {
  std::mt19937_64 rng(26);
  for (int k = 0; k < 300; ++k) {
    const auto cov = random_state(rng);
    const auto sf = reduce_to_standard_form(cov);
    const auto& m = sf.cov.matrix();
    // Local blocks diagonal, cross block diagonal, and invariants preserved.
    CHECK(std::abs(m(0, 1)) < 1e-8);
    CHECK(std::abs(m(2, 3)) < 1e-8);
    CHECK(std::abs(m(0, 3)) < 1e-8);
    CHECK(std::abs(m(1, 2)) < 1e-8);
    CHECK(sf.cov.local_block(Mode::c).determinant() ==
          doctest::Approx(cov.local_block(Mode::c).determinant()).epsilon(1e-8));
    CHECK(sf.cov.local_block(Mode::d).determinant() ==
          doctest::Approx(cov.local_block(Mode::d).determinant()).epsilon(1e-8));
    CHECK(sf.cov.matrix().determinant() == doctest::Approx(cov.matrix().determinant()).epsilon(1e-7));
    CHECK(sf.cov.cross_block().determinant() ==
          doctest::Approx(cov.cross_block().determinant()).epsilon(1e-7).scale(1e-6));
    // Form II condition: (n1 - 1)/(m1 - 1) = (n2 - 1)/(m2 - 1).
    const double lhs = (m(0, 0) - 1) * (m(3, 3) - 1), rhs = (m(1, 1) - 1) * (m(2, 2) - 1);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6).scale(1e-6));
    // Idempotent.
    const auto again = reduce_to_standard_form(sf.cov);
    CHECK((again.cov.matrix() - sf.cov.matrix()).norm() < 1e-8 * (1 + sf.cov.matrix().norm()));
  }
  Eigen::Matrix4d unphysical = Eigen::Matrix4d::Identity() * 0.5;
  CHECK_THROWS_AS(reduce_to_standard_form(TwoModeCovariance{unphysical}), cvdelay::InvalidArgument);
}

TEST_CASE("physicality is preserved by every channel operation") {
  std::mt19937_64 rng(27);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const auto cov = random_state(rng);
    REQUIRE(cov.is_physical());
    CHECK(cov.symplectic_eigenvalues()[0] >= 1.0 - 1e-9);
    const auto m = u(rng) < 0.5 ? Mode::c : Mode::d;
    CHECK(apply_loss(cov, m, u(rng)).is_physical());
    CHECK(add_noise(cov, m, 3 * u(rng)).is_physical());
    CHECK(rotate_phase(cov, m, 6 * u(rng)).is_physical());
    const auto a = testing::random_single(rng, false), b = testing::random_single(rng, true);
    CHECK(a.is_physical());
    CHECK(beamsplit(a, b, u(rng), 6 * u(rng)).is_physical());
  }
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m(0, 0) = 0.5;
  CHECK_FALSE(TwoModeCovariance{m}.is_physical());
}

namespace {

// Squeezer (pure or mixed) split against vacuum, then independent losses:
// the biased-entanglement family of the delay experiment.
TwoModeCovariance biased_state(std::mt19937_64& rng, double eta_c, double eta_d) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto a = testing::random_single(rng, u(rng) < 0.5, false);
  const auto cov = beamsplit(a, SingleModeCov::vacuum(), 0.5, 0.0);
  return apply_loss(apply_loss(cov, Mode::c, eta_c), Mode::d, eta_d);
}

}  // namespace

TEST_CASE("extra loss on c: inference from c is worse above the QNL, better below it") {
  std::mt19937_64 rng(28);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const SingleModeCov a = testing::random_single(rng, u(rng) < 0.5, false);
    const SingleModeCov b = testing::random_single(rng, u(rng) < 0.5, false);
    const double eta_d = 0.05 + 0.95 * u(rng), eta_c = eta_d * u(rng);
    const auto sym = beamsplit(a, b, 0.5, k % 2 ? 0.0 : kPi / 2);
    const auto cov = apply_loss(apply_loss(sym, Mode::c, eta_c), Mode::d, eta_d);
    for (auto q : {Quadrature::plus, Quadrature::minus}) {
      const double diff = conditional_variance(cov, q, Inference::d_given_c) -
                          conditional_variance(cov, q, Inference::c_given_d);
      const double local = sym.quadrature_block(q)(0, 0);
      if (local > 1.0) CHECK(diff >= -1e-12);
      if (local < 1.0) CHECK(diff <= 1e-12);
    }
  }
}

TEST_CASE("extra loss on c raises the d|c EPR product of biased states") {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 2000; ++k) {
    const double eta_d = 0.05 + 0.95 * u(rng), eta_c = eta_d * u(rng);
    const auto cov = biased_state(rng, eta_c, eta_d);
    CHECK(epr_product(cov, Inference::d_given_c) >= epr_product(cov, Inference::c_given_d) - 1e-12);
  }
}

TEST_CASE("Duan criterion of biased states never improves under loss") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 2000; ++k) {
    const auto cov = biased_state(rng, u(rng), u(rng));
    const auto lossy = apply_loss(cov, u(rng) < 0.5 ? Mode::c : Mode::d, u(rng));
    CHECK(duan_from_minima(lossy) >= duan_from_minima(cov) - 1e-12);
    const auto before = duan_inseparability(cov), after = duan_inseparability(lossy);
    if (!before.degenerate && !after.degenerate) CHECK(after.value >= before.value - 1e-9);
  }
}

TEST_CASE("separable states move toward I = 1 under loss") {
  // The minima route is not monotone outside the entangled region: full loss maps any state to vacuum.
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity() * 3.0;
  const TwoModeCovariance thermal{m};
  CHECK(duan_from_minima(thermal) == doctest::Approx(9.0));
  CHECK(duan_from_minima(apply_loss(thermal, Mode::c, 0.5)) < 9.0);
}

TEST_CASE("analytic ellipse matches Monte Carlo scatter on a 90-point grid") {
  auto cov = beamsplit(squeezed_vacuum(3.2, 12), SingleModeCov::vacuum(), 0.5, 0.0);
  cov = apply_loss(cov, Mode::c, 0.5);
  const std::size_t n = 1000000, batches = 20;
  const Eigen::MatrixXd x = testing::sample_gaussian(cov.matrix(), n, 30);
  for (auto q : {Quadrature::plus, Quadrature::minus}) {
    const int i = q == Quadrature::plus ? 0 : 1;
    for (int g = 0; g < 90; ++g) {
      const double th = -kPi / 2 + kPi * g / 90.0;
      std::vector<double> est;
      for (std::size_t bidx = 0; bidx < batches; ++bidx) {
        const Eigen::MatrixXd part = x.middleCols(static_cast<Eigen::Index>(bidx * n / batches), n / batches);
        Eigen::MatrixXd two(2, part.cols());
        two.row(0) = part.row(i);
        two.row(1) = part.row(i + 2);
        est.push_back(sigma_by_projection(testing::sample_covariance(two), th));
      }
      double mean = 0.0;
      for (double e : est) mean += e;
      mean /= batches;
      const double se = std::sqrt(testing::variance(est) * batches / (batches - 1.0) / batches);
      CHECK(std::abs(mean - sigma_theta(cov, th, q)) < 5 * se);
    }
  }
}

TEST_CASE("covariance text round trip") {
  std::mt19937_64 rng(31);
  const auto cov = random_state(rng);
  CHECK(TwoModeCovariance::from_text(cov.to_text()) == cov);
  CHECK_THROWS(TwoModeCovariance::from_text("1 0 0"));
  CHECK(to_string(parse_quadrature("minus")) == "minus");
}
