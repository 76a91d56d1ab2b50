#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cvdelay/error.hpp"
#include "cvdelay/gaussian.hpp"
#include "cvdelay/metrics.hpp"
#include "support.hpp"

using namespace cvdelay;
using namespace cvdelay::metrics;
using gaussian::Mode;

namespace {

constexpr double kPi = std::numbers::pi;

ScatterSet draw(const Eigen::Matrix2d& block, std::size_t n, std::uint64_t seed,
                Quadrature q = Quadrature::plus) {
  const Eigen::MatrixXd x = testing::sample_gaussian(block, n, seed);
  ScatterSet s;
  s.quadrature = q;
  s.x_c.resize(n);
  s.x_d.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.x_c[i] = x(0, static_cast<Eigen::Index>(i));
    s.x_d[i] = x(1, static_cast<Eigen::Index>(i));
  }
  return s;
}

struct Sets {
  ScatterSet plus, minus, qnl;
};

Sets draw_state(const TwoModeCovariance& cov, std::size_t n, std::uint64_t seed) {
  return {draw(cov.quadrature_block(Quadrature::plus), n, seed, Quadrature::plus),
          draw(cov.quadrature_block(Quadrature::minus), n, seed + 1, Quadrature::minus),
          draw(Eigen::Matrix2d::Identity(), n, seed + 2)};
}

TwoModeCovariance biased_state(double eta_c, double eta_d) {
  auto cov = gaussian::beamsplit(gaussian::squeezed_vacuum(3.5, 7.0), gaussian::SingleModeCov::vacuum(), 0.5, 0.0);
  cov = gaussian::apply_loss(cov, Mode::c, eta_c);
  return gaussian::apply_loss(cov, Mode::d, eta_d);
}

TwoModeCovariance two_squeezer(double eta) {
  auto cov = gaussian::beamsplit(gaussian::squeezed_vacuum(5.0, 8.0), gaussian::squeezed_vacuum(5.0, 8.0), 0.5,
                                 kPi / 2);
  cov = gaussian::apply_loss(cov, Mode::c, eta);
  return gaussian::apply_loss(cov, Mode::d, eta);
}

}  // namespace

TEST_CASE("vacuum scatter gives a unit circle") {
  const auto s = draw(Eigen::Matrix2d::Identity(), 200000, 1);
  const auto e = empirical_sigma_theta(s, default_theta_grid());
  CHECK(e.theta.size() == 180);
  for (double v : e.sigma) CHECK(v == doctest::Approx(1.0).epsilon(0.01));
  CHECK(e.min_value == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("deterministic correlation is perfectly inferred") {
  ScatterSet s;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 5000; ++i) {
    const double v = nd(rng);
    s.x_c.push_back(v);
    s.x_d.push_back(v);
  }
  const auto e = empirical_sigma_theta(s, default_theta_grid());
  CHECK(e.sigma[0] < 1e-7);
  CHECK(e.sigma[90] < 1e-7);
  CHECK(e.min_value < 1e-7);

  ScatterSet flat;
  flat.x_c.assign(5000, 0.3);
  flat.x_d.assign(5000, -0.1);
  CHECK_THROWS_AS(empirical_sigma_theta(flat, default_theta_grid()), DegenerateError);
  ScatterSet small;
  small.x_c.assign(10, 1.0);
  small.x_d.assign(10, 1.0);
  CHECK_THROWS_AS(empirical_sigma_theta(small, default_theta_grid()), InvalidArgument);
}

TEST_CASE("empirical ellipse matches the analytic curve within five standard errors") {
  const auto cov = biased_state(0.55, 0.85);
  const std::size_t n = 200000;
  for (auto q : {Quadrature::plus, Quadrature::minus}) {
    const auto block = cov.quadrature_block(q);
    const auto grid = default_theta_grid(36);
    // Standard error from 40 independent repeats of a smaller draw.
    std::vector<std::vector<double>> reps(grid.size());
    for (std::uint64_t r = 0; r < 40; ++r) {
      const auto e = empirical_sigma_theta(draw(block, n / 40, 100 + r, q), grid);
      for (std::size_t i = 0; i < grid.size(); ++i) reps[i].push_back(e.sigma[i]);
    }
    const auto e = empirical_sigma_theta(draw(block, n, 7, q), grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double se = std::sqrt(testing::variance(reps[i]) / 40.0);
      CHECK(std::abs(e.sigma[i] - gaussian::sigma_theta(cov, grid[i], q)) < 5 * se);
    }
    // Minimum on the grid lands on the analytic minimum.
    const auto m = gaussian::ellipse_minimum(block);
    CHECK(e.min_value == doctest::Approx(std::sqrt(m.variance)).epsilon(0.01));
  }
}

TEST_CASE("sigma curve has period pi and is non-negative") {
  const auto s = draw(biased_state(0.7, 0.9).quadrature_block(Quadrature::minus), 20000, 3);
  std::vector<double> grid;
  for (int i = 0; i < 72; ++i) grid.push_back(i * kPi / 36);
  const auto e = empirical_sigma_theta(s, grid);
  for (std::size_t i = 0; i < 36; ++i) {
    CHECK(e.sigma[i] >= 0.0);
    CHECK(e.sigma[i] == doctest::Approx(e.sigma[i + 36]).epsilon(1e-12));
  }
}

TEST_CASE("empirical covariance") {
  SUBCASE("vacuum gives identity") {
    const auto s = draw_state(TwoModeCovariance::vacuum(), 200000, 10);
    const auto ec = empirical_covariance(s.plus, s.minus);
    CHECK(ec.cross_blocks_zeroed);
    CHECK((ec.cov.matrix() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 0.02);
  }
  SUBCASE("entries within three standard errors of the model") {
    const auto cov = biased_state(0.6, 0.9);
    const std::size_t n = 100000;
    const auto s = draw_state(cov, n, 11);
    const auto ec = empirical_covariance(s.plus, s.minus);
    const auto& m = cov.matrix();
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        if ((i % 2) != (j % 2)) {
          CHECK(ec.cov(i, j) == 0.0);
          continue;
        }
        const double se = std::sqrt((m(i, i) * m(j, j) + m(i, j) * m(i, j)) / static_cast<double>(n));
        CHECK(std::abs(ec.cov(i, j) - m(i, j)) < 3 * se);
      }
  }
  SUBCASE("constant offsets are removed") {
    const auto s = draw_state(biased_state(0.6, 0.9), 20000, 12);
    auto shifted = s;
    for (auto& v : shifted.plus.x_c) v += 5.0;
    for (auto& v : shifted.minus.x_d) v -= 2.0;
    const auto a = empirical_covariance(s.plus, s.minus).cov.matrix();
    const auto b = empirical_covariance(shifted.plus, shifted.minus).cov.matrix();
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("labels are checked") {
    const auto s = draw_state(TwoModeCovariance::vacuum(), 2000, 13);
    CHECK_THROWS_AS(empirical_covariance(s.minus, s.plus), InvalidArgument);
  }
}

TEST_CASE("standard form II") {
  std::mt19937_64 rng(14);
  for (int k = 0; k < 200; ++k) {
    const auto cov = testing::random_state(rng);
    const auto once = standard_form_II(cov);
    const auto twice = standard_form_II(once);
    CHECK((once.matrix() - twice.matrix()).cwiseAbs().maxCoeff() < 1e-12 * once.matrix().cwiseAbs().maxCoeff() + 1e-12);
    // Local operations preserve the symplectic spectrum.
    const auto a = cov.symplectic_eigenvalues(), b = once.symplectic_eigenvalues();
    CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-9));
    CHECK(a[1] == doctest::Approx(b[1]).epsilon(1e-9));
  }
  Eigen::Matrix4d bad = Eigen::Matrix4d::Identity() * 0.5;
  CHECK_THROWS_AS(standard_form_II(TwoModeCovariance(bad)), InvalidArgument);
}

TEST_CASE("equal loss two-squeezer state has no tilt") {
  const auto cov = two_squeezer(0.8);
  CHECK(std::abs(tilt_from_diagonal(cov.quadrature_block(Quadrature::plus))) < 1e-12);
  CHECK(std::abs(tilt_from_diagonal(cov.quadrature_block(Quadrature::minus))) < 1e-12);
  const auto sf = gaussian::reduce_to_standard_form(cov);
  CHECK(sf.r1 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sf.r2 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(gaussian::duan_from_minima(sf.cov) == doctest::Approx(gaussian::duan_from_minima(cov)).epsilon(1e-9));

  const auto s = draw_state(cov, 100000, 15);
  const auto r = full_report(s.plus, s.minus, s.qnl);
  CHECK(std::abs(r.rotation_offset) < 5 * r.uncertainties.rotation_offset + 1e-3);
}

TEST_CASE("extra loss on c tilts the ellipse") {
  const auto sym = biased_state(0.8, 0.8);
  const auto lossy = biased_state(0.4, 0.8);
  CHECK(std::abs(tilt_from_diagonal(sym.quadrature_block(Quadrature::plus))) < 1e-12);
  const double t = tilt_from_diagonal(lossy.quadrature_block(Quadrature::plus));
  CHECK(std::abs(t) > 0.05);
  // Losing c weights the minimum toward the better-preserved arm d.
  const auto m = gaussian::ellipse_minimum(lossy.quadrature_block(Quadrature::plus));
  CHECK(std::abs(std::sin(m.angle)) > std::abs(std::cos(m.angle)));

  const auto s = draw_state(lossy, 100000, 16);
  const auto r = full_report(s.plus, s.minus, s.qnl);
  CHECK(std::abs(r.rotation_offset_plus) > 5 * r.uncertainties.rotation_offset);
}

TEST_CASE("full report") {
  SUBCASE("vacuum everywhere") {
    const auto s = draw_state(TwoModeCovariance::vacuum(), 100000, 20);
    const auto r = full_report(s.plus, s.minus, s.qnl);
    CHECK(r.epr_cd == doctest::Approx(1.0).epsilon(5 * r.uncertainties.epr_cd));
    CHECK(r.epr_dc == doctest::Approx(1.0).epsilon(5 * r.uncertainties.epr_dc));
    CHECK(r.duan_i == doctest::Approx(1.0).epsilon(5 * r.uncertainties.duan_i + 0.01));
    CHECK(r.qnl_variance == doctest::Approx(1.0).epsilon(0.02));
    CHECK(r.samples == 100000);
    for (double u : {r.uncertainties.epr_cd, r.uncertainties.epr_dc, r.uncertainties.duan_i})
      CHECK(u > 0.0);
  }
  SUBCASE("values track the analytic state") {
    const auto cov = biased_state(0.6, 0.85);
    const auto s = draw_state(cov, 200000, 21);
    const auto r = full_report(s.plus, s.minus, s.qnl);
    CHECK(std::abs(r.epr_cd - gaussian::epr_product(cov, gaussian::Inference::c_given_d)) <
          5 * r.uncertainties.epr_cd);
    CHECK(std::abs(r.epr_dc - gaussian::epr_product(cov, gaussian::Inference::d_given_c)) <
          5 * r.uncertainties.epr_dc);
    CHECK(std::abs(r.duan_i - gaussian::duan_from_minima(cov)) < 5 * r.uncertainties.duan_i);
    CHECK(r.epr_cd >= 0.0);
    CHECK(r.duan_i >= 0.0);
    const auto text = r.to_text();
    CHECK(text.find("duan_i: ") != std::string::npos);
    CHECK(text.find("rotation_offset_rad: ") != std::string::npos);
  }
  SUBCASE("more loss means weaker inseparability") {
    const auto a = draw_state(biased_state(0.9, 0.9), 100000, 22);
    const auto b = draw_state(biased_state(0.5, 0.9), 100000, 25);
    const auto ra = full_report(a.plus, a.minus, a.qnl), rb = full_report(b.plus, b.minus, b.qnl);
    CHECK(rb.duan_i > ra.duan_i);
  }
  SUBCASE("bootstrap needs segments") {
    const auto s = draw_state(TwoModeCovariance::vacuum(), 5000, 23);
    CHECK_THROWS_AS(full_report(s.plus, s.minus, s.qnl, {180, 1}), InvalidArgument);
    ScatterSet tiny = s.plus.slice(0, 100);
    CHECK_THROWS_AS(full_report(tiny, s.minus, s.qnl), InvalidArgument);
  }
}
