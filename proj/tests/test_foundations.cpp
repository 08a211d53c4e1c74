#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>

#include "wavesim/kernels.hpp"
#include "wavesim/quadrature.hpp"
#include "wavesim/wavelets.hpp"

using namespace wavesim;

TEST_CASE("gk15 adaptive quadrature on closed forms") {
  auto r1 = quad::integrate([](double x) { return x * x; }, 0.0, 1.0, 1e-13);
  CHECK(r1.value == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  // oscillatory with seeded breakpoints
  auto seeds = quad::oscillation_breakpoints(0.0, 2.0 * M_PI, 50.0);
  auto r2 = quad::integrate([](double x) { return x * std::sin(50.0 * x); },
                            0.0, 2.0 * M_PI, 1e-12, seeds);
  CHECK(r2.value == doctest::Approx(-2.0 * M_PI / 50.0).epsilon(1e-10));

  auto r3 = quad::integrate_real_line(
      [](double y) { return std::exp(-y * y); }, 1e-12);
  CHECK(r3.value == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-13));

  auto r4 = quad::integrate_real_line(
      [](double y) { return 1.0 / (1.0 + y * y); }, 1e-10);
  CHECK(r4.value == doctest::Approx(M_PI).epsilon(1e-11));

  auto r5 = quad::integrate(
      [](double x) { return std::polar(1.0, x); }, 0.0, 1.0, 1e-13);
  CHECK(r5.value.real() == doctest::Approx(std::sin(1.0)).epsilon(1e-14));
  CHECK(r5.value.imag() == doctest::Approx(1.0 - std::cos(1.0)).epsilon(1e-14));
}

TEST_CASE("quadrature failure carries the best estimate") {
  auto nasty = [](double x) {
    return 1.0 / std::sqrt(std::fabs(x - 0.3) + 1e-15);
  };
  CHECK_THROWS_AS(quad::integrate(nasty, 0.0, 1.0, 1e-14, {}, 8),
                  quad::quadrature_error);
  try {
    quad::integrate(nasty, 0.0, 1.0, 1e-14, {}, 8);
  } catch (const quad::quadrature_error& e) {
    CHECK(e.best_estimate > 0.0);
    CHECK(e.error_bound > 1e-14);
  }
}

TEST_CASE("meyer family closed-form values") {
  const auto fam = make_meyer();
  CHECK(fam.phi_hat(0.0).real() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(fam.phi_hat(2.0 * M_PI)) == 0.0);
  CHECK(std::abs(fam.psi_hat(0.0)) == 0.0);

  double s = 0.0;
  for (int k = -2; k <= 2; ++k) s += std::norm(fam.phi_hat(1.0 + 2 * M_PI * k));
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("meyer identities on dense grids") {
  const auto fam = make_meyer();
  double worst_shift = 0.0, worst_part = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double xi = -12.0 + 24.0 * i / 1000.0;
    worst_shift = std::max(
        worst_shift, std::fabs(shift_orthonormality_sum(fam, xi, 2) - 1.0));
    if (std::fabs(xi) > 1e-6)
      worst_part = std::max(
          worst_part, std::fabs(dyadic_partition_sum(fam, xi, 64) - 1.0));
  }
  CHECK(worst_shift < 1e-12);
  CHECK(worst_part < 1e-12);
}

TEST_CASE("meyer transforms vanish outside the declared supports") {
  const auto fam = make_meyer();
  const double a2 = fam.phi_support->hi;
  const double a3 = fam.psi_support->hi;
  for (int i = 1; i <= 100; ++i) {
    CHECK(std::abs(fam.phi_hat(a2 + 0.3 * i)) == 0.0);
    CHECK(std::abs(fam.psi_hat(a3 + 0.3 * i)) == 0.0);
    CHECK(std::abs(fam.psi_hat(fam.psi_inner_gap * (i - 0.5) / 100.0)) == 0.0);
  }
}

TEST_CASE("c_bound dominates |psi_hat'| on random samples") {
  const auto fam = make_meyer();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-9.0, 9.0);
  for (int i = 0; i < 20000; ++i)
    CHECK(std::abs(fam.psi_hat_deriv(u(rng))) <= fam.c_bound);

  const auto bl = make_battle_lemarie(3);
  for (int i = 0; i < 5000; ++i)
    CHECK(std::abs(bl.psi_hat_deriv(u(rng))) <= bl.c_bound);
}

TEST_CASE("eval_pair matches its definition and a Fourier oracle") {
  const auto fam = make_meyer();
  CHECK(std::abs(eval_pair(fam, 0, 0, 0.0)) == 0.0);

  // inside the dilated band the value is 2^{-3/2} conj(psi_hat(xi/8))
  const double xi = 8.0 * 1.1 * fam.psi_inner_gap;
  const cdouble direct = eval_pair(fam, 3, 0, xi);
  const cdouble expect = std::pow(2.0, -1.5) * std::conj(fam.psi_hat(xi / 8.0));
  CHECK(std::abs(direct - expect) < 1e-15);

  // Fourier oracle: transform of sqrt(2) psi(2x - 2) evaluated at xi = 4 via
  // the time-domain wavelet reconstructed by quadrature.
  auto psi_time = [&](double x) {
    auto r = quad::integrate(
        [&](double w) { return fam.psi_hat(w) * std::polar(1.0, w * x); },
        -fam.psi_support->hi, fam.psi_support->hi, 1e-10);
    return r.value.real() / (2.0 * M_PI);  // psi is real
  };
  const double target_xi = 4.0;
  cdouble ft = 0.0;
  const double h = 0.02, zmax = 60.0;
  for (double x = -zmax; x <= zmax; x += h)
    ft += std::sqrt(2.0) * psi_time(2.0 * x - 2.0) *
          std::polar(1.0, -target_xi * x) * h;
  const cdouble pair = eval_pair(fam, 1, 2, target_xi);
  CHECK(std::abs(std::conj(ft) - pair) < 1e-6);
}

TEST_CASE("battle-lemarie orthonormalized spline transforms") {
  CHECK_THROWS_AS(make_battle_lemarie(0), std::invalid_argument);
  CHECK_THROWS_AS(make_battle_lemarie(5), std::invalid_argument);

  const auto bl1 = make_battle_lemarie(1);
  CHECK(std::abs(bl1.phi_hat(0.0)) == doctest::Approx(1.0).epsilon(1e-12));

  // direct series oracle for shift orthonormality
  double s = 0.0;
  for (int k = -64; k <= 64; ++k)
    s += std::norm(bl1.phi_hat(0.5 + 2.0 * M_PI * k));
  CHECK(s == doctest::Approx(1.0).epsilon(1e-8));

  for (int degree = 1; degree <= 4; ++degree) {
    const auto fam = make_battle_lemarie(degree);
    double worst_shift = 0.0, worst_part = 0.0;
    for (int i = 0; i <= 160; ++i) {
      const double xi = -9.5 + 19.0 * i / 160.0;
      worst_shift = std::max(
          worst_shift, std::fabs(shift_orthonormality_sum(fam, xi, 200) - 1.0));
      if (std::fabs(xi) > 0.05)
        worst_part = std::max(
            worst_part, std::fabs(dyadic_partition_sum(fam, xi, 48) - 1.0));
    }
    CHECK(worst_shift < 1e-8);  // limited by the K=200 series truncation
    CHECK(worst_part < 1e-12);
  }
}

TEST_CASE("daubechies product-formula transforms (experimental)") {
  CHECK_THROWS_AS(make_daubechies(1), std::invalid_argument);
  const auto db = make_daubechies(2);
  CHECK(std::abs(db.phi_hat(0.0)) == doctest::Approx(1.0).epsilon(1e-12));
  double worst = 0.0;
  for (int i = 0; i <= 60; ++i) {
    const double xi = -6.0 + 12.0 * i / 60.0;
    worst = std::max(worst,
                     std::fabs(shift_orthonormality_sum(db, xi, 300) - 1.0));
  }
  CHECK(worst < 2e-5);  // slow tails; truncation-limited
}

// --------------------------------------------------------------------------
// kernels
// --------------------------------------------------------------------------
namespace {

double simpson_covariance(const Kernel& k, double t, double s, double L, int n) {
  const double h = 2.0 * L / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double y = -L + i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * (k.u(t, y) * std::conj(k.u(s, y))).real();
  }
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("example kernel 1: values, envelopes, covariance oracle") {
  const auto k = make_example1_kernel();
  CHECK(k.u(1.0, 0.0).real() == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(std::abs(k.u(0.0, 3.7)) == 0.0);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ut(-3.0, 3.0), uy(-8.0, 8.0);
  for (int i = 0; i < 1000; ++i) {
    const double t = ut(rng), y = uy(rng);
    CHECK(std::abs(k.u(t, y)) <= std::fabs(t) * k.env_u1_linear(y) * (1 + 1e-12));
    CHECK(std::abs(k.u(t, y)) <= k.env_u1_uniform(y) * (1 + 1e-12));
    CHECK(std::abs(k.u_dy(t, y)) <= std::fabs(t) * k.env_u2(y) * (1 + 1e-12));
  }
  for (int i = 0; i < 1000; ++i) {
    const double t1 = ut(rng), t2 = ut(rng), y = uy(rng);
    CHECK(std::abs(k.u(t1, y) - k.u(t2, y)) <=
          std::fabs(t1 - t2) * k.env_w(y) * (1 + 1e-9) + 1e-300);
    CHECK(std::abs(k.u_dy(t1, y) - k.u_dy(t2, y)) <=
          std::fabs(t1 - t2) * k.env_v(y) * (1 + 1e-9) + 1e-300);
  }

  CHECK(covariance(k, 0.0, 0.7, 1e-10) == doctest::Approx(0.0).epsilon(1e-10));
  const double oracle = simpson_covariance(k, 1.0, 1.0, 200.0, 1000000);
  CHECK(covariance(k, 1.0, 1.0, 1e-10) == doctest::Approx(oracle).epsilon(1e-8));

  // symmetry on a 5x5 grid
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      const double t = 0.25 * i, s = 0.25 * j;
      CHECK(std::fabs(covariance(k, t, s, 1e-10) - covariance(k, s, t, 1e-10)) <=
            2e-10);
    }
}

TEST_CASE("example kernel 2: values and covariance oracle") {
  const auto k = make_example2_kernel();
  CHECK(k.u(1.0, 0.0).real() == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  for (int i = 0; i <= 20; ++i) CHECK(std::abs(k.u(0.0, -5.0 + 0.5 * i)) == 0.0);

  const double oracle = simpson_covariance(k, 1.0, 1.0, 30.0, 400000);
  CHECK(covariance(k, 1.0, 1.0, 1e-10) == doctest::Approx(oracle).epsilon(1e-8));

  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> ut(-2.0, 2.0), uy(-4.0, 4.0);
  for (int i = 0; i < 1000; ++i) {
    const double t1 = ut(rng), t2 = ut(rng), y = uy(rng);
    CHECK(std::abs(k.u(t1, y) - k.u(t2, y)) <=
          std::fabs(t1 - t2) * k.env_w(y) * (1 + 1e-9) + 1e-300);
    CHECK(std::abs(k.u_dy(t1, y) - k.u_dy(t2, y)) <=
          std::fabs(t1 - t2) * k.env_v(y) * (1 + 1e-9) + 1e-300);
    CHECK(std::abs(k.u(t1, y)) <= k.env_u1_uniform(y) * (1 + 1e-12));
  }
}

TEST_CASE("stationary kernel: translation invariance and closed forms") {
  const auto k = make_stationary_kernel(
      "gauss", [](double y) { return std::exp(-y * y); });
  CHECK(covariance(k, 0.4, 0.4, 1e-10) ==
        doctest::Approx(std::sqrt(M_PI)).epsilon(1e-10));
  CHECK(covariance(k, 1.0, 0.0, 1e-10) ==
        doctest::Approx(std::sqrt(M_PI) * std::exp(-0.25)).epsilon(1e-8));
  for (double h : {0.1, 0.7, 2.3})
    CHECK(std::fabs(covariance(k, 1.3 + h, 0.4 + h, 1e-10) -
                    covariance(k, 1.3, 0.4, 1e-10)) <= 2e-10);

  CHECK_THROWS_AS(make_stationary_kernel(
                      "bad", [](double y) { return 1.0 - y * y; }),
                  std::invalid_argument);
}

TEST_CASE("covariance satisfies Cauchy-Schwarz within tolerance") {
  const auto k = make_example1_kernel();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int i = 0; i < 12; ++i) {
    const double t = u(rng), s = u(rng);
    const double rts = covariance(k, t, s, 1e-11);
    const double rtt = covariance(k, t, t, 1e-11);
    const double rss = covariance(k, s, s, 1e-11);
    CHECK(rts * rts <= rtt * rss + 1e-9);
    CHECK(rtt >= -1e-12);
  }
}
