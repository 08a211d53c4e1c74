#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <numeric>

#include "wavesim/simulator.hpp"
#include "wavesim/validation.hpp"

using namespace wavesim;

namespace {

TruncationPlan manual_plan(long n0, int n, long m) {
  TruncationPlan p;
  p.n0 = n0;
  p.n = n;
  p.m.assign(static_cast<std::size_t>(n), m);
  p.certificate.method = "manual";
  return p;
}

CoefficientTable tiny_table(double a00) {
  CoefficientTable t;
  t.kernel_name = "synthetic";
  t.family_name = "synthetic";
  t.plan = manual_plan(1, 1, 1);
  t.t_grid = {0.0};
  t.quad_tol = 0.0;
  t.a = {a00};
  t.b = {{0.0}};
  return t;
}

}  // namespace

TEST_CASE("draws are deterministic, index-addressed, and distribution-correct") {
  const auto plan = manual_plan(8, 2, 8);
  GeneratorSpec spec;
  spec.seed = 99;

  const auto r1 = draw_variables(spec, plan, 0);
  const auto r2 = draw_variables(spec, plan, 0);
  CHECK(r1.xi == r2.xi);
  CHECK(r1.eta == r2.eta);

  // a larger plan reproduces the same variates on shared indices
  const auto big = draw_variables(spec, manual_plan(16, 3, 16), 0);
  for (long k = -7; k <= 7; ++k) CHECK(r1.xi_at(k) == big.xi_at(k));
  for (int j = 0; j < 2; ++j)
    for (long l = -7; l <= 7; ++l) CHECK(r1.eta_at(j, l) == big.eta_at(j, l));

  GeneratorSpec uni;
  uni.distribution = Driver::uniform_sqrt3;
  uni.seed = 3;
  const auto ru = draw_variables(uni, manual_plan(20000, 1, 1), 5);
  double mean = 0.0;
  for (double v : ru.xi) {
    CHECK(std::fabs(v) <= std::sqrt(3.0));
    mean += v;
  }
  CHECK(std::fabs(mean / ru.xi.size()) < 0.03);
}

TEST_CASE("gaussian stream moments at Monte Carlo scale") {
  rng::VariateStream s(12345, 0, 0);
  const std::size_t n = 1000000;
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = s.draw(Driver::gaussian, i);
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::fabs(mean) <= 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(var == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("model evaluation: linearity, exp identity, product route") {
  const auto kernel = make_example1_kernel();
  const auto fam = make_meyer();
  const auto plan = manual_plan(6, 2, 6);
  std::vector<double> grid;
  for (int i = 0; i <= 16; ++i) grid.push_back(i / 16.0);
  const auto table = build_table(kernel, fam, plan, grid, 1e-10);

  DrawRecord zero;
  zero.plan = plan;
  zero.xi.assign(11, 0.0);
  zero.eta.assign(2, std::vector<double>(11, 0.0));
  auto x = evaluate_x_hat(table, zero);
  for (double v : x) CHECK(v == 0.0);
  for (double v : evaluate_y_hat(x)) CHECK(v == 1.0);

  DrawRecord one = zero;
  one.xi[5] = 1.0;  // xi_0 only
  x = evaluate_x_hat(table, one);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(x[i] == doctest::Approx(table.a_at(0, i)).epsilon(1e-15));

  GeneratorSpec spec;
  spec.seed = 4;
  for (std::uint64_t p = 0; p < 50; ++p) {
    const auto rec = draw_variables(spec, plan, p);
    const auto xs = evaluate_x_hat(table, rec);
    const auto ys = evaluate_y_hat(xs);
    const auto yp = evaluate_y_hat_product(table, rec);
    for (std::size_t i = 0; i < ys.size(); ++i) {
      CHECK(std::fabs(ys[i] - yp[i]) <= 1e-12 * std::fabs(ys[i]));
      CHECK(ys[i] > 0.0);
      CHECK(ys[i] == doctest::Approx(std::exp(xs[i])).epsilon(1e-15));
    }
  }

  DrawRecord mismatch = zero;
  mismatch.plan = manual_plan(5, 2, 6);
  CHECK_THROWS_AS(evaluate_x_hat(table, mismatch), std::invalid_argument);
}

TEST_CASE("product route reports the overflowing factor") {
  const auto table = tiny_table(2.0);
  DrawRecord rec;
  rec.plan = table.plan;
  rec.xi = {400.0};
  rec.eta = {{0.0}};
  CHECK_THROWS_WITH_AS(evaluate_y_hat_product(table, rec),
                       doctest::Contains("overflows"), std::overflow_error);
}

TEST_CASE("batch prefix property and ensemble statistics") {
  const auto kernel = make_example1_kernel();
  const auto fam = make_meyer();
  const auto plan = manual_plan(12, 3, 12);
  std::vector<double> grid{0.0, 0.5, 1.0};
  const auto table = build_table(kernel, fam, plan, grid, 1e-10);
  GeneratorSpec spec;
  spec.seed = 31;

  const auto small = simulate_batch(table, spec, 10);
  const auto large = simulate_batch(table, spec, 100);
  for (std::size_t p = 0; p < small.size(); ++p)
    CHECK(small[p].x_hat == large[p].x_hat);

  // single path equals the draw+evaluate composition
  const auto rec0 = draw_variables(spec, plan, 0);
  CHECK(small[0].x_hat == evaluate_x_hat(table, rec0));

  // ensemble variance against the table energy, and the lognormal mean
  const std::size_t n = 20000;
  const auto batch = simulate_batch(table, spec, n);
  for (std::size_t ti = 1; ti < grid.size(); ++ti) {
    double sx = 0.0, sxx = 0.0, sy = 0.0;
    for (const auto& path : batch) {
      sx += path.x_hat[ti];
      sxx += path.x_hat[ti] * path.x_hat[ti];
      sy += path.y_hat[ti];
    }
    const double mean = sx / n;
    const double var = sxx / n - mean * mean;
    const double energy = table.energy(ti);
    CHECK(var == doctest::Approx(energy).epsilon(0.05));
    CHECK(std::log(sy / n) == doctest::Approx(0.5 * energy).epsilon(0.08));
  }

  // empirical covariance across two times matches the table reconstruction
  double sxy = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& path : batch) {
    sxy += path.x_hat[1] * path.x_hat[2];
    sa += path.x_hat[1];
    sb += path.x_hat[2];
  }
  const double cov_emp = sxy / n - (sa / n) * (sb / n);
  CHECK(cov_emp == doctest::Approx(table.reconstruct(1, 2)).epsilon(0.05));
}

TEST_CASE("wilson upper bound behaves") {
  CHECK(wilson_upper_bound(0, 2000) == doctest::Approx(0.001917).epsilon(1e-3));
  CHECK(wilson_upper_bound(2, 2000) > 2.0 / 2000.0);
  CHECK(wilson_upper_bound(10, 100) > wilson_upper_bound(5, 100));
  CHECK(wilson_upper_bound(100, 100) <= 1.0);
  CHECK_THROWS_AS(wilson_upper_bound(0, 0), std::invalid_argument);
}

TEST_CASE("driver moment bounds at small scale, including p = 0") {
  GeneratorSpec g;
  g.seed = 8;
  const auto gr = check_subgaussian_moments(g, 200000, {0.0, 1.0, 2.0, 3.0, 4.0});
  CHECK(gr.pass);
  CHECK(gr.moments[0].empirical == doctest::Approx(1.0));
  CHECK(gr.moments[0].bound == doctest::Approx(2.0));
  CHECK(gr.moments[2].empirical == doctest::Approx(1.0).epsilon(0.02));
  CHECK(gr.moments[2].bound == doctest::Approx(2.0 * 2.0 / M_E).epsilon(1e-12));

  GeneratorSpec u;
  u.distribution = Driver::uniform_sqrt3;
  u.seed = 8;
  const auto ur = check_subgaussian_moments(u, 200000);
  CHECK(ur.pass);
  CHECK(ur.moments[3].empirical == doctest::Approx(9.0 / 5.0).epsilon(0.02));
}

TEST_CASE("coefficient decay check and its negative control") {
  const auto kernel = make_example1_kernel();
  const auto fam = make_meyer();
  const auto c = compute_constants(kernel, fam);
  const auto rep = check_coefficient_decay(kernel, fam, c, 16, 4, 16,
                                           {0.0, 0.5, 1.0}, 1e-9, 1e-8);
  CHECK(rep.pass);
  CHECK(rep.worst_margin >= 0.0);

  PlannerConstants halved = c;
  halved.s1 *= 0.03;
  halved.s2 *= 0.03;
  halved.q1 *= 0.03;
  halved.q2 *= 0.03;
  halved.d *= 0.03;
  const auto bad = check_coefficient_decay(kernel, fam, halved, 16, 4, 16,
                                           {1.0}, 1e-9, 0.0);
  CHECK_FALSE(bad.pass);
  CHECK(!bad.violations.empty());
}

TEST_CASE("mean-square certificate check with negative and trivial controls") {
  const auto kernel = make_example1_kernel();
  const auto fam = make_meyer();
  const auto c = compute_constants(kernel, fam);

  const double delta = 0.05;
  const auto plan = plan_mean_square(c.inflated(), delta, 1.0);
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
  TruncationPlan cutoffs = plan;
  cutoffs.n0 += 16;
  cutoffs.n += 1;
  cutoffs.m.assign(static_cast<std::size_t>(cutoffs.n), plan.m.front() + 16);
  const auto rep = check_mean_square(kernel, fam, c, plan, delta, grid, cutoffs);
  CHECK(rep.pass);
  CHECK(rep.max_tail <= delta);

  // a drastically shrunk plan fails a small target
  const auto shrunk = manual_plan(2, 1, 2);
  TruncationPlan cut2 = manual_plan(64, 4, 64);
  const auto bad =
      check_mean_square(kernel, fam, c, shrunk, 1e-6, grid, cut2);
  CHECK_FALSE(bad.pass);

  // zero kernel: every tail vanishes
  Kernel zero = kernel;
  zero.name = "zero";
  zero.u = [](double, double) -> cdouble { return 0.0; };
  zero.u_dy = zero.u;
  zero.env_u1_linear = [](double) { return 0.0; };
  zero.env_u1_uniform = zero.env_u1_linear;
  zero.env_u2 = zero.env_u1_linear;
  zero.env_v = zero.env_u1_linear;
  zero.env_w = zero.env_u1_linear;
  PlannerConstants zc = compute_constants(zero, fam);
  const auto zrep =
      check_mean_square(zero, fam, zc, shrunk, 1e-12, grid, cut2);
  CHECK(zrep.pass);
  CHECK(zrep.max_tail == 0.0);
}

TEST_CASE("effective table covers the expansion up to its stated residual") {
  const auto kernel = make_example1_kernel();
  const auto fam = make_meyer();
  std::vector<double> grid{0.0, 0.25, 0.5, 0.75, 1.0};
  const auto eff = build_effective_table(kernel, fam, grid);
  CHECK(eff.k_hi >= 32);
  CHECK(eff.b.size() >= 2);
  for (std::size_t ti = 0; ti < grid.size(); ++ti) {
    CHECK(eff.residual[ti] >= 0.0);
    CHECK(eff.residual[ti] < 1e-7);
  }
  // effective values agree with the reference path
  for (long k = -8; k <= 8; ++k)
    CHECK(eff.a_at(k, 4) ==
          doctest::Approx(coeff_a(kernel, fam, k, 1.0, 1e-11)).epsilon(1e-8));
}

TEST_CASE("uniform reliability: coupled identity, pass, negative control") {
  const auto kernel = make_example1_kernel();
  const auto fam = make_meyer();
  const auto plan = manual_plan(8, 2, 8);
  GeneratorSpec spec;
  spec.seed = 42;
  AccuracyRequest req;
  req.norm = AccuracyRequest::Norm::uniform_relative;
  req.delta = 0.1;
  req.epsilon = 0.05;
  req.T = 1.0;
  ReliabilityOptions opt;
  opt.grid_points = 41;

  const auto same = check_reliability_uniform(kernel, fam, req, plan, 1, 300,
                                              spec, opt);
  CHECK(same.exceedance_count == 0);
  CHECK(same.max_statistic == 0.0);
  CHECK(same.window_complete);

  const auto rep = check_reliability_uniform(kernel, fam, req, plan, 4, 500,
                                             spec, opt);
  CHECK(rep.pass);
  CHECK(rep.exceedance_count == 0);
  CHECK(rep.wilson_upper <= req.epsilon);
  CHECK(rep.window_slots_computed > 0);

  AccuracyRequest tiny = req;
  tiny.delta = 1e-6;
  const auto bad = check_reliability_uniform(kernel, fam, tiny, plan, 4, 300,
                                             spec, opt);
  CHECK(bad.exceedance_count > 250);
  CHECK_FALSE(bad.pass);
}

TEST_CASE("lp reliability and the Holder relation between path statistics") {
  const auto kernel = make_example1_kernel();
  const auto fam = make_meyer();
  const auto plan = manual_plan(8, 2, 8);
  GeneratorSpec spec;
  spec.seed = 77;
  AccuracyRequest req;
  req.norm = AccuracyRequest::Norm::lp;
  req.delta = 0.2;
  req.epsilon = 0.05;
  req.p = 2.0;
  req.T = 1.0;
  ReliabilityOptions opt;
  opt.grid_points = 41;

  const auto same = check_reliability_lp(kernel, fam, req, plan, 1, 200, spec, opt);
  CHECK(same.exceedance_count == 0);
  CHECK(same.max_statistic == 0.0);

  const auto rep = check_reliability_lp(kernel, fam, req, plan, 4, 400, spec, opt);
  CHECK(rep.pass);
  CHECK(rep.exceedance_count == 0);

  // per-path Holder: ||f||_1 <= sqrt(T) ||f||_2 for the coupled deviation,
  // computed directly from two table evaluations with shared slot draws
  const auto ref_plan = plan.scaled(4);
  std::vector<double> grid;
  for (int i = 0; i <= 40; ++i) grid.push_back(i / 40.0);
  const auto table = build_table(kernel, fam, plan, grid, 1e-10);
  const auto table_ref = build_table(kernel, fam, ref_plan, grid, 1e-10);
  for (std::uint64_t p = 0; p < 20; ++p) {
    const auto rec_ref = draw_variables(spec, ref_plan, p);
    DrawRecord rec;
    rec.plan = plan;
    rec.spec = spec;
    rec.path = p;
    rec.xi.assign(15, 0.0);
    rec.eta.assign(2, std::vector<double>(15, 0.0));
    for (long k = -7; k <= 7; ++k)
      rec.xi[static_cast<std::size_t>(k + 7)] = rec_ref.xi_at(k);
    for (int j = 0; j < 2; ++j)
      for (long l = -7; l <= 7; ++l)
        rec.eta[static_cast<std::size_t>(j)][static_cast<std::size_t>(l + 7)] =
            rec_ref.eta_at(j, l);
    const auto y = evaluate_y_hat(evaluate_x_hat(table, rec));
    const auto yr = evaluate_y_hat(evaluate_x_hat(table_ref, rec_ref));
    double l1 = 0.0, l2 = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double w = (i == 0 || i + 1 == grid.size()) ? 0.0125 : 0.025;
      l1 += w * std::fabs(yr[i] - y[i]);
      l2 += w * (yr[i] - y[i]) * (yr[i] - y[i]);
    }
    l2 = std::sqrt(l2);
    CHECK(l1 <= std::sqrt(1.0) * l2 * (1 + 1e-12));
  }
}
