#ifndef WAVESIM_VALIDATION_HPP
#define WAVESIM_VALIDATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavesim/coefficients.hpp"
#include "wavesim/planner.hpp"
#include "wavesim/simulator.hpp"

namespace wavesim {

// Upper endpoint of the 95% Wilson score interval for a binomial proportion.
inline double wilson_upper_bound(std::size_t count, std::size_t n,
                                 double z = 1.959963984540054) {
  if (n == 0) throw std::invalid_argument("wilson_upper_bound: n must be > 0");
  const double nn = static_cast<double>(n);
  const double phat = static_cast<double>(count) / nn;
  const double z2 = z * z;
  const double centre = phat + z2 / (2.0 * nn);
  const double spread =
      z * std::sqrt(phat * (1.0 - phat) / nn + z2 / (4.0 * nn * nn));
  return (centre + spread) / (1.0 + z2 / nn);
}

// ---------------------------------------------------------------------------
// Coefficient decay check
// ---------------------------------------------------------------------------
struct DecayViolation {
  std::string which;
  long k = 0;
  int j = 0;
  long l = 0;
  double t = 0;
  double lhs = 0, rhs = 0;
};

struct DecayReport {
  bool pass = true;
  double worst_margin = std::numeric_limits<double>::infinity();
  double a00_bound = 0.0;
  std::vector<DecayViolation> violations;  // first few only
  std::size_t checks = 0;
};

// Verifies the four decay bounds for every coefficient on a (t, k, j, l) grid,
// with `slack` added to each right side for quadrature error.
inline DecayReport check_coefficient_decay(const Kernel& kernel,
                                           const WaveletFamily& family,
                                           const PlannerConstants& c,
                                           long k_max, int j_max, long l_max,
                                           const std::vector<double>& ts,
                                           double quad_tol = 1e-10,
                                           double slack = 1e-8) {
  if (!kernel.has_uniform_envelopes)
    throw std::invalid_argument(
        "check_coefficient_decay: kernel lacks the time-uniform envelopes");
  DecayReport rep;
  const double cut = std::min(kernel.domain_cut(1e-14), family.phi_cut(1e-12));
  rep.a00_bound =
      detail::kInvSqrt2Pi *
      quad::integrate(
          [&](double y) {
            return kernel.env_u1_uniform(y) * std::abs(family.phi_hat(y));
          },
          -cut, cut, 1e-9)
          .value;

  auto record = [&](const std::string& which, double lhs, double rhs, long k,
                    int j, long l, double t) {
    ++rep.checks;
    const double margin = rhs + slack - lhs;
    rep.worst_margin = std::min(rep.worst_margin, margin);
    if (margin < 0) {
      rep.pass = false;
      if (rep.violations.size() < 16)
        rep.violations.push_back({which, k, j, l, t, lhs, rhs + slack});
    }
  };

  for (double t : ts) {
    for (long k = -k_max; k <= k_max; ++k) {
      const double v = std::fabs(coeff_a(kernel, family, k, t, quad_tol));
      if (k == 0)
        record("a00", v, rep.a00_bound, k, 0, 0, t);
      else
        record("a0k", v, (c.s1 + c.s2 * std::fabs(t)) / std::fabs(k), k, 0, 0, t);
    }
    for (int j = 0; j <= j_max; ++j) {
      const double mass = detail::level_mass_bound(kernel, family, j, t);
      for (long l = -l_max; l <= l_max; ++l) {
        const double v =
            std::fabs(detail::coeff_b_impl(kernel, family, j, l, t, quad_tol, mass));
        if (l == 0)
          record("bj0", v, c.d / std::pow(2.0, 1.5 * j), 0, j, l, t);
        else
          record("bjl", v,
                 (c.q1 + c.q2 * std::fabs(t)) /
                     (std::pow(2.0, 0.5 * j) * std::fabs(l)),
                 0, j, l, t);
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Mean-square certificate check
// ---------------------------------------------------------------------------
struct MeanSquareReport {
  bool pass = false;
  double delta = 0;
  double max_tail = 0;
  double argmax_t = 0;
  TruncationPlan plan, cutoffs;
};

inline MeanSquareReport check_mean_square(const Kernel& kernel,
                                          const WaveletFamily& family,
                                          const PlannerConstants& c,
                                          const TruncationPlan& plan,
                                          double delta,
                                          const std::vector<double>& t_grid,
                                          const TruncationPlan& cutoffs,
                                          double tol = 1e-10) {
  MeanSquareReport rep;
  rep.delta = delta;
  rep.plan = plan;
  rep.cutoffs = cutoffs;
  for (double t : t_grid) {
    const double tail = tail_energy(kernel, family, c, plan, cutoffs, t, tol);
    if (tail > rep.max_tail) {
      rep.max_tail = tail;
      rep.argmax_t = t;
    }
  }
  rep.pass = rep.max_tail <= delta;
  return rep;
}

// ---------------------------------------------------------------------------
// Effective numerical support of the expansion with a completeness residual.
// Coefficients outside the computed block are bounded, per grid time, by
// R(t,t) - (computed energy), which is an upper bound on their total energy.
// ---------------------------------------------------------------------------
struct EffectiveTable {
  std::vector<double> t_grid;
  long k_hi = 0;
  std::vector<long> l_hi;          // per computed level
  std::vector<double> a;           // (2 k_hi + 1) x nt
  std::vector<std::vector<double>> b;
  std::vector<double> residual;    // per grid time, includes quadrature slack
  double coef_floor = 0;
  double row_tol = 0;

  std::size_t nt() const { return t_grid.size(); }
  double a_at(long k, std::size_t ti) const {
    return a[static_cast<std::size_t>(k + k_hi) * nt() + ti];
  }
  double b_at(int j, long l, std::size_t ti) const {
    return b[static_cast<std::size_t>(j)]
            [static_cast<std::size_t>(l + l_hi[static_cast<std::size_t>(j)]) *
                 nt() +
             ti];
  }
};

struct EffectiveOptions {
  double coef_floor = 1e-9;   // treat coefficient rows below this as tail
  double row_tol = 1e-11;     // quadrature tolerance of the bulk rows
  double cov_tol = 1e-9;      // tolerance of the covariance diagonal
  long k_cap = 1 << 14;
  long l_cap = 1 << 15;
  int level_cap = 48;
};

inline EffectiveTable build_effective_table(const Kernel& kernel,
                                            const WaveletFamily& family,
                                            const std::vector<double>& t_grid,
                                            const EffectiveOptions& opt = {}) {
  if (t_grid.empty())
    throw std::invalid_argument("build_effective_table: empty t_grid");
  EffectiveTable tab;
  tab.t_grid = t_grid;
  tab.coef_floor = opt.coef_floor;
  tab.row_tol = opt.row_tol;
  const std::size_t nt = t_grid.size();
  double t_env = 0.0;
  for (double t : t_grid) t_env = std::max(t_env, std::fabs(t));

  // grow the scaling row until a trailing quarter stays below the floor
  long k_hi = 32;
  std::vector<std::vector<double>> rows(nt);
  for (;;) {
    bool settled = true;
    for (std::size_t ti = 0; ti < nt; ++ti) {
      rows[ti] = coeff_row_a(kernel, family, t_grid[ti], k_hi, opt.row_tol);
      for (long k = (3 * k_hi) / 4; k <= k_hi && settled; ++k)
        if (std::fabs(rows[ti][static_cast<std::size_t>(k_hi + k)]) >=
                opt.coef_floor ||
            std::fabs(rows[ti][static_cast<std::size_t>(k_hi - k)]) >=
                opt.coef_floor)
          settled = false;
      if (!settled) break;
    }
    if (settled || k_hi >= opt.k_cap) break;
    k_hi *= 2;
  }
  tab.k_hi = k_hi;
  tab.a.resize(static_cast<std::size_t>(2 * k_hi + 1) * nt);
  for (std::size_t ti = 0; ti < nt; ++ti)
    for (long k = -k_hi; k <= k_hi; ++k)
      tab.a[static_cast<std::size_t>(k + k_hi) * nt + ti] =
          rows[ti][static_cast<std::size_t>(k + k_hi)];

  // levels until the certified level mass dies below the floor
  for (int j = 0; j < opt.level_cap; ++j) {
    if (detail::level_mass_bound(kernel, family, j, t_env) < 0.5 * opt.coef_floor)
      break;
    long l_hi = 32;
    for (;;) {
      bool settled = true;
      for (std::size_t ti = 0; ti < nt; ++ti) {
        rows[ti] = coeff_row_b(kernel, family, j, t_grid[ti], l_hi, opt.row_tol);
        for (long l = (3 * l_hi) / 4; l <= l_hi && settled; ++l)
          if (std::fabs(rows[ti][static_cast<std::size_t>(l_hi + l)]) >=
                  opt.coef_floor ||
              std::fabs(rows[ti][static_cast<std::size_t>(l_hi - l)]) >=
                  opt.coef_floor)
            settled = false;
        if (!settled) break;
      }
      if (settled || l_hi >= opt.l_cap) break;
      l_hi *= 2;
    }
    tab.l_hi.push_back(l_hi);
    auto& level = tab.b.emplace_back();
    level.resize(static_cast<std::size_t>(2 * l_hi + 1) * nt);
    for (std::size_t ti = 0; ti < nt; ++ti)
      for (long l = -l_hi; l <= l_hi; ++l)
        level[static_cast<std::size_t>(l + l_hi) * nt + ti] =
            rows[ti][static_cast<std::size_t>(l + l_hi)];
  }

  // completeness residual per grid time
  tab.residual.resize(nt);
  std::size_t slots = static_cast<std::size_t>(2 * k_hi + 1);
  for (long lh : tab.l_hi) slots += static_cast<std::size_t>(2 * lh + 1);
  for (std::size_t ti = 0; ti < nt; ++ti) {
    double energy = 0.0, abs_sum = 0.0;
    for (long k = -k_hi; k <= k_hi; ++k) {
      const double v = tab.a_at(k, ti);
      energy += v * v;
      abs_sum += std::fabs(v);
    }
    for (std::size_t j = 0; j < tab.b.size(); ++j)
      for (long l = -tab.l_hi[j]; l <= tab.l_hi[j]; ++l) {
        const double v = tab.b_at(static_cast<int>(j), l, ti);
        energy += v * v;
        abs_sum += std::fabs(v);
      }
    const double cov = covariance(kernel, t_grid[ti], t_grid[ti], opt.cov_tol);
    const double quad_slack = opt.cov_tol + 2.0 * opt.row_tol * abs_sum +
                              static_cast<double>(slots) * opt.row_tol * opt.row_tol;
    tab.residual[ti] = std::max(0.0, cov - energy) + quad_slack;
  }
  return tab;
}

// ---------------------------------------------------------------------------
// Reliability checks against a coupled reference model
// ---------------------------------------------------------------------------
struct ReliabilityReport {
  AccuracyRequest request;
  TruncationPlan plan;
  TruncationPlan reference_plan;
  std::size_t n_paths = 0;
  std::size_t exceedance_count = 0;
  double empirical_probability = 0;
  double wilson_upper = 0;
  bool pass = false;

  // Everything the statistic could not compute explicitly is carried as a
  // certified bound; these fields report how much that bound contributed.
  double sigma_neglect_max = 0;   // sup over grid of the residual bound (std dev)
  double stat_slack_max = 0;      // largest additive contribution to a statistic
  double max_statistic = 0;       // largest per-path statistic upper bound
  bool window_complete = false;   // model/reference window fully materialized
  std::size_t window_slots_computed = 0;
  long long window_slots_total = 0;
  int grid_points = 0;
  std::string note;
};

struct ReliabilityOptions {
  int grid_points = 201;
  EffectiveOptions effective;
  double tail_sigmas = 8.0;  // sub-Gaussian tail multiplier for bound terms
};

namespace detail {

struct WindowSlot {
  int stream;  // 0 = scaling, 1 + j = level j
  long index;
  const double* vals;  // nt values
};

inline std::vector<double> uniform_grid(double T, int n) {
  if (n < 2) throw std::invalid_argument("uniform_grid: need at least 2 points");
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    g[static_cast<std::size_t>(i)] = T * i / (n - 1);
  return g;
}

// Slots of `outer` \ `inner` that the effective table materializes, plus a
// completeness flag for the part it does not.
inline std::vector<WindowSlot> collect_window(const EffectiveTable& tab,
                                              const TruncationPlan& inner,
                                              const TruncationPlan& outer,
                                              bool* complete) {
  std::vector<WindowSlot> slots;
  const std::size_t nt = tab.nt();
  *complete = true;

  if (outer.n0 > inner.n0) {
    for (long k = inner.n0; k <= std::min(outer.n0 - 1, tab.k_hi); ++k) {
      slots.push_back({0, k, &tab.a[static_cast<std::size_t>(k + tab.k_hi) * nt]});
      if (k != 0)
        slots.push_back(
            {0, -k, &tab.a[static_cast<std::size_t>(-k + tab.k_hi) * nt]});
    }
    if (outer.n0 - 1 > tab.k_hi) *complete = false;
  }
  const int levels = static_cast<int>(tab.b.size());
  for (int j = 0; j < outer.n; ++j) {
    const long lo = j < inner.n ? inner.m_at(j) : 0;
    const long hi = outer.m_at(j) - 1;
    if (hi < lo && j < levels) continue;
    if (j >= levels) {
      // level entirely beyond the effective support; covered by the residual
      if (hi >= lo) *complete = false;
      continue;
    }
    const long lh = tab.l_hi[static_cast<std::size_t>(j)];
    const auto& level = tab.b[static_cast<std::size_t>(j)];
    if (lo == 0 && hi >= 0) {
      for (long l = -std::min(hi, lh); l <= std::min(hi, lh); ++l)
        slots.push_back(
            {1 + j, l, &level[static_cast<std::size_t>(l + lh) * nt]});
    } else {
      for (long l = lo; l <= std::min(hi, lh); ++l) {
        slots.push_back({1 + j, l, &level[static_cast<std::size_t>(l + lh) * nt]});
        slots.push_back(
            {1 + j, -l, &level[static_cast<std::size_t>(-l + lh) * nt]});
      }
    }
    if (hi > lh) *complete = false;
  }
  return slots;
}

}  // namespace detail

// Empirical uniform-norm reliability of `plan` against a reference model with
// ref_multiplier-times larger truncation sizes sharing every common draw.
// Shared draws cancel exactly in the ratio, so only the window between the
// two plans enters; window terms outside the effective support are carried
// through their certified residual bound, counted against the statistic.
inline ReliabilityReport check_reliability_uniform(
    const Kernel& kernel, const WaveletFamily& family,
    const AccuracyRequest& request, const TruncationPlan& plan,
    long ref_multiplier, std::size_t n_paths, const GeneratorSpec& spec,
    const ReliabilityOptions& opt = {}) {
  request.validate();
  plan.validate();
  if (request.norm != AccuracyRequest::Norm::uniform_relative)
    throw std::invalid_argument(
        "check_reliability_uniform: request norm must be uniform");
  if (ref_multiplier < 1)
    throw std::invalid_argument("check_reliability_uniform: ref_multiplier >= 1");
  if (n_paths < 1)
    throw std::invalid_argument("check_reliability_uniform: n_paths >= 1");

  ReliabilityReport rep;
  rep.request = request;
  rep.plan = plan;
  rep.reference_plan = plan.scaled(ref_multiplier);
  rep.n_paths = n_paths;
  rep.grid_points = opt.grid_points;
  rep.window_slots_total =
      rep.reference_plan.total_terms() - plan.total_terms();

  const auto grid = detail::uniform_grid(request.T, opt.grid_points);
  const auto tab = build_effective_table(kernel, family, grid, opt.effective);
  const std::size_t nt = grid.size();

  bool complete = true;
  auto window = detail::collect_window(tab, plan, rep.reference_plan, &complete);
  rep.window_complete = complete;
  rep.window_slots_computed = window.size();

  std::vector<double> sigma(nt, 0.0);
  double sig_max = 0.0;
  if (!complete) {
    for (std::size_t i = 0; i < nt; ++i) {
      sigma[i] = std::sqrt(tab.residual[i]);
      sig_max = std::max(sig_max, sigma[i]);
    }
  }
  rep.sigma_neglect_max = sig_max;
  rep.stat_slack_max =
      std::expm1(opt.tail_sigmas * sig_max);  // at D == 0

  std::vector<double> diff(nt);
  for (std::size_t p = 0; p < n_paths; ++p) {
    PathVariates v(spec, p);
    std::fill(diff.begin(), diff.end(), 0.0);
    for (const auto& slot : window) {
      const double draw = slot.stream == 0 ? v.xi(slot.index)
                                           : v.eta(slot.stream - 1, slot.index);
      if (draw == 0.0) continue;
      for (std::size_t i = 0; i < nt; ++i) diff[i] += draw * slot.vals[i];
    }
    double stat = 0.0;
    for (std::size_t i = 0; i < nt; ++i) {
      const double bound = std::fabs(diff[i]) + opt.tail_sigmas * sigma[i];
      stat = std::max(stat, std::expm1(bound));
    }
    rep.max_statistic = std::max(rep.max_statistic, stat);
    if (stat > request.delta) ++rep.exceedance_count;
  }

  rep.empirical_probability =
      static_cast<double>(rep.exceedance_count) / static_cast<double>(n_paths);
  rep.wilson_upper = wilson_upper_bound(rep.exceedance_count, n_paths);
  rep.pass = rep.wilson_upper <= request.epsilon;
  rep.note =
      "statistic per path is an upper bound: |ratio deviation| <= "
      "expm1(|window sum| + " +
      std::to_string(opt.tail_sigmas) +
      " * sigma_residual); the residual bound covers every slot outside the "
      "effective support";
  return rep;
}

// L_p reliability with the same coupling. The path statistic integrates
// |Y_ref - Y| = Y |expm1(window sum)| by the composite trapezoid rule; model
// terms outside the effective support contribute a multiplicative
// exp(tail_sigmas * sigma) bound on Y plus the window bound.
inline ReliabilityReport check_reliability_lp(
    const Kernel& kernel, const WaveletFamily& family,
    const AccuracyRequest& request, const TruncationPlan& plan,
    long ref_multiplier, std::size_t n_paths, const GeneratorSpec& spec,
    const ReliabilityOptions& opt = {}) {
  request.validate();
  plan.validate();
  if (request.norm != AccuracyRequest::Norm::lp)
    throw std::invalid_argument("check_reliability_lp: request norm must be lp");
  if (ref_multiplier < 1)
    throw std::invalid_argument("check_reliability_lp: ref_multiplier >= 1");

  ReliabilityReport rep;
  rep.request = request;
  rep.plan = plan;
  rep.reference_plan = plan.scaled(ref_multiplier);
  rep.n_paths = n_paths;
  rep.grid_points = opt.grid_points;
  rep.window_slots_total =
      rep.reference_plan.total_terms() - plan.total_terms();

  const auto grid = detail::uniform_grid(request.T, opt.grid_points);
  const auto tab = build_effective_table(kernel, family, grid, opt.effective);
  const std::size_t nt = grid.size();

  bool window_complete = true, model_complete = true;
  TruncationPlan zero;  // retains nothing; makes collect_window enumerate all
  zero.n0 = 0;
  zero.n = 0;
  auto window = detail::collect_window(tab, plan, rep.reference_plan,
                                       &window_complete);
  auto model_slots = detail::collect_window(tab, zero, plan, &model_complete);
  rep.window_complete = window_complete;
  rep.window_slots_computed = window.size();

  std::vector<double> sigma(nt, 0.0);
  double sig_max = 0.0;
  for (std::size_t i = 0; i < nt; ++i) {
    sigma[i] = std::sqrt(tab.residual[i]);
    sig_max = std::max(sig_max, sigma[i]);
  }
  rep.sigma_neglect_max = sig_max;

  // trapezoid weights
  std::vector<double> w(nt, request.T / (opt.grid_points - 1));
  w.front() *= 0.5;
  w.back() *= 0.5;

  std::vector<double> x(nt), diff(nt);
  const bool ref_equals_plan = rep.reference_plan == plan;
  for (std::size_t p = 0; p < n_paths; ++p) {
    PathVariates v(spec, p);
    std::fill(x.begin(), x.end(), 0.0);
    std::fill(diff.begin(), diff.end(), 0.0);
    for (const auto& slot : model_slots) {
      const double draw = slot.stream == 0 ? v.xi(slot.index)
                                           : v.eta(slot.stream - 1, slot.index);
      for (std::size_t i = 0; i < nt; ++i) x[i] += draw * slot.vals[i];
    }
    for (const auto& slot : window) {
      const double draw = slot.stream == 0 ? v.xi(slot.index)
                                           : v.eta(slot.stream - 1, slot.index);
      for (std::size_t i = 0; i < nt; ++i) diff[i] += draw * slot.vals[i];
    }
    double acc = 0.0, slack_acc = 0.0;
    for (std::size_t i = 0; i < nt; ++i) {
      const double guard = ref_equals_plan ? 0.0 : opt.tail_sigmas * sigma[i];
      const double model_guard = model_complete ? 0.0 : opt.tail_sigmas * sigma[i];
      const double y_ub = std::exp(x[i] + model_guard);
      const double dev = std::expm1(std::fabs(diff[i]) + guard);
      acc += w[i] * std::pow(y_ub * dev, request.p);
      slack_acc += w[i] * std::pow(y_ub * std::expm1(guard), request.p);
    }
    const double stat = std::pow(acc, 1.0 / request.p);
    rep.stat_slack_max = std::max(
        rep.stat_slack_max, std::pow(slack_acc, 1.0 / request.p));
    rep.max_statistic = std::max(rep.max_statistic, stat);
    if (stat > request.delta) ++rep.exceedance_count;
  }

  rep.empirical_probability =
      static_cast<double>(rep.exceedance_count) / static_cast<double>(n_paths);
  rep.wilson_upper = wilson_upper_bound(rep.exceedance_count, n_paths);
  rep.pass = rep.wilson_upper <= request.epsilon;
  rep.note =
      "per-path statistic is a trapezoid L_p norm of an upper bound on "
      "|Y_ref - Y|; residual bounds cover slots outside the effective support";
  return rep;
}

// ---------------------------------------------------------------------------
// Driver moment check: empirical E|xi|^p against 2 (p/e)^{p/2}.
// ---------------------------------------------------------------------------
struct MomentCheck {
  double p = 0;
  double empirical = 0;
  double bound = 0;
  double stderr_est = 0;
  bool pass = false;
};

struct SubGaussianReport {
  Driver distribution;
  std::size_t n_draws = 0;
  std::vector<MomentCheck> moments;
  bool pass = true;
};

inline SubGaussianReport check_subgaussian_moments(
    const GeneratorSpec& spec, std::size_t n_draws,
    const std::vector<double>& ps = {1.0, 2.0, 3.0, 4.0},
    double mc_sigmas = 5.0) {
  if (n_draws < 100)
    throw std::invalid_argument("check_subgaussian_moments: n_draws too small");
  SubGaussianReport rep;
  rep.distribution = spec.distribution;
  rep.n_draws = n_draws;
  rng::VariateStream stream(spec.seed, 0, 0);
  std::vector<double> sum(ps.size(), 0.0), sumsq(ps.size(), 0.0);
  for (std::size_t i = 0; i < n_draws; ++i) {
    const double x = std::fabs(stream.draw(spec.distribution, i));
    for (std::size_t q = 0; q < ps.size(); ++q) {
      const double m = std::pow(x, ps[q]);
      sum[q] += m;
      sumsq[q] += m * m;
    }
  }
  for (std::size_t q = 0; q < ps.size(); ++q) {
    MomentCheck chk;
    chk.p = ps[q];
    chk.empirical = sum[q] / static_cast<double>(n_draws);
    const double var =
        std::max(0.0, sumsq[q] / static_cast<double>(n_draws) -
                          chk.empirical * chk.empirical);
    chk.stderr_est = std::sqrt(var / static_cast<double>(n_draws));
    chk.bound = 2.0 * std::pow(ps[q] / M_E, 0.5 * ps[q]);
    chk.pass = chk.empirical <= chk.bound + mc_sigmas * chk.stderr_est;
    rep.pass = rep.pass && chk.pass;
    rep.moments.push_back(chk);
  }
  return rep;
}

}  // namespace wavesim

#endif  // WAVESIM_VALIDATION_HPP
