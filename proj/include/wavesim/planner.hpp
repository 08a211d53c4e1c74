#ifndef WAVESIM_PLANNER_HPP
#define WAVESIM_PLANNER_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavesim/kernels.hpp"
#include "wavesim/plan.hpp"
#include "wavesim/quadrature.hpp"
#include "wavesim/wavelets.hpp"

namespace wavesim {

// Envelope integrals feeding the truncation bounds. Names follow the role of
// the envelope they integrate:
//   e1,e2,f1,f2  -- time-linear envelope (mean-square tail bounds)
//   a1,b0,b1     -- increment envelopes (tail increment bound)
//   s1,s2,q1,q2,d -- time-uniform envelope (coefficient decay bounds)
struct PlannerConstants {
  double e1 = 0, e2 = 0, f1 = 0, f2 = 0;
  double a1 = 0, b0 = 0, b1 = 0;
  double s1 = 0, s2 = 0, q1 = 0, q2 = 0, d = 0;
  // single sup|psi_hat'| bound; enters both the decay constants (f/q/d) and
  // the increment constants (b0/b1), which coincide for these families
  double c_bound = 0;
  std::map<std::string, double> quad_errors;

  // Safety margin against quadrature error; only ever enlarges plans.
  PlannerConstants inflated(double factor = 1.01) const {
    PlannerConstants c = *this;
    for (double* x : {&c.e1, &c.e2, &c.f1, &c.f2, &c.a1, &c.b0, &c.b1, &c.s1,
                      &c.s2, &c.q1, &c.q2, &c.d})
      *x *= factor;
    return c;
  }
};

namespace detail {

constexpr double kInvSqrt2Pi = 0.3989422804014327;  // 1/sqrt(2*pi)

// Minimal integer strictly greater than x (never below 1). Values within
// relative fuzz of an integer are treated as that integer, which can only
// bump the result up by one.
inline long ceil_strict(double x) {
  if (!(x > 0)) return 1;
  if (x > 9e18) throw std::overflow_error("plan bound exceeds integer range");
  const double r = std::nearbyint(x);
  if (std::fabs(x - r) <= 1e-9 * std::max(1.0, std::fabs(x)))
    return std::max(1L, static_cast<long>(r) + 1);
  return std::max(1L, static_cast<long>(std::ceil(x)));
}

// Minimal integer >= x with the same integrality fuzz.
inline long ceil_geq(double x) {
  if (!(x > 0)) return 1;
  if (x > 9e18) throw std::overflow_error("plan bound exceeds integer range");
  const double r = std::nearbyint(x);
  if (std::fabs(x - r) <= 1e-9 * std::max(1.0, std::fabs(x)))
    return std::max(1L, static_cast<long>(r));
  return std::max(1L, static_cast<long>(std::ceil(x)));
}

inline double log2_pos(double x) {
  return x > 0 ? std::log2(x) : -std::numeric_limits<double>::infinity();
}
inline double log8_pos(double x) {
  return x > 0 ? std::log2(x) / 3.0 : -std::numeric_limits<double>::infinity();
}

struct ScalarIntegral {
  double value;
  double error;
};

// Wide symmetric domains hide concentrated integrands from a single panel;
// dyadic seeds keep the initial estimate honest.
inline std::vector<double> geometric_seeds(double hi) {
  std::vector<double> s;
  for (double x = 0.5; x < hi; x *= 2.0) {
    s.push_back(x);
    s.push_back(-x);
  }
  return s;
}

// Quadrature with a relative-error goal, two passes when the first estimate
// is too loose.
template <typename F>
ScalarIntegral integrate_rel(F&& f, double a, double b, double rel_tol) {
  const auto seeds = geometric_seeds(std::max(std::fabs(a), std::fabs(b)));
  auto first = quad::integrate(f, a, b, 1e-9, seeds);
  double scale = std::fabs(first.value);
  if (scale == 0.0) return {0.0, first.error};
  if (first.error <= rel_tol * scale) return {first.value, first.error};
  const double target = std::max(0.5 * rel_tol * scale, 1e-14 * (1.0 + scale));
  try {
    auto second = quad::integrate(f, a, b, target, seeds);
    return {second.value, second.error};
  } catch (const quad::quadrature_error& e) {
    if (e.error_bound <= rel_tol * e.best_estimate)
      return {e.best_estimate, e.error_bound};
    throw;
  }
}

}  // namespace detail

// All envelope constants for a kernel/family pairing, by adaptive quadrature
// with relative error <= rel_tol each.
inline PlannerConstants compute_constants(const Kernel& kernel,
                                          const WaveletFamily& family,
                                          double rel_tol = 0.01) {
  using detail::kInvSqrt2Pi;
  auto require = [&](bool ok, const char* constant, const char* envelope) {
    if (!ok)
      throw std::invalid_argument(std::string("compute_constants: ") + constant +
                                  " requires kernel envelope " + envelope);
  };
  require(kernel.has_linear_envelopes, "e1/e2/f1/f2", "env_u1_linear+env_u2");
  require(kernel.has_increment_envelopes, "a1/b0/b1", "env_v+env_w");
  require(kernel.has_uniform_envelopes, "s1/s2/q1/q2/d", "env_u1_uniform+env_u2");

  const double cut = kernel.domain_cut(1e-12);
  const double fcut = std::min(cut, family.phi_cut(1e-12));
  const double C = family.c_bound;

  PlannerConstants c;
  c.c_bound = C;
  auto record = [&](const char* name, detail::ScalarIntegral s, double factor,
                    double* slot) {
    *slot = factor * s.value;
    c.quad_errors[name] = factor * s.error;
  };

  auto abs_phi = [&](double y) { return std::abs(family.phi_hat(y)); };
  auto abs_phi_d = [&](double y) { return std::abs(family.phi_hat_deriv(y)); };

  // time-linear envelope family
  record("e1", detail::integrate_rel(
                   [&](double y) { return kernel.env_u1_linear(y) * abs_phi(y); },
                   -fcut, fcut, rel_tol),
         kInvSqrt2Pi, &c.e1);
  {
    auto i1 = detail::integrate_rel(
        [&](double y) { return kernel.env_u1_linear(y) * abs_phi_d(y); }, -fcut,
        fcut, rel_tol);
    auto i2 = detail::integrate_rel(
        [&](double y) { return kernel.env_u2(y) * abs_phi(y); }, -fcut, fcut,
        rel_tol);
    c.e2 = kInvSqrt2Pi * (i1.value + i2.value);
    c.quad_errors["e2"] = kInvSqrt2Pi * (i1.error + i2.error);
  }
  record("f1", detail::integrate_rel(
                   [&](double y) { return kernel.env_u1_linear(y) * std::fabs(y); },
                   -cut, cut, rel_tol),
         C * kInvSqrt2Pi, &c.f1);
  record("f2",
         detail::integrate_rel(
             [&](double y) {
               return kernel.env_u1_linear(y) + std::fabs(y) * kernel.env_u2(y);
             },
             -cut, cut, rel_tol),
         C * kInvSqrt2Pi, &c.f2);

  // increment envelope family
  {
    auto i1 = detail::integrate_rel(
        [&](double y) { return kernel.env_v(y) * abs_phi(y); }, -fcut, fcut,
        rel_tol);
    auto i2 = detail::integrate_rel(
        [&](double y) { return kernel.env_w(y) * abs_phi_d(y); }, -fcut, fcut,
        rel_tol);
    c.a1 = kInvSqrt2Pi * (i1.value + i2.value);
    c.quad_errors["a1"] = kInvSqrt2Pi * (i1.error + i2.error);
  }
  record("b0", detail::integrate_rel(
                   [&](double y) { return kernel.env_w(y) * std::fabs(y); }, -cut,
                   cut, rel_tol),
         C * kInvSqrt2Pi, &c.b0);
  record("b1",
         detail::integrate_rel(
             [&](double y) {
               return kernel.env_w(y) + std::fabs(y) * kernel.env_v(y);
             },
             -cut, cut, rel_tol),
         C * kInvSqrt2Pi, &c.b1);

  // time-uniform envelope family
  record("s1", detail::integrate_rel(
                   [&](double y) { return kernel.env_u1_uniform(y) * abs_phi_d(y); },
                   -fcut, fcut, rel_tol),
         kInvSqrt2Pi, &c.s1);
  record("s2", detail::integrate_rel(
                   [&](double y) { return kernel.env_u2(y) * abs_phi(y); }, -fcut,
                   fcut, rel_tol),
         kInvSqrt2Pi, &c.s2);
  record("q1", detail::integrate_rel(
                   [&](double y) { return kernel.env_u1_uniform(y); }, -cut, cut,
                   rel_tol),
         C * kInvSqrt2Pi, &c.q1);
  record("q2", detail::integrate_rel(
                   [&](double y) { return kernel.env_u2(y) * std::fabs(y); }, -cut,
                   cut, rel_tol),
         C * kInvSqrt2Pi, &c.q2);
  record("d", detail::integrate_rel(
                  [&](double y) { return kernel.env_u1_uniform(y) * std::fabs(y); },
                  -cut, cut, rel_tol),
         C * kInvSqrt2Pi, &c.d);
  return c;
}

// A(theta) = integral_{1/(2 theta)}^inf sqrt(v+1)/v^2 dv, in closed form.
inline double a_theta(double theta) {
  if (!(theta > 0 && theta < 1))
    throw std::invalid_argument("a_theta: theta must be in (0,1)");
  const double s0 = std::sqrt(0.5 / theta + 1.0);
  return s0 / (s0 * s0 - 1.0) - 0.5 * std::log((s0 - 1.0) / (s0 + 1.0));
}

// Mean-square tail certificate: returned sizes guarantee
// sup_{[0,T]} E (X - model)^2 <= delta.
inline TruncationPlan plan_mean_square(const PlannerConstants& c, double delta,
                                       double T) {
  if (!(delta > 0)) throw std::invalid_argument("plan_mean_square: delta must be > 0");
  if (!(T > 0)) throw std::invalid_argument("plan_mean_square: T must be > 0");

  TruncationPlan plan;
  plan.certificate.method = "mean_square";
  plan.certificate.request.norm = AccuracyRequest::Norm::uniform_relative;
  plan.certificate.request.delta = delta;
  plan.certificate.request.T = T;
  auto& im = plan.certificate.intermediates;

  if (c.e2 == 0 && c.f1 == 0 && c.f2 == 0) {
    plan.certificate.degenerate = true;
    plan.m = {1};
    return plan;
  }
  const double T2 = T * T;
  const double bn0 = (6.0 / delta) * c.e2 * c.e2 * T2 + 1.0;
  const double bn = std::max(
      1.0 + detail::log2_pos(72.0 * c.f2 * c.f2 * T2 / (5.0 * delta)),
      1.0 + detail::log8_pos(18.0 * c.f1 * c.f1 * T2 / (7.0 * delta)));
  const double bm = 1.0 + (12.0 / delta) * c.f2 * c.f2 * T2;
  im["bound_n0"] = bn0;
  im["bound_n"] = bn;
  im["bound_m"] = bm;

  plan.n0 = detail::ceil_strict(bn0);
  plan.n = static_cast<int>(detail::ceil_strict(bn));
  plan.m.assign(static_cast<std::size_t>(plan.n), detail::ceil_strict(bm));
  return plan;
}

// Increment-bound certificate: sizes guaranteeing tail_increment_bound <= eps.
inline TruncationPlan plan_increment(const PlannerConstants& c, double eps) {
  if (!(eps > 0)) throw std::invalid_argument("plan_increment: eps must be > 0");

  TruncationPlan plan;
  plan.certificate.method = "increment";
  plan.certificate.request.delta = eps;
  auto& im = plan.certificate.intermediates;

  if (c.a1 == 0 && c.b0 == 0 && c.b1 == 0) {
    plan.certificate.degenerate = true;
    plan.m = {1};
    return plan;
  }
  const double e2 = eps * eps;
  const double bn0 = 1.0 + 8.0 * c.a1 * c.a1 / e2;
  const double bn =
      std::max(1.0 + detail::log8_pos(4.0 * c.b0 * c.b0 / (7.0 * e2)),
               3.0 + detail::log2_pos(4.0 * c.b1 * c.b1 / e2));
  const double bm = 1.0 + 16.0 * c.b1 * c.b1 / e2;
  im["bound_n0"] = bn0;
  im["bound_n"] = bn;
  im["bound_m"] = bm;

  plan.n0 = detail::ceil_geq(bn0);
  plan.n = static_cast<int>(detail::ceil_geq(bn));
  plan.m.assign(static_cast<std::size_t>(plan.n), detail::ceil_geq(bm));
  return plan;
}

// Bound on the tail-increment constant of the truncated expansion. Finite
// plans keep it below the certificate target.
inline double tail_increment_bound(const PlannerConstants& c,
                                   const TruncationPlan& plan) {
  plan.validate();
  if (plan.n0 <= 1 || plan.n <= 1)
    throw std::invalid_argument("tail_increment_bound: needs n0 > 1 and n > 1");
  for (long mj : plan.m)
    if (mj <= 1)
      throw std::invalid_argument("tail_increment_bound: needs all m > 1");

  double sum = 2.0 * c.a1 * c.a1 / static_cast<double>(plan.n0 - 1);
  sum += c.b0 * c.b0 / (7.0 * std::pow(8.0, plan.n - 1));
  sum += c.b1 * c.b1 / std::pow(2.0, plan.n - 3);
  double levels = 0.0;
  for (int j = 0; j < plan.n; ++j)
    levels += std::pow(2.0, 1 - j) / static_cast<double>(plan.m_at(j) - 1);
  sum += c.b1 * c.b1 * levels;
  return std::sqrt(sum);
}

// Plan certified for relative accuracy delta with reliability 1-epsilon in
// the uniform norm on [0,T].
inline TruncationPlan plan_uniform(const PlannerConstants& c,
                                   const AccuracyRequest& req) {
  req.validate();
  if (req.norm != AccuracyRequest::Norm::uniform_relative)
    throw std::invalid_argument("plan_uniform: request norm must be uniform");

  TruncationPlan plan;
  plan.certificate.method = "uniform";
  plan.certificate.request = req;
  auto& im = plan.certificate.intermediates;

  if (c.e2 == 0 && c.f1 == 0 && c.f2 == 0 && c.a1 == 0 && c.b0 == 0 &&
      c.b1 == 0) {
    plan.certificate.degenerate = true;
    plan.m = {1};
    return plan;
  }

  const double eh = req.delta * std::sqrt(req.epsilon);
  const double atheta = a_theta(req.theta);
  const double tau1 = std::sqrt(M_E) * eh /
                      (std::pow(2.0, 1.75) * std::pow(64.0 + eh * eh, 0.25));
  const double tau2 = std::sqrt(32.0 * std::log1p(eh * eh / 60.0));
  const double tau3 = std::sqrt(std::log1p(eh * eh * eh / 8.0)) / std::sqrt(2.0);
  const double tau = std::min({tau1, tau2, tau3});
  const double Q = std::sqrt(M_E) * eh * req.theta * (1.0 - req.theta) /
                   (std::pow(2.0, 2.25) * atheta * req.T *
                    (1.0 + eh * eh * eh / 8.0));
  im["eps_hat"] = eh;
  im["a_theta"] = atheta;
  im["tau1"] = tau1;
  im["tau2"] = tau2;
  im["tau3"] = tau3;
  im["tau_star"] = tau;
  im["q"] = Q;

  const double Q2 = Q * Q;
  const double n0_inc = 1.0 + 8.0 * c.a1 * c.a1 / Q2;
  const double n_inc =
      std::max(1.0 + detail::log8_pos(4.0 * c.b0 * c.b0 / (7.0 * Q2)),
               3.0 + detail::log2_pos(4.0 * c.b1 * c.b1 / Q2));
  const double m_inc = 1.0 + 16.0 * c.b1 * c.b1 / Q2;

  const double ms = tau * tau;  // mean-square target
  const double T2 = req.T * req.T;
  const double n0_ms = (6.0 / ms) * c.e2 * c.e2 * T2 + 1.0;
  const double n_ms =
      std::max(1.0 + detail::log2_pos(72.0 * c.f2 * c.f2 * T2 / (5.0 * ms)),
               1.0 + detail::log8_pos(18.0 * c.f1 * c.f1 * T2 / (7.0 * ms)));
  const double m_ms = 1.0 + (12.0 / ms) * c.f2 * c.f2 * T2;

  im["n0_increment"] = n0_inc;
  im["n_increment"] = n_inc;
  im["m_increment"] = m_inc;
  im["n0_mean_square"] = n0_ms;
  im["n_mean_square"] = n_ms;
  im["m_mean_square"] = m_ms;

  plan.n0 = detail::ceil_strict(std::max(n0_inc, n0_ms));
  plan.n = static_cast<int>(detail::ceil_strict(std::max(n_inc, n_ms)));
  plan.m.assign(static_cast<std::size_t>(plan.n),
                detail::ceil_strict(std::max(m_inc, m_ms)));
  return plan;
}

// h(t) = t^p (1 + exp(8 p^2 t^2))^(1/4), continuous, h(0)=0, strictly
// increasing on t > 0.
inline double h_function(double t, double p) {
  if (t <= 0) return 0.0;
  const double z = 8.0 * p * p * t * t;
  if (z < 700.0) return std::pow(t, p) * std::pow(1.0 + std::exp(z), 0.25);
  return std::exp(p * std::log(t) + 0.25 * z);
}

// Unique positive root of h(x) = m by bisection with doubling bracket.
inline double root_of_h(double m_target, double p) {
  if (!(m_target > 0)) throw std::invalid_argument("root_of_h: target must be > 0");
  if (!(p >= 1)) throw std::invalid_argument("root_of_h: p must be >= 1");
  double hi = 1.0;
  while (h_function(hi, p) < m_target) {
    hi *= 2.0;
    if (hi > 1e300) throw std::overflow_error("root_of_h: bracket overflow");
  }
  double lo = 0.0;
  for (int i = 0; i < 400; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (h_function(mid, p) < m_target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Plan certified for accuracy delta with reliability 1-epsilon in L_p([0,T]).
inline TruncationPlan plan_lp(const PlannerConstants& c,
                              const AccuracyRequest& req) {
  req.validate();
  if (req.norm != AccuracyRequest::Norm::lp)
    throw std::invalid_argument("plan_lp: request norm must be lp");
  if (!req.sup_exp_moment)
    throw std::invalid_argument(
        "plan_lp: request.sup_exp_moment (sup_t E exp(2 p X(t))) is required");

  TruncationPlan plan;
  plan.certificate.method = "lp";
  plan.certificate.request = req;
  auto& im = plan.certificate.intermediates;

  if (c.s1 == 0 && c.s2 == 0 && c.q1 == 0 && c.q2 == 0 && c.d == 0) {
    plan.certificate.degenerate = true;
    plan.m = {1};
    return plan;
  }

  const double p = req.p;
  const double m_target =
      req.epsilon * std::pow(req.delta, p) /
      (std::pow(2.0, 2.0 * p) * std::pow(p / M_E, 0.5 * p) * req.T *
       std::sqrt(*req.sup_exp_moment));
  const double xm = root_of_h(m_target, p);
  im["m_target"] = m_target;
  im["x_m"] = xm;
  if (!(xm > 1e-150))
    throw std::invalid_argument(
        "plan_lp: root underflow; request a larger delta or epsilon");

  const double x2 = xm * xm;
  const double sq = c.s1 + c.s2 * req.T;
  const double qq = c.q1 + c.q2 * req.T;
  const double bn0 = (6.0 / x2) * sq * sq + 1.0;
  const double bn = std::max(
      1.0 + detail::log2_pos(72.0 * qq * qq / (5.0 * x2)),
      1.0 + detail::log8_pos(18.0 * c.d * c.d / (7.0 * x2)));
  plan.n0 = detail::ceil_strict(bn0);
  plan.n = static_cast<int>(detail::ceil_strict(bn));
  const double bm =
      1.0 + (12.0 / x2) * qq * qq * (1.0 - std::pow(2.0, -plan.n));
  plan.m.assign(static_cast<std::size_t>(plan.n), detail::ceil_strict(bm));
  im["bound_n0"] = bn0;
  im["bound_n"] = bn;
  im["bound_m"] = bm;
  return plan;
}

// sup_t E exp(2 p X(t)) for a Gaussian (or any strictly sub-Gaussian) driver:
// exp(2 p^2 sup_t R(t,t)), evaluated on a grid.
inline double sup_exp_moment_gaussian(const Kernel& kernel, double p, double T,
                                      int grid_n = 201, double tol = 1e-8) {
  double rmax = 0.0;
  for (int i = 0; i <= grid_n; ++i) {
    const double t = T * i / grid_n;
    rmax = std::max(rmax, covariance(kernel, t, t, tol));
  }
  return std::exp(2.0 * p * p * rmax);
}

// One-dimensional sweep over theta minimizing the total number of model
// terms; the bound leaves theta free.
inline TruncationPlan plan_uniform_best_theta(const PlannerConstants& c,
                                              AccuracyRequest req,
                                              int grid_n = 91) {
  TruncationPlan best;
  long long best_cost = -1;
  for (int i = 0; i <= grid_n; ++i) {
    req.theta = 0.05 + 0.90 * i / grid_n;
    TruncationPlan p = plan_uniform(c, req);
    const long long cost = p.total_terms();
    if (best_cost < 0 || cost < best_cost) {
      best_cost = cost;
      best = p;
    }
  }
  return best;
}

}  // namespace wavesim

#endif  // WAVESIM_PLANNER_HPP
