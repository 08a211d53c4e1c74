#ifndef WAVESIM_COEFFICIENTS_HPP
#define WAVESIM_COEFFICIENTS_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavesim/fft.hpp"
#include "wavesim/kernels.hpp"
#include "wavesim/plan.hpp"
#include "wavesim/planner.hpp"
#include "wavesim/quadrature.hpp"
#include "wavesim/wavelets.hpp"

namespace wavesim {

namespace detail {

inline double realness_threshold(double quad_tol, double re,
                                 double realness_tol) {
  return std::max(quad_tol, realness_tol * (1.0 + std::fabs(re)));
}

inline void check_real(const Kernel& kernel, cdouble z, double quad_tol,
                       const std::string& what) {
  if (!kernel.condition_rc) return;
  const double thr = realness_threshold(quad_tol, z.real(), 1e-8);
  if (std::fabs(z.imag()) > thr)
    throw realness_error("coefficient " + what + ": imaginary part " +
                         std::to_string(z.imag()) + " exceeds tolerance " +
                         std::to_string(thr));
}

// Best pointwise bound on |u(t, .)| available from the kernel envelopes.
inline double u_abs_env(const Kernel& k, double t, double y) {
  double env = std::numeric_limits<double>::infinity();
  if (k.has_uniform_envelopes) env = std::min(env, k.env_u1_uniform(y));
  if (k.has_linear_envelopes) env = std::min(env, std::fabs(t) * k.env_u1_linear(y));
  return env;
}

// Cheap certified bound for every |coefficient| on detail level j: the
// integrand magnitude integrated over the level's frequency band.
inline double level_mass_bound(const Kernel& kernel, const WaveletFamily& family,
                               int j, double t) {
  if (!kernel.has_uniform_envelopes && !kernel.has_linear_envelopes)
    return std::numeric_limits<double>::infinity();
  const double scale = std::ldexp(1.0, j);
  const double cut = std::min(kernel.domain_cut(1e-14) * 4.0,
                              scale * family.psi_cut(1e-14));
  const double lo = scale * family.psi_inner_gap;
  if (lo >= cut) return 0.0;
  auto f = [&](double y) {
    return u_abs_env(kernel, t, y) * family.psi_abs_env(y / scale);
  };
  // Envelopes span many orders of magnitude; geometric seeding plus a small
  // refinement budget gives a stable over-estimate for the skip decision.
  std::vector<double> seeds;
  for (double x = std::max(lo, 0.5); x < cut; x *= 2.0) seeds.push_back(x);
  double mass = 0.0;
  try {
    auto r = quad::integrate(f, lo, cut, 1e-300, seeds, seeds.size() + 64);
    mass = r.value + r.error;
  } catch (const quad::quadrature_error& e) {
    mass = e.best_estimate + e.error_bound;
  }
  return 2.0 * mass * kInvSqrt2Pi / std::sqrt(scale) * 1.5;
}

struct CoeffDomain {
  double lo = 0.0, hi = 0.0;   // outer bound (symmetric interval [-hi, hi])
  double gap = 0.0;            // integrand vanishes for |y| < gap
};

inline CoeffDomain scaling_domain(const Kernel& kernel,
                                  const WaveletFamily& family, double tol) {
  CoeffDomain d;
  d.hi = std::min(kernel.domain_cut(0.1 * tol), family.phi_cut(1e-14));
  d.lo = -d.hi;
  return d;
}

inline CoeffDomain detail_domain(const Kernel& kernel,
                                 const WaveletFamily& family, int j,
                                 double tol) {
  const double scale = std::ldexp(1.0, j);
  CoeffDomain d;
  d.hi = std::min(kernel.domain_cut(0.1 * tol), scale * family.psi_cut(1e-14));
  d.lo = -d.hi;
  d.gap = scale * family.psi_inner_gap;
  return d;
}

template <typename F>
cdouble integrate_coefficient(F&& f, const CoeffDomain& dom, double freq,
                              double tol) {
  if (dom.hi <= 0) return 0.0;
  std::vector<double> seeds;
  if (std::fabs(freq) * dom.hi > 4.0)
    seeds = quad::oscillation_breakpoints(-dom.hi, dom.hi, freq);
  if (dom.gap > 0 && dom.gap < dom.hi) {
    seeds.push_back(-dom.gap);
    seeds.push_back(dom.gap);
  }
  for (double x = 0.5; x < dom.hi; x *= 2.0) {
    seeds.push_back(x);
    seeds.push_back(-x);
  }
  return quad::integrate(f, -dom.hi, dom.hi, tol, seeds).value;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Per-coefficient evaluation (adaptive quadrature; the reference path).
// ---------------------------------------------------------------------------

// a_k(t) = (2 pi)^{-1/2} integral u(t,y) conj(phi_hat(y)) exp(i y k) dy
inline double coeff_a(const Kernel& kernel, const WaveletFamily& family, long k,
                      double t, double tol) {
  if (!(tol > 0)) throw std::invalid_argument("coeff_a: tol must be > 0");
  const auto dom = detail::scaling_domain(kernel, family, tol);
  auto f = [&](double y) -> cdouble {
    return detail::kInvSqrt2Pi * kernel.u(t, y) * std::conj(family.phi_hat(y)) *
           std::polar(1.0, y * k);
  };
  cdouble z;
  try {
    z = detail::integrate_coefficient(f, dom, static_cast<double>(k), tol);
  } catch (const quad::quadrature_error& e) {
    throw quad::quadrature_error("coeff_a(k=" + std::to_string(k) +
                                     ", t=" + std::to_string(t) + "): " + e.what(),
                                 e.best_estimate, e.error_bound);
  }
  detail::check_real(kernel, z, tol,
                     "a(k=" + std::to_string(k) + ", t=" + std::to_string(t) + ")");
  return z.real();
}

namespace detail {

// Shared by the public one-off call and the table builder (which caches the
// level-mass precheck); both produce identical values.
inline double coeff_b_impl(const Kernel& kernel, const WaveletFamily& family,
                           int j, long l, double t, double tol,
                           double level_mass) {
  if (level_mass <= 0.5 * tol) return 0.0;

  const double scale = std::ldexp(1.0, j);
  const double amp = detail::kInvSqrt2Pi / std::sqrt(scale);
  const auto dom = detail::detail_domain(kernel, family, j, tol);
  auto f = [&](double y) -> cdouble {
    return amp * kernel.u(t, y) * std::polar(1.0, y * l / scale) *
           std::conj(family.psi_hat(y / scale));
  };
  cdouble z;
  try {
    z = detail::integrate_coefficient(f, dom, (std::fabs(l) + 1.0) / scale, tol);
  } catch (const quad::quadrature_error& e) {
    throw quad::quadrature_error(
        "coeff_b(j=" + std::to_string(j) + ", l=" + std::to_string(l) +
            ", t=" + std::to_string(t) + "): " + e.what(),
        e.best_estimate, e.error_bound);
  }
  check_real(kernel, z, tol,
             "b(j=" + std::to_string(j) + ", l=" + std::to_string(l) +
                 ", t=" + std::to_string(t) + ")");
  return z.real();
}

}  // namespace detail

// b_{j,l}(t) = (2 pi)^{-1/2} 2^{-j/2} integral u(t,y) exp(i y l / 2^j)
//              conj(psi_hat(y / 2^j)) dy
inline double coeff_b(const Kernel& kernel, const WaveletFamily& family, int j,
                      long l, double t, double tol) {
  if (!(tol > 0)) throw std::invalid_argument("coeff_b: tol must be > 0");
  if (j < 0) throw std::invalid_argument("coeff_b: j must be >= 0");
  return detail::coeff_b_impl(kernel, family, j, l, t, tol,
                              detail::level_mass_bound(kernel, family, j, t));
}

// ---------------------------------------------------------------------------
// Bulk row evaluation (trapezoid + FFT). Computes a whole translate row at
// once with an embedded coarse-grid error estimate. An optimization used by
// tail scans and validation; unit tests pin it against the reference path.
// ---------------------------------------------------------------------------
namespace detail {

struct RowSpec {
  double half_width;  // integrand support radius in the scaled variable
  double shift;       // extra linear phase exp(i * shift * x) of the integrand
};

// row[idx(l)] = integral g(x) exp(i x l) dx for l = -l_max..l_max, where g is
// sampled on a uniform grid over [-P/2, P/2).
template <typename G>
std::vector<cdouble> fourier_row(G&& g, double half_width, long l_max,
                                 double tol, double* err_out) {
  const long m = static_cast<long>(std::ceil(half_width / M_PI + 1e-12));
  const double P = 2.0 * M_PI * m;
  std::size_t N = fft::next_pow2(static_cast<std::size_t>(
      std::max<long>(4096, 6 * m * (l_max + 2))));
  const std::size_t rows = static_cast<std::size_t>(2 * l_max + 1);

  std::vector<cdouble> out(rows), prev;
  double err = std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt < 3 && err > tol; ++attempt, N *= 2) {
    std::vector<cdouble> samples(N);
    for (std::size_t i = 0; i < N; ++i) {
      const double x = -0.5 * P + P * static_cast<double>(i) / N;
      samples[i] = (std::fabs(x) <= half_width) ? g(x) : cdouble(0.0);
    }
    std::vector<cdouble> coarse(N / 2);
    for (std::size_t i = 0; i < N / 2; ++i) coarse[i] = samples[2 * i];
    fft::transform(samples, +1);
    fft::transform(coarse, +1);

    auto extract = [&](const std::vector<cdouble>& data, long l) -> cdouble {
      const std::size_t n = data.size();
      const long bin_raw = l * m;
      const std::size_t bin = static_cast<std::size_t>(
          ((bin_raw % static_cast<long>(n)) + static_cast<long>(n)) %
          static_cast<long>(n));
      const double sign = (static_cast<long long>(m) * l) % 2 ? -1.0 : 1.0;
      return (P / static_cast<double>(n)) * sign * data[bin];
    };
    err = 0.0;
    for (long l = -l_max; l <= l_max; ++l) {
      const cdouble fine = extract(samples, l);
      out[static_cast<std::size_t>(l + l_max)] = fine;
      err = std::max(err, std::abs(fine - extract(coarse, l)));
    }
  }
  if (err_out) *err_out = err;
  if (err > tol)
    throw quad::quadrature_error("fourier_row: resolution cap reached (err=" +
                                     std::to_string(err) + ")",
                                 0.0, err);
  return out;
}

}  // namespace detail

// Scaling row: values a_k(t) for k = -k_max..k_max.
inline std::vector<double> coeff_row_a(const Kernel& kernel,
                                       const WaveletFamily& family, double t,
                                       long k_max, double tol) {
  const auto dom = detail::scaling_domain(kernel, family, tol);
  auto g = [&](double y) -> cdouble {
    return detail::kInvSqrt2Pi * kernel.u(t, y) * std::conj(family.phi_hat(y));
  };
  double err = 0.0;
  auto row = detail::fourier_row(g, dom.hi, k_max, tol, &err);
  std::vector<double> re(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) {
    detail::check_real(kernel, row[i], std::max(tol, err), "a-row");
    re[i] = row[i].real();
  }
  return re;
}

// Detail row: values b_{j,l}(t) for l = -l_max..l_max. Returns all zeros
// when the certified level mass is already below tol/2.
inline std::vector<double> coeff_row_b(const Kernel& kernel,
                                       const WaveletFamily& family, int j,
                                       double t, long l_max, double tol) {
  const std::size_t rows = static_cast<std::size_t>(2 * l_max + 1);
  if (detail::level_mass_bound(kernel, family, j, t) <= 0.5 * tol)
    return std::vector<double>(rows, 0.0);

  const double scale = std::ldexp(1.0, j);
  const double amp = detail::kInvSqrt2Pi * std::sqrt(scale);  // includes dy = 2^j dx
  const auto dom = detail::detail_domain(kernel, family, j, tol);
  auto g = [&](double x) -> cdouble {
    if (std::fabs(x) < dom.gap / scale) return 0.0;
    return amp * kernel.u(t, scale * x) * std::conj(family.psi_hat(x));
  };
  double err = 0.0;
  auto row = detail::fourier_row(g, dom.hi / scale, l_max, tol, &err);
  std::vector<double> re(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    detail::check_real(kernel, row[i], std::max(tol, err), "b-row");
    re[i] = row[i].real();
  }
  return re;
}

// ---------------------------------------------------------------------------
// Coefficient table
// ---------------------------------------------------------------------------
struct CoefficientTable {
  std::string kernel_name;
  std::string family_name;
  TruncationPlan plan;
  std::vector<double> t_grid;
  double quad_tol = 0.0;

  // a: (2*n0-1) x nt row-major, row index k + n0 - 1
  std::vector<double> a;
  // b[j]: (2*m_j-1) x nt row-major, row index l + m_j - 1
  std::vector<std::vector<double>> b;

  std::size_t nt() const { return t_grid.size(); }
  double a_at(long k, std::size_t ti) const {
    return a[static_cast<std::size_t>(k + plan.n0 - 1) * nt() + ti];
  }
  double b_at(int j, long l, std::size_t ti) const {
    return b[static_cast<std::size_t>(j)]
            [static_cast<std::size_t>(l + plan.m_at(j) - 1) * nt() + ti];
  }

  // sum of squared coefficients at one grid time
  double energy(std::size_t ti) const { return reconstruct(ti, ti); }

  // sum_k a_k(ti) a_k(tj) + sum_{j,l} b_{jl}(ti) b_{jl}(tj)
  double reconstruct(std::size_t ti, std::size_t tj) const {
    double s = 0.0;
    const std::size_t n = nt();
    for (std::size_t r = 0; r < static_cast<std::size_t>(2 * plan.n0 - 1); ++r)
      s += a[r * n + ti] * a[r * n + tj];
    for (const auto& level : b) {
      const std::size_t nrows = level.size() / n;
      for (std::size_t r = 0; r < nrows; ++r)
        s += level[r * n + ti] * level[r * n + tj];
    }
    return s;
  }
};

// Builds the full table cell by cell through the reference path, so entries
// match one-off coeff_a/coeff_b calls exactly.
inline CoefficientTable build_table(const Kernel& kernel,
                                    const WaveletFamily& family,
                                    const TruncationPlan& plan,
                                    const std::vector<double>& t_grid,
                                    double tol) {
  plan.validate();
  if (t_grid.empty()) throw std::invalid_argument("build_table: empty t_grid");
  if (!(tol > 0)) throw std::invalid_argument("build_table: tol must be > 0");
  const long long cells =
      plan.total_terms() * static_cast<long long>(t_grid.size());
  if (cells > 80'000'000LL)
    throw std::invalid_argument(
        "build_table: table would hold " + std::to_string(cells) +
        " cells; use the windowed validation path for plans of this size");

  CoefficientTable table;
  table.kernel_name = kernel.name;
  table.family_name = family.name;
  table.plan = plan;
  table.t_grid = t_grid;
  table.quad_tol = tol;
  const std::size_t nt = t_grid.size();

  table.a.resize(static_cast<std::size_t>(2 * plan.n0 - 1) * nt);
  for (long k = -(plan.n0 - 1); k <= plan.n0 - 1; ++k)
    for (std::size_t ti = 0; ti < nt; ++ti)
      table.a[static_cast<std::size_t>(k + plan.n0 - 1) * nt + ti] =
          coeff_a(kernel, family, k, t_grid[ti], tol);

  table.b.resize(static_cast<std::size_t>(plan.n));
  for (int j = 0; j < plan.n; ++j) {
    const long mj = plan.m_at(j);
    auto& level = table.b[static_cast<std::size_t>(j)];
    level.resize(static_cast<std::size_t>(2 * mj - 1) * nt);
    std::vector<double> mass(nt);
    for (std::size_t ti = 0; ti < nt; ++ti)
      mass[ti] = detail::level_mass_bound(kernel, family, j, t_grid[ti]);
    for (long l = -(mj - 1); l <= mj - 1; ++l)
      for (std::size_t ti = 0; ti < nt; ++ti)
        level[static_cast<std::size_t>(l + mj - 1) * nt + ti] =
            detail::coeff_b_impl(kernel, family, j, l, t_grid[ti], tol, mass[ti]);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Truncation mean-square error estimate at one time: squared coefficients in
// the window between plan and cutoffs (computed numerically) plus the
// analytic decay-bound remainder beyond the cutoffs.
// ---------------------------------------------------------------------------
inline double analytic_tail_bound(const PlannerConstants& c,
                                  const TruncationPlan& cutoffs, double t) {
  const double at = std::fabs(t);
  const double sa = c.s1 + c.s2 * at;
  const double qa = c.q1 + c.q2 * at;
  double sum = 2.0 * sa * sa / static_cast<double>(cutoffs.n0 - 1);
  for (int j = 0; j < cutoffs.n; ++j)
    sum += qa * qa * std::pow(2.0, -j) * 2.0 /
           static_cast<double>(cutoffs.m_at(j) - 1);
  sum += c.d * c.d / (7.0 * std::pow(8.0, cutoffs.n - 1));
  sum += qa * qa * (M_PI * M_PI / 3.0) * std::pow(2.0, 1 - cutoffs.n);
  return sum;
}

inline double tail_energy(const Kernel& kernel, const WaveletFamily& family,
                          const PlannerConstants& constants,
                          const TruncationPlan& plan,
                          const TruncationPlan& cutoffs, double t,
                          double tol = 1e-10) {
  plan.validate();
  cutoffs.validate();
  if (!kernel.has_uniform_envelopes)
    throw std::invalid_argument(
        "tail_energy: kernel lacks the time-uniform envelope family");
  if (cutoffs.n0 < plan.n0 || cutoffs.n < plan.n)
    throw std::invalid_argument("tail_energy: cutoffs must not be below plan");
  for (int j = 0; j < plan.n; ++j)
    if (cutoffs.m_at(j) < plan.m_at(j))
      throw std::invalid_argument("tail_energy: cutoffs must not be below plan");
  if (cutoffs.n0 <= 1 || cutoffs.n < 1)
    throw std::invalid_argument("tail_energy: cutoffs too small");
  for (long mj : cutoffs.m)
    if (mj <= 1) throw std::invalid_argument("tail_energy: cutoffs too small");
  if (cutoffs.n0 > (1L << 22) || *std::max_element(cutoffs.m.begin(),
                                                   cutoffs.m.end()) > (1L << 22))
    throw std::invalid_argument(
        "tail_energy: cutoff scan too large; rely on the analytic remainder");

  double window = 0.0;
  // scaling window |k| in [n0, cutoff n0)
  if (cutoffs.n0 > plan.n0) {
    auto row = coeff_row_a(kernel, family, t, cutoffs.n0 - 1, tol);
    for (long k = plan.n0; k <= cutoffs.n0 - 1; ++k) {
      const double vp = row[static_cast<std::size_t>(k + cutoffs.n0 - 1)];
      const double vm = row[static_cast<std::size_t>(-k + cutoffs.n0 - 1)];
      window += vp * vp + vm * vm;
    }
  }
  // translate windows on retained levels
  for (int j = 0; j < plan.n; ++j) {
    const long lo = plan.m_at(j), hi = cutoffs.m_at(j) - 1;
    if (hi < lo) continue;
    const double mass = detail::level_mass_bound(kernel, family, j, t);
    if (mass * mass * 2.0 * static_cast<double>(hi - lo + 1) < 0.01 * tol) continue;
    auto row = coeff_row_b(kernel, family, j, t, hi, tol);
    for (long l = lo; l <= hi; ++l) {
      const double vp = row[static_cast<std::size_t>(l + hi)];
      const double vm = row[static_cast<std::size_t>(-l + hi)];
      window += vp * vp + vm * vm;
    }
  }
  // whole levels between plan.n and cutoff n
  for (int j = plan.n; j < cutoffs.n; ++j) {
    const long hi = cutoffs.m_at(j) - 1;
    const double mass = detail::level_mass_bound(kernel, family, j, t);
    if (mass * mass * 2.0 * static_cast<double>(2 * hi + 1) < 0.01 * tol) continue;
    auto row = coeff_row_b(kernel, family, j, t, hi, tol);
    for (double v : row) window += v * v;
  }
  return window + analytic_tail_bound(constants, cutoffs, t);
}

}  // namespace wavesim

#endif  // WAVESIM_COEFFICIENTS_HPP
