#ifndef WAVESIM_QUADRATURE_HPP
#define WAVESIM_QUADRATURE_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace wavesim {
namespace quad {

// Thrown when the error budget cannot be met; carries the best estimate so
// callers can decide whether to accept it anyway.
class quadrature_error : public std::runtime_error {
 public:
  quadrature_error(const std::string& msg, double best, double err_bound)
      : std::runtime_error(msg), best_estimate(best), error_bound(err_bound) {}
  double best_estimate;
  double error_bound;
};

namespace detail {

// 15-point Kronrod nodes (positive half) with the embedded 7-point Gauss rule.
inline constexpr double gk15_nodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr double gk15_wk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

inline constexpr double gk15_wg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <typename T>
inline double magnitude(const T& v) {
  if constexpr (std::is_same_v<T, std::complex<double>>)
    return std::abs(v);
  else
    return std::fabs(v);
}

template <typename T, typename F>
inline void gk15_panel(F& f, double a, double b, T& value, double& err) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  T fc = f(c);
  T kron = gk15_wk[7] * fc;
  T gauss = gk15_wg[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double x = h * gk15_nodes[i];
    T fsum = f(c - x) + f(c + x);
    kron += gk15_wk[i] * fsum;
    if (i % 2 == 1) gauss += gk15_wg[i / 2] * fsum;
  }
  value = kron * h;
  err = magnitude<T>((kron - gauss) * h);
}

struct Panel {
  double a, b;
  double err;
};

}  // namespace detail

template <typename T>
struct Result {
  T value;
  double error;  // estimated absolute error
};

// Adaptive bisection on [a,b] seeded with optional interior breakpoints.
// The result is deterministic: panels are refined worst-first and summed in
// left-to-right order at the end.
template <typename F,
          typename T = std::invoke_result_t<F, double>>
Result<T> integrate(F&& f, double a, double b, double abs_tol,
                    const std::vector<double>& breakpoints = {},
                    std::size_t max_panels = 200000) {
  if (!(abs_tol > 0)) throw std::invalid_argument("integrate: abs_tol must be > 0");
  if (a == b) return {T{}, 0.0};

  std::vector<double> edges;
  edges.reserve(breakpoints.size() + 2);
  edges.push_back(a);
  for (double x : breakpoints)
    if (x > a && x < b) edges.push_back(x);
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  std::vector<detail::Panel> panels;
  std::vector<T> values;
  panels.reserve(edges.size() + 64);
  values.reserve(edges.size() + 64);
  double total_err = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    T v;
    double e;
    detail::gk15_panel<T>(f, edges[i], edges[i + 1], v, e);
    panels.push_back({edges[i], edges[i + 1], e});
    values.push_back(v);
    total_err += e;
  }

  while (total_err > abs_tol && panels.size() < max_panels) {
    std::size_t worst = 0;
    for (std::size_t i = 1; i < panels.size(); ++i)
      if (panels[i].err > panels[worst].err) worst = i;
    if (panels[worst].err <= 0) break;  // cannot improve further

    const double pa = panels[worst].a, pb = panels[worst].b;
    const double mid = 0.5 * (pa + pb);
    if (mid <= pa || mid >= pb) break;  // interval at roundoff limit

    T vl, vr;
    double el, er;
    detail::gk15_panel<T>(f, pa, mid, vl, el);
    detail::gk15_panel<T>(f, mid, pb, vr, er);
    total_err += el + er - panels[worst].err;
    panels[worst] = {pa, mid, el};
    values[worst] = vl;
    panels.push_back({mid, pb, er});
    values.push_back(vr);
  }

  // Deterministic summation order independent of refinement history.
  std::vector<std::size_t> order(panels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return panels[i].a < panels[j].a;
  });
  T total{};
  total_err = 0.0;
  for (std::size_t i : order) {
    total += values[i];
    total_err += panels[i].err;
  }

  if (total_err > abs_tol)
    throw quadrature_error("integrate: error budget exhausted (err=" +
                               std::to_string(total_err) + ", tol=" +
                               std::to_string(abs_tol) + ")",
                           detail::magnitude<T>(total), total_err);
  return {total, total_err};
}

// Breakpoints at half-period boundaries of exp(i*omega*y), anchored at 0 so a
// symmetric domain gets a symmetric subdivision.
inline std::vector<double> oscillation_breakpoints(double a, double b,
                                                   double omega,
                                                   std::size_t max_points = 400000) {
  std::vector<double> pts;
  const double w = std::fabs(omega);
  if (w <= 0) return pts;
  const double step = M_PI / w;
  if ((b - a) / step > static_cast<double>(max_points))
    throw std::invalid_argument("oscillation_breakpoints: too many segments");
  const double k0 = std::ceil(a / step);
  for (double k = k0; k * step < b; k += 1.0) pts.push_back(k * step);
  return pts;
}

// Integral over the whole real line via y = tan(theta).
template <typename F, typename T = std::invoke_result_t<F, double>>
Result<T> integrate_real_line(F&& f, double abs_tol,
                              std::size_t max_panels = 200000) {
  auto g = [&f](double th) -> T {
    const double c = std::cos(th);
    const double y = std::tan(th);
    return f(y) / (c * c);
  };
  std::vector<double> seeds;
  for (double y : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 64.0, 256.0}) {
    seeds.push_back(std::atan(y));
    seeds.push_back(-std::atan(y));
  }
  const double half = M_PI / 2 - 1e-12;
  return integrate<decltype(g), T>(std::move(g), -half, half, abs_tol, seeds,
                                   max_panels);
}

}  // namespace quad
}  // namespace wavesim

#endif  // WAVESIM_QUADRATURE_HPP
