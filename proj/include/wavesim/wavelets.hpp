#ifndef WAVESIM_WAVELETS_HPP
#define WAVESIM_WAVELETS_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wavesim {

using cdouble = std::complex<double>;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
};

// A scaling-function / wavelet pair used purely through its Fourier
// transforms (convention f_hat(xi) = integral f(x) exp(-i*xi*x) dx).
struct WaveletFamily {
  std::string name;

  std::function<cdouble(double)> phi_hat;
  std::function<cdouble(double)> psi_hat;
  std::function<cdouble(double)> phi_hat_deriv;
  std::function<cdouble(double)> psi_hat_deriv;

  // Compact frequency supports when available; nullopt means unbounded.
  std::optional<Interval> phi_support;
  std::optional<Interval> psi_support;
  // Radius below which psi_hat vanishes identically (Meyer); 0 otherwise.
  double psi_inner_gap = 0.0;

  // Decay data for unbounded transforms: |f_hat(xi)| <= coef * |xi|^-pow
  // for |xi| >= from. Used only to truncate integration domains.
  double phi_tail_coef = 0.0, phi_tail_pow = 0.0, phi_tail_from = 1.0;
  double psi_tail_coef = 0.0, psi_tail_pow = 0.0, psi_tail_from = 1.0;
  // Low-frequency envelope |psi_hat(xi)| <= zero_coef * |xi|^zero_pow, |xi|<=1.
  double psi_zero_coef = 1.0, psi_zero_pow = 0.0;

  // Upper bound for sup |psi_hat'(xi)|.
  double c_bound = 0.0;

  // Pointwise envelope for |psi_hat|, cheap and safe, for mass prechecks.
  double psi_abs_env(double xi) const {
    const double a = std::fabs(xi);
    if (psi_support) {
      if (a > psi_support->hi || a < psi_inner_gap) return 0.0;
      return 1.0;
    }
    double env = 1.02;
    if (a <= 1.0 && psi_zero_pow > 0)
      env = std::min(env, psi_zero_coef * std::pow(a, psi_zero_pow));
    if (a >= psi_tail_from && psi_tail_coef > 0)
      env = std::min(env, psi_tail_coef * std::pow(a, -psi_tail_pow));
    return env;
  }

  // Frequency radius beyond which |phi_hat| (resp. |psi_hat|) stays below eps.
  double phi_cut(double eps) const {
    if (phi_support) return phi_support->hi;
    if (phi_tail_coef <= 0 || eps <= 0) return 1e6;
    return std::max(phi_tail_from, std::pow(phi_tail_coef / eps, 1.0 / phi_tail_pow));
  }
  double psi_cut(double eps) const {
    if (psi_support) return psi_support->hi;
    if (psi_tail_coef <= 0 || eps <= 0) return 1e6;
    return std::max(psi_tail_from, std::pow(psi_tail_coef / eps, 1.0 / psi_tail_pow));
  }
};

namespace detail {

// C^3 blending polynomial on [0,1]: nu(0)=0, nu(1)=1, nu(x)+nu(1-x)=1.
inline double meyer_nu(double x) {
  if (x <= 0) return 0.0;
  if (x >= 1) return 1.0;
  return x * x * x * x * (35.0 - 84.0 * x + (70.0 - 20.0 * x) * x * x);
}

inline double meyer_nu_deriv(double x) {
  if (x <= 0 || x >= 1) return 0.0;
  const double y = 1.0 - x;
  return 140.0 * x * x * x * y * y * y;
}

inline double grid_max_psi_deriv(const WaveletFamily& fam, double lo, double hi,
                                 int n) {
  double best = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double xi = lo + (hi - lo) * i / n;
    best = std::max(best, std::abs(fam.psi_hat_deriv(xi)));
    best = std::max(best, std::abs(fam.psi_hat_deriv(-xi)));
  }
  return best;
}

// Five-point central difference, accurate enough for envelope constants.
template <typename F>
cdouble diff5(const F& f, double x) {
  const double h = 1e-3 * std::max(1.0, std::fabs(x));
  return (f(x - 2 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2 * h)) /
         (12.0 * h);
}

inline double sinc(double u) {
  if (std::fabs(u) < 1e-4) {
    const double u2 = u * u;
    return 1.0 - u2 / 6.0 + u2 * u2 / 120.0;
  }
  return std::sin(u) / u;
}

// Centered B-spline of order m evaluated at x (support [-m/2, m/2]).
inline double centered_bspline(int m, double x) {
  double fact = 1.0;
  for (int i = 2; i < m; ++i) fact *= i;
  double binom = 1.0;
  double sum = 0.0;
  for (int k = 0; k <= m; ++k) {
    const double arg = x + 0.5 * m - k;
    if (arg > 0) {
      double p = 1.0;
      for (int i = 0; i < m - 1; ++i) p *= arg;
      sum += (k % 2 ? -binom : binom) * p;
    }
    binom = binom * (m - k) / (k + 1.0);
  }
  return sum / fact;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Meyer family: closed-form compactly supported transforms.
// ---------------------------------------------------------------------------
inline WaveletFamily make_meyer() {
  using detail::meyer_nu;
  using detail::meyer_nu_deriv;
  const double a1 = 2.0 * M_PI / 3.0;   // flat region edge
  const double a2 = 4.0 * M_PI / 3.0;   // phi support edge
  const double a3 = 8.0 * M_PI / 3.0;   // psi support edge

  auto phi_amp = [=](double a) -> double {
    if (a <= a1) return 1.0;
    if (a >= a2) return 0.0;
    return std::cos(0.5 * M_PI * meyer_nu(1.5 * a / M_PI - 1.0));
  };
  auto phi_amp_d = [=](double a) -> double {
    if (a <= a1 || a >= a2) return 0.0;
    const double x = 1.5 * a / M_PI - 1.0;
    return -0.75 * meyer_nu_deriv(x) * std::sin(0.5 * M_PI * meyer_nu(x));
  };
  auto psi_amp = [=](double a) -> double {
    if (a <= a1 || a >= a3) return 0.0;
    if (a <= a2) return std::sin(0.5 * M_PI * meyer_nu(1.5 * a / M_PI - 1.0));
    return std::cos(0.5 * M_PI * meyer_nu(0.75 * a / M_PI - 1.0));
  };
  auto psi_amp_d = [=](double a) -> double {
    if (a <= a1 || a >= a3) return 0.0;
    if (a <= a2) {
      const double x = 1.5 * a / M_PI - 1.0;
      return 0.75 * meyer_nu_deriv(x) * std::cos(0.5 * M_PI * meyer_nu(x));
    }
    const double x = 0.75 * a / M_PI - 1.0;
    return -0.375 * meyer_nu_deriv(x) * std::sin(0.5 * M_PI * meyer_nu(x));
  };

  WaveletFamily fam;
  fam.name = "meyer";
  fam.phi_hat = [=](double xi) -> cdouble { return phi_amp(std::fabs(xi)); };
  fam.phi_hat_deriv = [=](double xi) -> cdouble {
    const double s = xi < 0 ? -1.0 : 1.0;
    return s * phi_amp_d(std::fabs(xi));
  };
  fam.psi_hat = [=](double xi) -> cdouble {
    const double A = psi_amp(std::fabs(xi));
    if (A == 0.0) return 0.0;
    return std::polar(A, 0.5 * xi);
  };
  fam.psi_hat_deriv = [=](double xi) -> cdouble {
    const double a = std::fabs(xi);
    const double A = psi_amp(a);
    const double Ad = (xi < 0 ? -1.0 : 1.0) * psi_amp_d(a);
    if (A == 0.0 && Ad == 0.0) return 0.0;
    const cdouble phase = std::polar(1.0, 0.5 * xi);
    return phase * (cdouble(0.0, 0.5) * A + Ad);
  };
  fam.phi_support = Interval{-a2, a2};
  fam.psi_support = Interval{-a3, a3};
  fam.psi_inner_gap = a1;
  fam.psi_zero_coef = 0.0;
  fam.psi_zero_pow = 1.0;
  fam.c_bound = 1.05 * detail::grid_max_psi_deriv(fam, a1, a3, 40000);
  return fam;
}

// ---------------------------------------------------------------------------
// Battle-Lemarie family of spline degree 1..4.
// ---------------------------------------------------------------------------
inline WaveletFamily make_battle_lemarie(int degree) {
  if (degree < 1 || degree > 4)
    throw std::invalid_argument(
        "make_battle_lemarie: supported degrees are 1..4, got " +
        std::to_string(degree));
  const int n = degree + 1;  // spline order
  const bool odd = (n % 2) != 0;

  // Autocorrelation symbol P(xi) = sum_m B_{2n}(m) cos(m xi), from the
  // integer samples of the order-2n centered B-spline.
  std::vector<double> ac(n);  // ac[m] = B_{2n}(m), m = 0..n-1
  for (int m = 0; m < n; ++m) ac[m] = detail::centered_bspline(2 * n, m);
  auto symbol = [ac, n](double xi) -> double {
    double p = ac[0];
    for (int m = 1; m < n; ++m) p += 2.0 * ac[m] * std::cos(m * xi);
    return p;
  };
  double pmin = 1.0;
  for (int i = 0; i <= 2000; ++i)
    pmin = std::min(pmin, symbol(2.0 * M_PI * i / 2000.0));

  // phi_hat = sinc^n(xi/2)/sqrt(P); odd spline orders carry a half shift so
  // the scaling function stays real-valued.
  auto phi = [=](double xi) -> cdouble {
    double amp = 1.0;
    const double s = detail::sinc(0.5 * xi);
    for (int i = 0; i < n; ++i) amp *= s;
    amp /= std::sqrt(symbol(xi));
    if (!odd) return amp;
    return std::polar(amp, -0.5 * xi);
  };
  // Refinement filter in closed form: m0(xi) = cos^n(xi/2) sqrt(P(xi)/P(2xi)),
  // with the matching half shift for odd orders.
  auto m0 = [=](double xi) -> cdouble {
    double amp = 1.0;
    const double c = std::cos(0.5 * xi);
    for (int i = 0; i < n; ++i) amp *= c;
    amp *= std::sqrt(symbol(xi) / symbol(2.0 * xi));
    if (!odd) return amp;
    return std::polar(amp, -0.5 * xi);
  };
  auto psi = [=](double xi) -> cdouble {
    return std::polar(1.0, 0.5 * xi) * std::conj(m0(0.5 * xi + M_PI)) *
           phi(0.5 * xi);
  };

  WaveletFamily fam;
  fam.name = "battle_lemarie(" + std::to_string(degree) + ")";
  fam.phi_hat = phi;
  fam.psi_hat = psi;
  fam.phi_hat_deriv = [phi](double xi) -> cdouble { return detail::diff5(phi, xi); };
  fam.psi_hat_deriv = [psi](double xi) -> cdouble { return detail::diff5(psi, xi); };
  fam.phi_tail_coef = std::pow(2.0, n) / std::sqrt(pmin);
  fam.phi_tail_pow = n;
  fam.phi_tail_from = 1.0;
  fam.psi_tail_coef = std::pow(4.0, n) / pmin;
  fam.psi_tail_pow = n;
  fam.psi_tail_from = 1.0;
  fam.psi_zero_coef = std::pow(4.0, -n) / std::sqrt(pmin);
  fam.psi_zero_pow = n;
  fam.c_bound = 1.05 * detail::grid_max_psi_deriv(fam, 0.0, 64.0, 64000);
  return fam;
}

// ---------------------------------------------------------------------------
// Daubechies family (experimental): transforms via the truncated infinite
// product of the refinement filter. Orders with closed-form filters only.
// ---------------------------------------------------------------------------
inline WaveletFamily make_daubechies(int order) {
  std::vector<double> h;
  const double s2 = std::sqrt(2.0);
  if (order == 2) {
    const double r3 = std::sqrt(3.0);
    h = {(1 + r3) / (4 * s2), (3 + r3) / (4 * s2), (3 - r3) / (4 * s2),
         (1 - r3) / (4 * s2)};
  } else if (order == 3) {
    const double r10 = std::sqrt(10.0);
    const double q = std::sqrt(5.0 + 2.0 * r10);
    h = {(1 + r10 + q) / (16 * s2),      (5 + r10 + 3 * q) / (16 * s2),
         (10 - 2 * r10 + 2 * q) / (16 * s2), (10 - 2 * r10 - 2 * q) / (16 * s2),
         (5 + r10 - 3 * q) / (16 * s2),  (1 + r10 - q) / (16 * s2)};
  } else {
    throw std::invalid_argument(
        "make_daubechies: supported orders are 2..3, got " +
        std::to_string(order));
  }

  auto m0 = [h, s2](double xi) -> cdouble {
    cdouble acc = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k)
      acc += h[k] * std::polar(1.0, -static_cast<double>(k) * xi);
    return acc / s2;
  };
  auto phi = [m0](double xi) -> cdouble {
    cdouble prod = 1.0;
    double arg = xi;
    for (int i = 0; i < 30; ++i) {
      arg *= 0.5;
      prod *= m0(arg);
      if (std::abs(prod) < 1e-300) break;
    }
    return prod;
  };
  auto psi = [m0, phi](double xi) -> cdouble {
    return std::polar(1.0, 0.5 * xi) * std::conj(m0(0.5 * xi + M_PI)) *
           phi(0.5 * xi);
  };

  WaveletFamily fam;
  fam.name = "daubechies(" + std::to_string(order) + ")";
  fam.phi_hat = phi;
  fam.psi_hat = psi;
  fam.phi_hat_deriv = [phi](double xi) -> cdouble { return detail::diff5(phi, xi); };
  fam.psi_hat_deriv = [psi](double xi) -> cdouble { return detail::diff5(psi, xi); };
  // Slow polynomial decay; the coefficients below must be read as a domain
  // truncation aid, not a sharp envelope.
  fam.phi_tail_coef = 4.0;
  fam.phi_tail_pow = 0.5 + order * 0.3;
  fam.phi_tail_from = 8.0;
  fam.psi_tail_coef = 8.0;
  fam.psi_tail_pow = 0.5 + order * 0.3;
  fam.psi_tail_from = 8.0;
  fam.psi_zero_coef = 1.0;
  fam.psi_zero_pow = order;
  fam.c_bound = 1.05 * detail::grid_max_psi_deriv(fam, 0.0, 64.0, 64000);
  return fam;
}

inline WaveletFamily make_family(const std::string& name, int order = 0) {
  if (name == "meyer") return make_meyer();
  if (name == "battle_lemarie") return make_battle_lemarie(order);
  if (name == "daubechies") return make_daubechies(order);
  throw std::invalid_argument("unknown wavelet family: " + name);
}

// conj of the transform of the dilated/translated wavelet, factored as
// 2^{-j/2} exp(i*xi*l/2^j) conj(psi_hat(xi/2^j)).
inline cdouble eval_pair(const WaveletFamily& fam, int j, long l, double xi) {
  const double scale = std::ldexp(1.0, -j);  // 2^-j
  return std::sqrt(scale) * std::polar(1.0, xi * l * scale) *
         std::conj(fam.psi_hat(xi * scale));
}

// Orthonormality diagnostics used by tests and self-checks.
inline double shift_orthonormality_sum(const WaveletFamily& fam, double xi,
                                       int K) {
  double s = 0.0;
  for (int k = -K; k <= K; ++k) s += std::norm(fam.phi_hat(xi + 2.0 * M_PI * k));
  return s;
}

inline double dyadic_partition_sum(const WaveletFamily& fam, double xi, int J) {
  double s = 0.0;
  for (int j = -J; j <= J; ++j) s += std::norm(fam.psi_hat(std::ldexp(xi, j)));
  return s;
}

}  // namespace wavesim

#endif  // WAVESIM_WAVELETS_HPP
