#ifndef WAVESIM_KERNELS_HPP
#define WAVESIM_KERNELS_HPP

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavesim/quadrature.hpp"

namespace wavesim {

using cdouble = std::complex<double>;

// Factor u(t,y) of a covariance R(t,s) = integral u(t,y) conj(u(s,y)) dy,
// together with the envelope functions the planner integrates. Envelopes are
// supplied analytically by each constructor and property-tested, not derived.
struct Kernel {
  std::string name;

  std::function<cdouble(double, double)> u;      // u(t, y)
  std::function<cdouble(double, double)> u_dy;   // d u / d y

  // |u(t,y)| <= |t| * env_u1_linear(y)          (time-linear growth form)
  // |u(t,y)| <=       env_u1_uniform(y)         (time-uniform form)
  // |u_dy(t,y)| <= |t| * env_u2(y)
  // |u_dy(t1,y)-u_dy(t2,y)| <= |t1-t2| * env_v(y)
  // |u(t1,y)-u(t2,y)|       <= |t1-t2| * env_w(y)
  std::function<double(double)> env_u1_linear;
  std::function<double(double)> env_u1_uniform;
  std::function<double(double)> env_u2;
  std::function<double(double)> env_v;
  std::function<double(double)> env_w;

  bool condition_rc = false;         // expansion coefficients are real
  bool has_linear_envelopes = false; // env_u1_linear/env_u2 valid
  bool has_uniform_envelopes = false;// env_u1_uniform/env_u2 valid
  bool has_increment_envelopes = false; // env_v/env_w valid

  // Frequency radius beyond which every envelope integrand tail is below eps
  // (used to truncate quadrature domains; conservative).
  std::function<double(double)> domain_cut;
};

class realness_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// R(t,s) by adaptive quadrature; the imaginary part must die below tol.
inline double covariance(const Kernel& k, double t, double s, double tol) {
  if (!(tol > 0)) throw std::invalid_argument("covariance: tol must be > 0");
  const double cut = k.domain_cut ? k.domain_cut(0.25 * tol) : 64.0;
  auto f = [&](double y) -> cdouble { return k.u(t, y) * std::conj(k.u(s, y)); };
  std::vector<double> seeds;
  // Stationary-type kernels oscillate like exp(i (t-s) y).
  const double om = std::fabs(t - s);
  if (om * cut > 8.0) seeds = quad::oscillation_breakpoints(-cut, cut, om);
  for (double x = 0.5; x < cut; x *= 2.0) {  // keep concentrated mass visible
    seeds.push_back(x);
    seeds.push_back(-x);
  }
  auto r = quad::integrate(f, -cut, cut, 0.5 * tol, seeds);
  if (std::fabs(r.value.imag()) > tol)
    throw realness_error("covariance: imaginary part " +
                         std::to_string(r.value.imag()) + " exceeds tol at (" +
                         std::to_string(t) + ", " + std::to_string(s) + ")");
  return r.value.real();
}

// u(t,y) = t / (1 + t^2 + y^2)^4.
inline Kernel make_example1_kernel() {
  Kernel k;
  k.name = "example1";
  k.u = [](double t, double y) -> cdouble {
    const double d = 1.0 + t * t + y * y;
    const double d2 = d * d;
    return t / (d2 * d2);
  };
  k.u_dy = [](double t, double y) -> cdouble {
    const double d = 1.0 + t * t + y * y;
    const double d2 = d * d;
    return -8.0 * t * y / (d2 * d2 * d);
  };
  k.env_u1_linear = [](double y) {
    const double a = 1.0 + y * y;
    const double a2 = a * a;
    return 1.0 / (a2 * a2);
  };
  // sup_t |u| = max over t of t/(1+t^2+y^2)^4 <= 0.5 (1+y^2)^-3.
  k.env_u1_uniform = [](double y) {
    const double a = 1.0 + y * y;
    return 0.5 / (a * a * a);
  };
  k.env_u2 = [](double y) {
    const double a = 1.0 + y * y;
    const double a2 = a * a;
    return 8.0 * std::fabs(y) / (a2 * a2 * a);
  };
  // sup_t |du/dt| = (1+y^2)^-4 and sup_t |d^2u/dtdy| = 8|y|(1+y^2)^-5
  // (both suprema are attained at t = 0).
  k.env_w = k.env_u1_linear;
  k.env_v = k.env_u2;
  k.condition_rc = true;
  k.has_linear_envelopes = true;
  k.has_uniform_envelopes = true;
  k.has_increment_envelopes = true;
  k.domain_cut = [](double eps) {
    // tails of (1+y^2)^-3 dominate: int_{|y|>Y} <= Y^-5 / 2.5
    const double y = std::pow(0.4 * std::max(eps, 1e-300), -0.2);
    return std::max(6.0, y);
  };
  return k;
}

// u(t,y) = t / (1 + t^2 + exp(y^2)).
inline Kernel make_example2_kernel() {
  Kernel k;
  k.name = "example2";
  k.u = [](double t, double y) -> cdouble {
    return t / (1.0 + t * t + std::exp(y * y));
  };
  k.u_dy = [](double t, double y) -> cdouble {
    const double e = std::exp(y * y);
    const double d = 1.0 + t * t + e;
    return -2.0 * t * y * e / (d * d);
  };
  k.env_u1_linear = [](double y) { return 1.0 / (1.0 + std::exp(y * y)); };
  k.env_u1_uniform = [](double y) {
    return 0.5 / std::sqrt(1.0 + std::exp(y * y));
  };
  k.env_u2 = [](double y) {
    const double e = std::exp(y * y);
    const double d = 1.0 + e;
    return 2.0 * std::fabs(y) * e / (d * d);
  };
  k.env_w = [](double y) { return 1.0 / (1.0 + std::exp(y * y)); };
  k.env_v = k.env_u2;
  k.condition_rc = true;
  k.has_linear_envelopes = true;
  k.has_uniform_envelopes = true;
  k.has_increment_envelopes = true;
  k.domain_cut = [](double eps) {
    // envelopes decay at least like exp(-y^2/2)
    const double y = std::sqrt(2.0 * std::log(4.0 / std::max(eps, 1e-300)));
    return std::max(4.0, y);
  };
  return k;
}

// Optional analytic extras for stationary kernels.
struct StationaryOptions {
  std::function<double(double)> density_deriv;  // f'(y), enables u_dy
  std::function<double(double)> env_u2;
  std::function<double(double)> env_v;
  std::function<double(double)> env_w;
  bool even_density = true;
  double cut_scale = 1.0;  // domain_cut(eps) = sqrt-type inversion hint
  std::function<double(double)> domain_cut;
};

// Wide-sense stationary factor u(t,y) = exp(i t y) sqrt(f(y)).
inline Kernel make_stationary_kernel(const std::string& name,
                                     std::function<double(double)> density,
                                     StationaryOptions opts = {}) {
  // reject negative densities early
  for (int i = 0; i <= 1000; ++i) {
    const double y = -50.0 + 0.1 * i;
    if (density(y) < 0.0)
      throw std::invalid_argument("make_stationary_kernel: density negative at y=" +
                                  std::to_string(y));
  }
  Kernel k;
  k.name = name;
  k.u = [density](double t, double y) -> cdouble {
    return std::polar(std::sqrt(std::max(0.0, density(y))), t * y);
  };
  if (opts.density_deriv) {
    auto f = density;
    auto fd = opts.density_deriv;
    k.u_dy = [f, fd](double t, double y) -> cdouble {
      const double fy = std::max(0.0, f(y));
      const double root = std::sqrt(fy);
      const cdouble phase = std::polar(1.0, t * y);
      cdouble deriv = cdouble(0.0, t) * phase * root;
      if (root > 0) deriv += phase * fd(y) / (2.0 * root);
      return deriv;
    };
  }
  k.env_u1_uniform = [density](double y) {
    return std::sqrt(std::max(0.0, density(y)));
  };
  k.has_uniform_envelopes = static_cast<bool>(opts.env_u2);
  k.env_u2 = opts.env_u2;
  k.env_v = opts.env_v;
  k.env_w = opts.env_w;
  k.has_increment_envelopes = opts.env_v && opts.env_w;
  k.condition_rc = opts.even_density;
  if (opts.domain_cut) {
    k.domain_cut = opts.domain_cut;
  } else {
    auto f = density;
    k.domain_cut = [f](double eps) {
      double y = 4.0;
      while (y < 4096.0 && std::sqrt(std::max(0.0, f(y))) * y > 0.25 * eps)
        y *= 2.0;
      return y;
    };
  }
  return k;
}

}  // namespace wavesim

#endif  // WAVESIM_KERNELS_HPP
