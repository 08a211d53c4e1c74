#ifndef WAVESIM_SIMULATOR_HPP
#define WAVESIM_SIMULATOR_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavesim/coefficients.hpp"
#include "wavesim/plan.hpp"

namespace wavesim {

enum class Driver { gaussian, uniform_sqrt3 };

inline std::string to_string(Driver d) {
  return d == Driver::gaussian ? "gaussian" : "uniform_sqrt3";
}

inline Driver driver_from_string(const std::string& s) {
  if (s == "gaussian") return Driver::gaussian;
  if (s == "uniform_sqrt3") return Driver::uniform_sqrt3;
  throw std::invalid_argument("unknown driver distribution: " + s);
}

// How random variates are produced. Every variate is addressed by
// (seed, path, stream, index), so draws are independent of evaluation order,
// thread count, and of which other slots a caller touches.
struct GeneratorSpec {
  Driver distribution = Driver::gaussian;
  std::uint64_t seed = 0;
  // Substream policy: counter-per-path is the only policy; kept explicit so
  // exported manifests are self-describing.
  std::string stream_policy = "counter_per_path";
};

namespace rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// One stream per (seed, path, level); index-addressed variates inside.
class VariateStream {
 public:
  VariateStream(std::uint64_t seed, std::uint64_t path, std::uint64_t stream)
      : base_(splitmix64(splitmix64(seed ^ 0x243F6A8885A308D3ULL) +
                         0x9E3779B97F4A7C15ULL * (path + 1)) ^
              splitmix64(0xD1B54A32D192ED03ULL * (stream + 1))) {}

  double uniform01(std::uint64_t index) const {  // in [0, 1)
    return static_cast<double>(bits(index) >> 11) * 0x1.0p-53;
  }

  double draw(Driver d, std::uint64_t index) const {
    if (d == Driver::uniform_sqrt3)
      return std::sqrt(3.0) * (2.0 * uniform01(index) - 1.0);
    // Box-Muller, cosine branch; two counters per variate.
    const double u1 =
        (static_cast<double>(bits(2 * index) >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(bits(2 * index + 1) >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::uint64_t bits(std::uint64_t index) const {
    return splitmix64(base_ + index * 0x9E3779B97F4A7C15ULL);
  }
  std::uint64_t base_;
};

// zig-zag index so translate k and -k map to distinct fixed counters
inline std::uint64_t zigzag(long k) {
  return k >= 0 ? 2 * static_cast<std::uint64_t>(k)
                : 2 * static_cast<std::uint64_t>(-k) - 1;
}

}  // namespace rng

// Slot-addressed access to the driver variables of one path. Stream 0 holds
// the scaling variates, stream 1+j the level-j variates.
class PathVariates {
 public:
  PathVariates(const GeneratorSpec& spec, std::uint64_t path)
      : spec_(spec), path_(path) {}

  double xi(long k) const {
    return rng::VariateStream(spec_.seed, path_, 0)
        .draw(spec_.distribution, rng::zigzag(k));
  }
  double eta(int j, long l) const {
    return rng::VariateStream(spec_.seed, path_, 1 + static_cast<std::uint64_t>(j))
        .draw(spec_.distribution, rng::zigzag(l));
  }

 private:
  GeneratorSpec spec_;
  std::uint64_t path_;
};

// Dense draw record shaped like a plan.
struct DrawRecord {
  std::vector<double> xi;               // k = -(n0-1)..(n0-1)
  std::vector<std::vector<double>> eta; // eta[j]: l = -(m_j-1)..(m_j-1)
  TruncationPlan plan;
  GeneratorSpec spec;
  std::uint64_t path = 0;

  double xi_at(long k) const {
    return xi[static_cast<std::size_t>(k + plan.n0 - 1)];
  }
  double eta_at(int j, long l) const {
    return eta[static_cast<std::size_t>(j)]
              [static_cast<std::size_t>(l + plan.m_at(j) - 1)];
  }
};

inline DrawRecord draw_variables(const GeneratorSpec& spec,
                                 const TruncationPlan& plan,
                                 std::uint64_t path = 0) {
  plan.validate();
  if (plan.total_terms() > 50'000'000LL)
    throw std::invalid_argument(
        "draw_variables: plan holds " + std::to_string(plan.total_terms()) +
        " variables; materializing a dense record at this size is not viable");
  PathVariates v(spec, path);
  DrawRecord rec;
  rec.plan = plan;
  rec.spec = spec;
  rec.path = path;
  rec.xi.resize(static_cast<std::size_t>(2 * plan.n0 - 1));
  for (long k = -(plan.n0 - 1); k <= plan.n0 - 1; ++k)
    rec.xi[static_cast<std::size_t>(k + plan.n0 - 1)] = v.xi(k);
  rec.eta.resize(static_cast<std::size_t>(plan.n));
  for (int j = 0; j < plan.n; ++j) {
    auto& level = rec.eta[static_cast<std::size_t>(j)];
    level.resize(static_cast<std::size_t>(2 * plan.m_at(j) - 1));
    for (long l = -(plan.m_at(j) - 1); l <= plan.m_at(j) - 1; ++l)
      level[static_cast<std::size_t>(l + plan.m_at(j) - 1)] = v.eta(j, l);
  }
  return rec;
}

// X-model at each grid time: sum over k ascending, then levels, then l
// ascending, in one fixed order for reproducibility.
inline std::vector<double> evaluate_x_hat(const CoefficientTable& table,
                                          const DrawRecord& record) {
  if (!(record.plan == table.plan))
    throw std::invalid_argument("evaluate_x_hat: record shape does not match table plan");
  const std::size_t nt = table.nt();
  std::vector<double> x(nt, 0.0);
  for (std::size_t ti = 0; ti < nt; ++ti) {
    double s = 0.0;
    for (long k = -(table.plan.n0 - 1); k <= table.plan.n0 - 1; ++k)
      s += record.xi_at(k) * table.a_at(k, ti);
    for (int j = 0; j < table.plan.n; ++j)
      for (long l = -(table.plan.m_at(j) - 1); l <= table.plan.m_at(j) - 1; ++l)
        s += record.eta_at(j, l) * table.b_at(j, l, ti);
    x[ti] = s;
  }
  return x;
}

inline std::vector<double> evaluate_y_hat(const std::vector<double>& x_hat) {
  std::vector<double> y(x_hat.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::exp(x_hat[i]);
  return y;
}

// Multiplicative route: the product of the individual exponential factors in
// the same fixed order. Partial products are rescaled exactly by powers of
// two, so intermediate overflow cannot corrupt the result.
inline std::vector<double> evaluate_y_hat_product(const CoefficientTable& table,
                                                  const DrawRecord& record) {
  if (!(record.plan == table.plan))
    throw std::invalid_argument(
        "evaluate_y_hat_product: record shape does not match table plan");
  const std::size_t nt = table.nt();
  std::vector<double> y(nt);
  for (std::size_t ti = 0; ti < nt; ++ti) {
    double mant = 1.0;
    long long exp2 = 0;
    auto mul_factor = [&](double arg, const char* kind, int j, long idx) {
      if (std::fabs(arg) > 700.0)
        throw std::overflow_error(
            std::string("evaluate_y_hat_product: factor exp(") +
            std::to_string(arg) + ") overflows at " + kind +
            (j >= 0 ? " j=" + std::to_string(j) : std::string()) +
            " index " + std::to_string(idx));
      mant *= std::exp(arg);
      int e = 0;
      mant = std::frexp(mant, &e);
      exp2 += e;
    };
    for (long k = -(table.plan.n0 - 1); k <= table.plan.n0 - 1; ++k)
      mul_factor(record.xi_at(k) * table.a_at(k, ti), "scaling", -1, k);
    for (int j = 0; j < table.plan.n; ++j)
      for (long l = -(table.plan.m_at(j) - 1); l <= table.plan.m_at(j) - 1; ++l)
        mul_factor(record.eta_at(j, l) * table.b_at(j, l, ti), "level", j, l);
    y[ti] = std::ldexp(mant, static_cast<int>(exp2));
  }
  return y;
}

struct PathSample {
  std::vector<double> t_grid;
  std::vector<double> x_hat;
  std::vector<double> y_hat;
  DrawRecord draws;
};

// Independent paths via per-path substreams; paths 0..n-1 for one seed are a
// prefix of any longer batch with the same seed.
inline std::vector<PathSample> simulate_batch(const CoefficientTable& table,
                                              const GeneratorSpec& spec,
                                              std::size_t n_paths) {
  if (n_paths < 1) throw std::invalid_argument("simulate_batch: n_paths must be >= 1");
  std::vector<PathSample> out;
  out.reserve(n_paths);
  for (std::size_t p = 0; p < n_paths; ++p) {
    PathSample s;
    s.t_grid = table.t_grid;
    s.draws = draw_variables(spec, table.plan, p);
    s.x_hat = evaluate_x_hat(table, s.draws);
    s.y_hat = evaluate_y_hat(s.x_hat);
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<PathSample> simulate_batch(const Kernel& kernel,
                                              const WaveletFamily& family,
                                              const TruncationPlan& plan,
                                              const GeneratorSpec& spec,
                                              const std::vector<double>& t_grid,
                                              std::size_t n_paths,
                                              double tol = 1e-10) {
  return simulate_batch(build_table(kernel, family, plan, t_grid, tol), spec,
                        n_paths);
}

}  // namespace wavesim

#endif  // WAVESIM_SIMULATOR_HPP
