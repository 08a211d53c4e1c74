#ifndef WAVESIM_PLAN_HPP
#define WAVESIM_PLAN_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wavesim {

// What the user asks for: accuracy delta with reliability 1-epsilon in the
// chosen norm on [0,T].
struct AccuracyRequest {
  enum class Norm { uniform_relative, lp };

  Norm norm = Norm::uniform_relative;
  double delta = 0.1;
  double epsilon = 0.05;
  double T = 1.0;
  double p = 2.0;       // lp only
  double theta = 0.5;   // uniform only, in (0,1)
  std::optional<double> sup_exp_moment;  // sup_t E exp(2 p X(t)), lp only

  void validate() const {
    if (!(delta > 0)) throw std::invalid_argument("accuracy.delta must be > 0");
    if (!(epsilon > 0 && epsilon < 1))
      throw std::invalid_argument("accuracy.epsilon must be in (0,1)");
    if (!(T > 0)) throw std::invalid_argument("accuracy.T must be > 0");
    if (norm == Norm::lp && !(p >= 1))
      throw std::invalid_argument("accuracy.p must be >= 1");
    if (norm == Norm::uniform_relative && !(theta > 0 && theta < 1))
      throw std::invalid_argument("accuracy.theta must be in (0,1)");
    if (sup_exp_moment && !(*sup_exp_moment > 0))
      throw std::invalid_argument("accuracy.sup_exp_moment must be > 0");
  }
};

inline std::string to_string(AccuracyRequest::Norm n) {
  return n == AccuracyRequest::Norm::uniform_relative ? "uniform" : "lp";
}

// Records how a plan was produced: which bound family, the request, and every
// intermediate scalar, so a plan is auditable and reproducible.
struct Certificate {
  std::string method;  // "mean_square" | "increment" | "uniform" | "lp"
  AccuracyRequest request;
  std::map<std::string, double> intermediates;
  bool degenerate = false;  // all envelope constants vanished
};

// Truncation sizes of the model: scaling translates |k| < n0, detail levels
// j < n, per-level translates |l| < m[j].
struct TruncationPlan {
  long n0 = 1;
  int n = 1;
  std::vector<long> m;
  Certificate certificate;

  void validate() const {
    if (n0 < 1) throw std::invalid_argument("plan.n0 must be >= 1");
    if (n < 1) throw std::invalid_argument("plan.n must be >= 1");
    if (static_cast<int>(m.size()) != n)
      throw std::invalid_argument("plan.m must have one entry per level");
    for (long mj : m)
      if (mj < 1) throw std::invalid_argument("plan.m entries must be >= 1");
  }

  long m_at(int j) const { return m.at(static_cast<std::size_t>(j)); }

  // Number of random variables the model consumes.
  long long total_terms() const {
    long long total = 2 * static_cast<long long>(n0) - 1;
    for (long mj : m) total += 2 * static_cast<long long>(mj) - 1;
    return total;
  }

  bool operator==(const TruncationPlan& o) const {
    return n0 == o.n0 && n == o.n && m == o.m;
  }

  TruncationPlan scaled(long factor) const {
    if (factor < 1) throw std::invalid_argument("plan scale factor must be >= 1");
    TruncationPlan r;
    r.n0 = n0 * factor;
    r.n = static_cast<int>(n * factor);
    const long mj = m.empty() ? 1 : m.front();
    r.m.assign(static_cast<std::size_t>(r.n), mj * factor);
    r.certificate = certificate;
    r.certificate.method += "(scaled reference)";
    return r;
  }
};

}  // namespace wavesim

#endif  // WAVESIM_PLAN_HPP
