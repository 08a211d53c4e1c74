#ifndef WAVESIM_IO_HPP
#define WAVESIM_IO_HPP

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "wavesim/coefficients.hpp"
#include "wavesim/kernels.hpp"
#include "wavesim/plan.hpp"
#include "wavesim/simulator.hpp"
#include "wavesim/validation.hpp"
#include "wavesim/wavelets.hpp"

namespace wavesim {

using nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// small helpers
// ---------------------------------------------------------------------------
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Shortest decimal representation that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Write-then-rename so readers never observe a partial file.
inline void atomic_write(const std::filesystem::path& path,
                         const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------
inline json to_json(const AccuracyRequest& r) {
  json j{{"norm", to_string(r.norm)},
         {"delta", r.delta},
         {"epsilon", r.epsilon},
         {"T", r.T},
         {"p", r.p},
         {"theta", r.theta}};
  if (r.sup_exp_moment) j["sup_exp_moment"] = *r.sup_exp_moment;
  return j;
}

inline AccuracyRequest accuracy_from_json(const json& j) {
  AccuracyRequest r;
  const std::string norm = j.value("norm", "uniform");
  if (norm == "uniform" || norm == "uniform_relative")
    r.norm = AccuracyRequest::Norm::uniform_relative;
  else if (norm == "lp")
    r.norm = AccuracyRequest::Norm::lp;
  else
    throw config_error("accuracy.norm must be \"uniform\" or \"lp\", got \"" +
                       norm + "\"");
  r.delta = j.value("delta", 0.1);
  r.epsilon = j.value("epsilon", 0.05);
  r.T = j.value("T", 1.0);
  r.p = j.value("p", 2.0);
  r.theta = j.value("theta", 0.5);
  if (j.contains("sup_exp_moment"))
    r.sup_exp_moment = j.at("sup_exp_moment").get<double>();
  try {
    r.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
  return r;
}

inline json to_json(const Certificate& c) {
  return json{{"method", c.method},
              {"request", to_json(c.request)},
              {"intermediates", c.intermediates},
              {"degenerate", c.degenerate}};
}

inline Certificate certificate_from_json(const json& j) {
  Certificate c;
  c.method = j.value("method", "");
  if (j.contains("request")) c.request = accuracy_from_json(j.at("request"));
  if (j.contains("intermediates"))
    c.intermediates =
        j.at("intermediates").get<std::map<std::string, double>>();
  c.degenerate = j.value("degenerate", false);
  return c;
}

inline json to_json(const TruncationPlan& p) {
  return json{{"n0", p.n0},
              {"n", p.n},
              {"m", p.m},
              {"certificate", to_json(p.certificate)}};
}

inline TruncationPlan plan_from_json(const json& j) {
  TruncationPlan p;
  p.n0 = j.at("n0").get<long>();
  p.n = j.at("n").get<int>();
  p.m = j.at("m").get<std::vector<long>>();
  if (j.contains("certificate"))
    p.certificate = certificate_from_json(j.at("certificate"));
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
  return p;
}

inline json to_json(const PlannerConstants& c) {
  return json{{"e1", c.e1},       {"e2", c.e2}, {"f1", c.f1}, {"f2", c.f2},
              {"a1", c.a1},       {"b0", c.b0}, {"b1", c.b1}, {"s1", c.s1},
              {"s2", c.s2},       {"q1", c.q1}, {"q2", c.q2}, {"d", c.d},
              {"c_bound", c.c_bound}, {"quad_errors", c.quad_errors}};
}

inline json to_json(const ReliabilityReport& r) {
  return json{{"request", to_json(r.request)},
              {"plan", to_json(r.plan)},
              {"reference_plan", to_json(r.reference_plan)},
              {"n_paths", r.n_paths},
              {"exceedance_count", r.exceedance_count},
              {"empirical_probability", r.empirical_probability},
              {"wilson_upper", r.wilson_upper},
              {"pass", r.pass},
              {"sigma_neglect_max", r.sigma_neglect_max},
              {"stat_slack_max", r.stat_slack_max},
              {"max_statistic", r.max_statistic},
              {"window_complete", r.window_complete},
              {"window_slots_computed", r.window_slots_computed},
              {"window_slots_total", r.window_slots_total},
              {"grid_points", r.grid_points},
              {"note", r.note}};
}

inline json to_json(const DecayReport& r) {
  json v = json::array();
  for (const auto& x : r.violations)
    v.push_back(json{{"which", x.which},
                     {"k", x.k},
                     {"j", x.j},
                     {"l", x.l},
                     {"t", x.t},
                     {"lhs", x.lhs},
                     {"rhs", x.rhs}});
  return json{{"pass", r.pass},
              {"worst_margin", r.worst_margin},
              {"a00_bound", r.a00_bound},
              {"checks", r.checks},
              {"violations", v}};
}

inline DecayReport decay_from_json(const json& j) {
  DecayReport r;
  r.pass = j.at("pass").get<bool>();
  r.worst_margin = j.at("worst_margin").get<double>();
  r.a00_bound = j.at("a00_bound").get<double>();
  r.checks = j.at("checks").get<std::size_t>();
  for (const auto& x : j.at("violations"))
    r.violations.push_back({x.at("which").get<std::string>(),
                            x.at("k").get<long>(), x.at("j").get<int>(),
                            x.at("l").get<long>(), x.at("t").get<double>(),
                            x.at("lhs").get<double>(), x.at("rhs").get<double>()});
  return r;
}

inline json to_json(const MeanSquareReport& r) {
  return json{{"pass", r.pass},
              {"delta", r.delta},
              {"max_tail", r.max_tail},
              {"argmax_t", r.argmax_t},
              {"plan", to_json(r.plan)},
              {"cutoffs", to_json(r.cutoffs)}};
}

inline MeanSquareReport mean_square_from_json(const json& j) {
  MeanSquareReport r;
  r.pass = j.at("pass").get<bool>();
  r.delta = j.at("delta").get<double>();
  r.max_tail = j.at("max_tail").get<double>();
  r.argmax_t = j.at("argmax_t").get<double>();
  r.plan = plan_from_json(j.at("plan"));
  r.cutoffs = plan_from_json(j.at("cutoffs"));
  return r;
}

inline json to_json(const SubGaussianReport& r) {
  json m = json::array();
  for (const auto& x : r.moments)
    m.push_back(json{{"p", x.p},
                     {"empirical", x.empirical},
                     {"bound", x.bound},
                     {"stderr", x.stderr_est},
                     {"pass", x.pass}});
  return json{{"distribution", to_string(r.distribution)},
              {"n_draws", r.n_draws},
              {"pass", r.pass},
              {"moments", m}};
}

inline SubGaussianReport subgaussian_from_json(const json& j) {
  SubGaussianReport r;
  r.distribution = driver_from_string(j.at("distribution").get<std::string>());
  r.n_draws = j.at("n_draws").get<std::size_t>();
  r.pass = j.at("pass").get<bool>();
  for (const auto& x : j.at("moments"))
    r.moments.push_back({x.at("p").get<double>(),
                         x.at("empirical").get<double>(),
                         x.at("bound").get<double>(),
                         x.at("stderr").get<double>(),
                         x.at("pass").get<bool>()});
  return r;
}

inline ReliabilityReport reliability_from_json(const json& j) {
  ReliabilityReport r;
  r.request = accuracy_from_json(j.at("request"));
  r.plan = plan_from_json(j.at("plan"));
  r.reference_plan = plan_from_json(j.at("reference_plan"));
  r.n_paths = j.at("n_paths").get<std::size_t>();
  r.exceedance_count = j.at("exceedance_count").get<std::size_t>();
  r.empirical_probability = j.at("empirical_probability").get<double>();
  r.wilson_upper = j.at("wilson_upper").get<double>();
  r.pass = j.at("pass").get<bool>();
  r.sigma_neglect_max = j.at("sigma_neglect_max").get<double>();
  r.stat_slack_max = j.at("stat_slack_max").get<double>();
  r.max_statistic = j.at("max_statistic").get<double>();
  r.window_complete = j.at("window_complete").get<bool>();
  r.window_slots_computed = j.at("window_slots_computed").get<std::size_t>();
  r.window_slots_total = j.at("window_slots_total").get<long long>();
  r.grid_points = j.at("grid_points").get<int>();
  r.note = j.value("note", "");
  return r;
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------
struct RunConfig {
  std::string kernel_name = "example1";
  std::string wavelet_name = "meyer";
  int wavelet_order = 0;

  AccuracyRequest accuracy;

  int grid_points = 101;

  Driver distribution = Driver::gaussian;
  std::uint64_t seed = 1;
  std::size_t n_paths = 100;

  double quad_tol = 1e-10;
  double constants_rel_tol = 0.01;

  long ref_multiplier = 4;
  int validation_grid_points = 201;
  double coef_floor = 1e-9;
  std::optional<std::size_t> validation_paths;  // defaults to generator.paths

  std::optional<TruncationPlan> plan_override;

  std::string output_dir = "out";

  json raw;  // canonical parsed form, for hashing and provenance
};

inline json to_json(const RunConfig& c) {
  json j;
  j["kernel"] = {{"name", c.kernel_name}};
  j["wavelet"] = {{"name", c.wavelet_name}, {"order", c.wavelet_order}};
  j["accuracy"] = to_json(c.accuracy);
  j["grid"] = {{"points", c.grid_points}};
  j["generator"] = {{"distribution", to_string(c.distribution)},
                    {"seed", c.seed},
                    {"paths", c.n_paths}};
  j["quadrature"] = {{"tol", c.quad_tol},
                     {"constants_rel_tol", c.constants_rel_tol}};
  j["validation"] = {{"ref_multiplier", c.ref_multiplier},
                     {"grid_points", c.validation_grid_points},
                     {"coef_floor", c.coef_floor}};
  if (c.validation_paths) j["validation"]["paths"] = *c.validation_paths;
  if (c.plan_override) {
    j["plan_override"] = {{"n0", c.plan_override->n0},
                          {"n", c.plan_override->n},
                          {"m", c.plan_override->m.empty()
                                    ? 1L
                                    : c.plan_override->m.front()}};
  }
  j["output"] = {{"dir", c.output_dir}};
  return j;
}

inline RunConfig config_from_json(const json& j) {
  RunConfig c;
  try {
    if (j.contains("kernel")) c.kernel_name = j.at("kernel").value("name", c.kernel_name);
    if (j.contains("wavelet")) {
      c.wavelet_name = j.at("wavelet").value("name", c.wavelet_name);
      c.wavelet_order = j.at("wavelet").value("order", 0);
    }
    if (j.contains("accuracy")) c.accuracy = accuracy_from_json(j.at("accuracy"));
    if (j.contains("grid")) {
      c.grid_points = j.at("grid").value("points", c.grid_points);
      if (c.grid_points < 2) throw config_error("grid.points must be >= 2");
    }
    if (j.contains("generator")) {
      const auto& g = j.at("generator");
      c.distribution = driver_from_string(g.value("distribution", "gaussian"));
      c.seed = g.value("seed", static_cast<std::uint64_t>(1));
      c.n_paths = g.value("paths", static_cast<std::size_t>(100));
      if (c.n_paths < 1) throw config_error("generator.paths must be >= 1");
    }
    if (j.contains("quadrature")) {
      const auto& q = j.at("quadrature");
      c.quad_tol = q.value("tol", c.quad_tol);
      c.constants_rel_tol = q.value("constants_rel_tol", c.constants_rel_tol);
      if (!(c.quad_tol > 0)) throw config_error("quadrature.tol must be > 0");
      if (!(c.constants_rel_tol > 0 && c.constants_rel_tol <= 0.2))
        throw config_error("quadrature.constants_rel_tol must be in (0, 0.2]");
    }
    if (j.contains("validation")) {
      const auto& v = j.at("validation");
      c.ref_multiplier = v.value("ref_multiplier", c.ref_multiplier);
      c.validation_grid_points = v.value("grid_points", c.validation_grid_points);
      c.coef_floor = v.value("coef_floor", c.coef_floor);
      if (v.contains("paths"))
        c.validation_paths = v.at("paths").get<std::size_t>();
      if (c.ref_multiplier < 1)
        throw config_error("validation.ref_multiplier must be >= 1");
      if (c.validation_grid_points < 2)
        throw config_error("validation.grid_points must be >= 2");
      if (!(c.coef_floor > 0))
        throw config_error("validation.coef_floor must be > 0");
      if (c.validation_paths && *c.validation_paths < 1)
        throw config_error("validation.paths must be >= 1");
    }
    if (j.contains("plan_override")) {
      const auto& p = j.at("plan_override");
      TruncationPlan plan;
      plan.n0 = p.at("n0").get<long>();
      plan.n = p.at("n").get<int>();
      const long m = p.at("m").get<long>();
      plan.m.assign(static_cast<std::size_t>(plan.n), m);
      plan.certificate.method = "manual";
      plan.validate();
      c.plan_override = plan;
    }
    if (j.contains("output")) c.output_dir = j.at("output").value("dir", c.output_dir);
  } catch (const config_error&) {
    throw;
  } catch (const std::exception& e) {
    throw config_error(std::string("config: ") + e.what());
  }
  c.raw = to_json(c);
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const std::exception& e) {
    throw config_error("cannot parse " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

inline std::string config_hash(const RunConfig& c) {
  return hex64(fnv1a64(c.raw.dump()));
}

inline Kernel make_kernel(const RunConfig& c) {
  if (c.kernel_name == "example1") return make_example1_kernel();
  if (c.kernel_name == "example2") return make_example2_kernel();
  if (c.kernel_name == "stationary_gaussian")
    return make_stationary_kernel("stationary_gaussian",
                                  [](double y) { return std::exp(-y * y); });
  throw config_error("unknown kernel \"" + c.kernel_name +
                     "\"; built-ins: example1, example2, stationary_gaussian");
}

inline WaveletFamily make_wavelet(const RunConfig& c) {
  try {
    return make_family(c.wavelet_name, c.wavelet_order);
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
}

// ---------------------------------------------------------------------------
// Path CSV (+ plot export) and manifest
// ---------------------------------------------------------------------------
inline std::string paths_to_csv(const std::vector<double>& t_grid,
                                const std::vector<PathSample>& paths) {
  std::string out = "t";
  for (std::size_t p = 0; p < paths.size(); ++p)
    out += ",path" + std::to_string(p);
  out += "\n";
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    out += format_double(t_grid[i]);
    for (const auto& path : paths) {
      out += ',';
      out += format_double(path.y_hat[i]);
    }
    out += '\n';
  }
  return out;
}

inline std::string csv_to_plot(const std::string& csv) {
  std::string out = "# ";
  out.reserve(csv.size() + 2);
  for (char ch : csv) out += (ch == ',') ? ' ' : ch;
  return out;
}

inline json simulation_manifest(const RunConfig& cfg, const TruncationPlan& plan,
                                std::size_t n_paths) {
  return json{{"tool", "wavesim"},
              {"version", kVersion},
              {"config_hash", config_hash(cfg)},
              {"kernel", cfg.kernel_name},
              {"wavelet", cfg.wavelet_name},
              {"wavelet_order", cfg.wavelet_order},
              {"distribution", to_string(cfg.distribution)},
              {"stream_policy", "counter_per_path"},
              {"seed", cfg.seed},
              {"n_paths", n_paths},
              {"grid_points", cfg.grid_points},
              {"T", cfg.accuracy.T},
              {"columns", "y"},
              {"plan", to_json(plan)}};
}

// ---------------------------------------------------------------------------
// Coefficient table cache: versioned binary file, bit-exact round trip.
// ---------------------------------------------------------------------------
namespace cache {

inline json table_header(const CoefficientTable& t) {
  return json{{"format", "wavesim-coeff-table"},
              {"format_version", 1},
              {"kernel", t.kernel_name},
              {"family", t.family_name},
              {"n0", t.plan.n0},
              {"n", t.plan.n},
              {"m", t.plan.m},
              {"tol", t.quad_tol},
              {"nt", t.t_grid.size()}};
}

inline void append_doubles(std::string& out, const std::vector<double>& v) {
  const char* p = reinterpret_cast<const char*>(v.data());
  out.append(p, v.size() * sizeof(double));
}

inline std::string serialize_table(const CoefficientTable& t) {
  const std::string header = table_header(t).dump();
  std::string out = "WSCT1\n";
  const std::uint64_t len = header.size();
  out.append(reinterpret_cast<const char*>(&len), sizeof len);
  out += header;
  append_doubles(out, t.t_grid);
  append_doubles(out, t.a);
  for (const auto& level : t.b) append_doubles(out, level);
  return out;
}

inline std::vector<double> take_doubles(const std::string& buf,
                                        std::size_t& off, std::size_t n) {
  if (off + n * sizeof(double) > buf.size())
    throw std::runtime_error("coefficient cache: truncated payload");
  std::vector<double> v(n);
  std::memcpy(v.data(), buf.data() + off, n * sizeof(double));
  off += n * sizeof(double);
  return v;
}

inline CoefficientTable deserialize_table(const std::string& buf) {
  if (buf.rfind("WSCT1\n", 0) != 0)
    throw std::runtime_error("coefficient cache: bad magic");
  std::size_t off = 6;
  std::uint64_t len = 0;
  std::memcpy(&len, buf.data() + off, sizeof len);
  off += sizeof len;
  const json h = json::parse(buf.substr(off, len));
  off += len;
  if (h.value("format_version", 0) != 1)
    throw std::runtime_error("coefficient cache: unsupported version");

  CoefficientTable t;
  t.kernel_name = h.at("kernel").get<std::string>();
  t.family_name = h.at("family").get<std::string>();
  t.plan.n0 = h.at("n0").get<long>();
  t.plan.n = h.at("n").get<int>();
  t.plan.m = h.at("m").get<std::vector<long>>();
  t.plan.certificate.method = "cached";
  t.quad_tol = h.at("tol").get<double>();
  const std::size_t nt = h.at("nt").get<std::size_t>();
  t.t_grid = take_doubles(buf, off, nt);
  t.a = take_doubles(buf, off, static_cast<std::size_t>(2 * t.plan.n0 - 1) * nt);
  for (int j = 0; j < t.plan.n; ++j)
    t.b.push_back(take_doubles(
        buf, off, static_cast<std::size_t>(2 * t.plan.m_at(j) - 1) * nt));
  if (off != buf.size())
    throw std::runtime_error("coefficient cache: trailing bytes");
  return t;
}

inline std::string grid_hash(const std::vector<double>& grid) {
  std::string bytes(reinterpret_cast<const char*>(grid.data()),
                    grid.size() * sizeof(double));
  return hex64(fnv1a64(bytes));
}

inline std::string cache_key(const std::string& kernel, const std::string& family,
                             const TruncationPlan& plan,
                             const std::vector<double>& grid, double tol) {
  json j{{"kernel", kernel}, {"family", family},     {"n0", plan.n0},
         {"n", plan.n},      {"m", plan.m},          {"tol", tol},
         {"grid", grid_hash(grid)}};
  return hex64(fnv1a64(j.dump()));
}

inline std::filesystem::path cache_dir(const RunConfig& cfg) {
  if (const char* env = std::getenv("WAVESIM_CACHE_DIR")) return env;
  return std::filesystem::path(cfg.output_dir) / "cache";
}

// Load when a fresh entry exists, else build and store.
inline CoefficientTable load_or_build(const RunConfig& cfg, const Kernel& kernel,
                                      const WaveletFamily& family,
                                      const TruncationPlan& plan,
                                      const std::vector<double>& grid,
                                      bool* from_cache = nullptr) {
  namespace fs = std::filesystem;
  const fs::path dir = cache_dir(cfg);
  const fs::path file =
      dir / (cache_key(kernel.name, family.name, plan, grid, cfg.quad_tol) +
             ".wsc");
  if (from_cache) *from_cache = false;
  if (fs::exists(file)) {
    try {
      CoefficientTable t = deserialize_table(read_file(file));
      if (t.kernel_name == kernel.name && t.family_name == family.name &&
          t.quad_tol == cfg.quad_tol && t.t_grid == grid &&
          t.plan.n0 == plan.n0 && t.plan.n == plan.n && t.plan.m == plan.m) {
        t.plan = plan;
        if (from_cache) *from_cache = true;
        return t;
      }
    } catch (const std::exception&) {
      // stale or damaged entry: rebuild below
    }
  }
  CoefficientTable t = build_table(kernel, family, plan, grid, cfg.quad_tol);
  atomic_write(file, serialize_table(t));
  return t;
}

}  // namespace cache

}  // namespace wavesim

#endif  // WAVESIM_IO_HPP
