#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

#include "wavesim/io.hpp"

using namespace wavesim;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("wavesim_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json base_config(const fs::path& out_dir) {
  return json{
      {"kernel", {{"name", "example1"}}},
      {"wavelet", {{"name", "meyer"}}},
      {"accuracy",
       {{"norm", "uniform"}, {"delta", 0.1}, {"epsilon", 0.05}, {"T", 1.0}}},
      {"grid", {{"points", 9}}},
      {"generator",
       {{"distribution", "gaussian"}, {"seed", 7}, {"paths", 5}}},
      {"quadrature", {{"tol", 1e-9}}},
      {"validation",
       {{"ref_multiplier", 2},
        {"grid_points", 17},
        {"coef_floor", 1e-8},
        {"paths", 300}}},
      {"plan_override", {{"n0", 6}, {"n", 2}, {"m", 6}}},
      {"output", {{"dir", out_dir.string()}}}};
}

#ifdef WAVESIM_CLI_PATH
int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(WAVESIM_CLI_PATH) + " " + args + " > " +
                          log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}
#endif

}  // namespace

TEST_CASE("config parse -> serialize -> parse is idempotent") {
  const auto dir = temp_dir("cfg");
  const json j = base_config(dir);
  const RunConfig c1 = config_from_json(j);
  const RunConfig c2 = config_from_json(to_json(c1));
  CHECK(to_json(c1) == to_json(c2));
  CHECK(config_hash(c1) == config_hash(c2));
  CHECK(c1.plan_override->n0 == 6);
}

TEST_CASE("config validation names the offending field") {
  json j = base_config(temp_dir("cfg2"));
  j["accuracy"]["epsilon"] = 1.5;
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("epsilon"),
                       config_error);
  j = base_config(temp_dir("cfg3"));
  j["generator"]["distribution"] = "cauchy";
  CHECK_THROWS_AS(config_from_json(j), config_error);
  j = base_config(temp_dir("cfg4"));
  j["accuracy"]["norm"] = "sup";
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("norm"),
                       config_error);
}

TEST_CASE("shortest round-trip double formatting") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 2000; ++i) {
    const double v = u(rng) * std::pow(10.0, (i % 40) - 20);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("atomic write leaves no temporary behind") {
  const auto dir = temp_dir("atomic");
  atomic_write(dir / "a.txt", "payload");
  CHECK(read_file(dir / "a.txt") == "payload");
  CHECK_FALSE(fs::exists(dir / "a.txt.tmp"));
}

TEST_CASE("coefficient cache round-trips bit for bit and detects staleness") {
  const auto kernel = make_example1_kernel();
  const auto fam = make_meyer();
  TruncationPlan plan;
  plan.n0 = 5;
  plan.n = 2;
  plan.m = {4, 4};
  const std::vector<double> grid{0.0, 0.5, 1.0};
  const auto table = build_table(kernel, fam, plan, grid, 1e-9);

  const auto blob = cache::serialize_table(table);
  const auto copy = cache::deserialize_table(blob);
  CHECK(copy.a == table.a);          // exact doubles
  CHECK(copy.b == table.b);
  CHECK(copy.t_grid == table.t_grid);
  CHECK(copy.quad_tol == table.quad_tol);
  CHECK(cache::serialize_table(copy) == blob);

  RunConfig cfg;
  cfg.quad_tol = 1e-9;
  cfg.output_dir = temp_dir("cache").string();
  bool from_cache = true;
  const auto built =
      cache::load_or_build(cfg, kernel, fam, plan, grid, &from_cache);
  CHECK_FALSE(from_cache);
  const auto hit = cache::load_or_build(cfg, kernel, fam, plan, grid, &from_cache);
  CHECK(from_cache);
  CHECK(hit.a == built.a);

  // a different tolerance is a different cache entry: rebuilt, not reused
  cfg.quad_tol = 1e-8;
  cache::load_or_build(cfg, kernel, fam, plan, grid, &from_cache);
  CHECK_FALSE(from_cache);

  // the environment variable redirects the cache directory
  const auto env_dir = temp_dir("cache_env");
  setenv("WAVESIM_CACHE_DIR", env_dir.c_str(), 1);
  CHECK(cache::cache_dir(cfg) == env_dir);
  cache::load_or_build(cfg, kernel, fam, plan, grid, &from_cache);
  CHECK_FALSE(from_cache);
  cache::load_or_build(cfg, kernel, fam, plan, grid, &from_cache);
  CHECK(from_cache);
  CHECK_FALSE(fs::is_empty(env_dir));
  unsetenv("WAVESIM_CACHE_DIR");
}

TEST_CASE("every report kind serializes losslessly") {
  const auto kernel = make_example1_kernel();
  const auto fam = make_meyer();
  const auto c = compute_constants(kernel, fam);

  const auto decay =
      check_coefficient_decay(kernel, fam, c, 4, 1, 4, {1.0}, 1e-9, 1e-8);
  CHECK(to_json(decay_from_json(to_json(decay))) == to_json(decay));

  TruncationPlan plan;
  plan.n0 = 4;
  plan.n = 2;
  plan.m = {4, 4};
  TruncationPlan cut = plan;
  cut.n0 = 12;
  cut.m = {12, 12};
  const auto ms =
      check_mean_square(kernel, fam, c, plan, 1.0, {0.0, 1.0}, cut);
  CHECK(to_json(mean_square_from_json(to_json(ms))) == to_json(ms));

  GeneratorSpec g;
  g.seed = 2;
  const auto sg = check_subgaussian_moments(g, 1000, {1.0, 2.0});
  CHECK(to_json(subgaussian_from_json(to_json(sg))) == to_json(sg));
}

TEST_CASE("reliability report serializes losslessly") {
  ReliabilityReport r;
  r.request.norm = AccuracyRequest::Norm::lp;
  r.request.delta = 0.2;
  r.request.p = 2.0;
  r.plan.n0 = 11;
  r.plan.n = 2;
  r.plan.m = {7, 7};
  r.reference_plan = r.plan.scaled(4);
  r.n_paths = 2000;
  r.exceedance_count = 1;
  r.empirical_probability = 5e-4;
  r.wilson_upper = 2.8e-3;
  r.pass = true;
  r.sigma_neglect_max = 3.2e-5;
  r.stat_slack_max = 2.6e-4;
  r.max_statistic = 0.01;
  r.window_complete = false;
  r.window_slots_computed = 123;
  r.window_slots_total = 4567;
  r.grid_points = 201;
  r.note = "n";
  const auto back = reliability_from_json(to_json(r));
  CHECK(to_json(back) == to_json(r));
}

#ifdef WAVESIM_CLI_PATH
TEST_CASE("cli pipeline: plan, coeffs, simulate, validate, export") {
  const auto dir = temp_dir("cli");
  const json cfg = base_config(dir);
  const fs::path cfg_path = dir / "config.json";
  atomic_write(cfg_path, cfg.dump(2));
  const std::string base = "--config " + cfg_path.string();

  CHECK(run_cli("constants " + base, dir / "log_constants.txt") == 0);
  CHECK(fs::exists(dir / "constants.json"));
  const std::string constants1 = read_file(dir / "constants.json");
  CHECK(run_cli("constants " + base, dir / "log_constants2.txt") == 0);
  CHECK(read_file(dir / "constants.json") == constants1);  // repeatable
  CHECK(json::parse(constants1).contains("provenance"));

  CHECK(run_cli("plan " + base, dir / "log_plan.txt") == 0);
  CHECK(fs::exists(dir / "plan.json"));

  CHECK(run_cli("coeffs " + base, dir / "log_coeffs.txt") == 0);
  CHECK(run_cli("simulate " + base, dir / "log_sim.txt") == 0);
  CHECK(fs::exists(dir / "paths.csv"));
  CHECK(fs::exists(dir / "manifest.json"));

  // determinism: a second run writes the identical CSV
  const std::string csv1 = read_file(dir / "paths.csv");
  CHECK(run_cli("simulate " + base, dir / "log_sim2.txt") == 0);
  CHECK(read_file(dir / "paths.csv") == csv1);

  // validation of the small override plan against a 2x reference passes
  CHECK(run_cli("validate " + base, dir / "log_val.txt") == 0);
  CHECK(fs::exists(dir / "report.json"));
  const auto rep = reliability_from_json(json::parse(read_file(dir / "report.json")));
  CHECK(rep.pass);

  CHECK(run_cli("export-plot " + base, dir / "log_plot.txt") == 0);
  CHECK(fs::exists(dir / "paths.dat"));
  CHECK(read_file(dir / "paths.dat").rfind("# t path0", 0) == 0);

  // CSV columns parse back to finite positive values
  std::istringstream csv(csv1);
  std::string line;
  std::getline(csv, line);
  CHECK(line == "t,path0,path1,path2,path3,path4");
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 5);
  }
  CHECK(rows == 9);
}

TEST_CASE("cli exit codes: config error and validation failure") {
  const auto dir = temp_dir("cli_err");
  json cfg = base_config(dir);
  cfg["accuracy"]["epsilon"] = 1.5;
  atomic_write(dir / "bad.json", cfg.dump());
  CHECK(run_cli("plan --config " + (dir / "bad.json").string(),
                dir / "log_bad.txt") == 2);

  CHECK(run_cli("plan --config " + (dir / "missing.json").string(),
                dir / "log_missing.txt") == 2);

  // an absurdly tight delta with a tiny fixed plan must fail validation
  json cfg2 = base_config(dir);
  cfg2["accuracy"]["delta"] = 1e-7;
  cfg2["plan_override"] = {{"n0", 2}, {"n", 1}, {"m", 2}};
  cfg2["generator"]["paths"] = 40;
  atomic_write(dir / "tight.json", cfg2.dump());
  CHECK(run_cli("validate --config " + (dir / "tight.json").string(),
                dir / "log_tight.txt") == 1);
}

TEST_CASE("cli lp norm path: plan and validate") {
  const auto dir = temp_dir("cli_lp");
  json cfg = base_config(dir);
  cfg["accuracy"] = {{"norm", "lp"}, {"delta", 0.2}, {"epsilon", 0.05},
                     {"T", 1.0},     {"p", 2.0}};
  atomic_write(dir / "lp.json", cfg.dump());
  const std::string base = "--config " + (dir / "lp.json").string();
  CHECK(run_cli("plan " + base, dir / "log_plan.txt") == 0);
  const auto plan = plan_from_json(json::parse(read_file(dir / "plan.json")));
  CHECK(plan.certificate.method == "lp");
  CHECK(plan.certificate.intermediates.count("x_m") == 1);
  CHECK(run_cli("validate " + base, dir / "log_val.txt") == 0);
  const auto rep =
      reliability_from_json(json::parse(read_file(dir / "report.json")));
  CHECK(rep.pass);
  CHECK(to_string(rep.request.norm) == "lp");
}
#endif
