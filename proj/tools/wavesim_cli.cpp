// Command-line front end: certified truncation planning, coefficient table
// construction, path simulation, and empirical validation, driven by a single
// JSON configuration file.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include "CLI11.hpp"

#include "wavesim/io.hpp"
#include "wavesim/planner.hpp"

namespace fs = std::filesystem;
using namespace wavesim;

namespace {

enum ExitCode : int {
  kOk = 0,
  kValidationFail = 1,
  kConfigError = 2,
  kNumericError = 3,
};

struct Context {
  RunConfig cfg;
  Kernel kernel;
  WaveletFamily family;
};

Context make_context(const std::string& config_path) {
  Context ctx;
  ctx.cfg = load_config(config_path);
  ctx.kernel = make_kernel(ctx.cfg);
  ctx.family = make_wavelet(ctx.cfg);
  return ctx;
}

std::vector<double> time_grid(const RunConfig& cfg) {
  std::vector<double> g(static_cast<std::size_t>(cfg.grid_points));
  for (int i = 0; i < cfg.grid_points; ++i)
    g[static_cast<std::size_t>(i)] = cfg.accuracy.T * i / (cfg.grid_points - 1);
  return g;
}

json with_provenance(json payload, const RunConfig& cfg) {
  payload["provenance"] = {{"tool", "wavesim"},
                           {"version", kVersion},
                           {"config_hash", config_hash(cfg)},
                           {"seed", cfg.seed}};
  return payload;
}

void print_constants(const PlannerConstants& c) {
  auto line = [&](const char* name, double v) {
    const auto it = c.quad_errors.find(name);
    std::printf("  %-8s %-24.16g (quad err <= %.3g)\n", name, v,
                it == c.quad_errors.end() ? 0.0 : it->second);
  };
  std::printf("envelope constants:\n");
  line("e1", c.e1);
  line("e2", c.e2);
  line("f1", c.f1);
  line("f2", c.f2);
  line("a1", c.a1);
  line("b0", c.b0);
  line("b1", c.b1);
  line("s1", c.s1);
  line("s2", c.s2);
  line("q1", c.q1);
  line("q2", c.q2);
  line("d", c.d);
  std::printf("  %-8s %-24.16g (grid max, +5%%)\n", "c_bound", c.c_bound);
}

PlannerConstants constants_for(const Context& ctx) {
  return compute_constants(ctx.kernel, ctx.family, ctx.cfg.constants_rel_tol);
}

TruncationPlan compute_plan(const Context& ctx) {
  // Constants are inflated by their quadrature margin before entering the
  // bounds, so plans stay certified under quadrature error.
  const PlannerConstants c = constants_for(ctx).inflated();
  AccuracyRequest req = ctx.cfg.accuracy;
  if (req.norm == AccuracyRequest::Norm::lp && !req.sup_exp_moment)
    req.sup_exp_moment = sup_exp_moment_gaussian(ctx.kernel, req.p, req.T);
  return req.norm == AccuracyRequest::Norm::uniform_relative
             ? plan_uniform(c, req)
             : plan_lp(c, req);
}

TruncationPlan resolve_plan(const Context& ctx, const std::string& plan_file) {
  if (!plan_file.empty())
    return plan_from_json(json::parse(read_file(plan_file)));
  if (ctx.cfg.plan_override) return *ctx.cfg.plan_override;
  return compute_plan(ctx);
}

void print_plan(const TruncationPlan& plan) {
  std::printf("plan: n0=%ld n=%d m=%ld (total variables %lld)\n", plan.n0,
              plan.n, plan.m.empty() ? 0L : plan.m.front(), plan.total_terms());
  std::printf("certificate: method=%s%s\n", plan.certificate.method.c_str(),
              plan.certificate.degenerate ? " [degenerate: zero constants]" : "");
  for (const auto& [k, v] : plan.certificate.intermediates)
    std::printf("  %-16s %.16g\n", k.c_str(), v);
}

int cmd_constants(const std::string& config_path) {
  Context ctx = make_context(config_path);
  const PlannerConstants c = constants_for(ctx);
  std::printf("kernel=%s wavelet=%s\n", ctx.kernel.name.c_str(),
              ctx.family.name.c_str());
  print_constants(c);
  const fs::path out = fs::path(ctx.cfg.output_dir) / "constants.json";
  atomic_write(out, with_provenance(to_json(c), ctx.cfg).dump(2) + "\n");
  std::printf("wrote %s\n", out.c_str());
  return kOk;
}

int cmd_plan(const std::string& config_path) {
  Context ctx = make_context(config_path);
  const TruncationPlan plan = compute_plan(ctx);
  print_plan(plan);
  const fs::path out = fs::path(ctx.cfg.output_dir) / "plan.json";
  atomic_write(out, with_provenance(to_json(plan), ctx.cfg).dump(2) + "\n");
  std::printf("wrote %s\n", out.c_str());
  return kOk;
}

int cmd_coeffs(const std::string& config_path, const std::string& plan_file) {
  Context ctx = make_context(config_path);
  const TruncationPlan plan = resolve_plan(ctx, plan_file);
  const auto grid = time_grid(ctx.cfg);
  bool from_cache = false;
  const CoefficientTable table = cache::load_or_build(
      ctx.cfg, ctx.kernel, ctx.family, plan, grid, &from_cache);
  double emax = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    emax = std::max(emax, table.energy(i));
  std::printf("table: %lld coefficients x %zu times (%s), max energy %.8g\n",
              plan.total_terms(), grid.size(),
              from_cache ? "cache hit" : "built", emax);
  std::printf("cache dir: %s\n", cache::cache_dir(ctx.cfg).c_str());
  return kOk;
}

int cmd_simulate(const std::string& config_path, const std::string& plan_file) {
  Context ctx = make_context(config_path);
  const TruncationPlan plan = resolve_plan(ctx, plan_file);
  const auto grid = time_grid(ctx.cfg);
  const CoefficientTable table =
      cache::load_or_build(ctx.cfg, ctx.kernel, ctx.family, plan, grid);
  GeneratorSpec spec{ctx.cfg.distribution, ctx.cfg.seed};
  const auto paths = simulate_batch(table, spec, ctx.cfg.n_paths);

  const fs::path dir = ctx.cfg.output_dir;
  atomic_write(dir / "paths.csv", paths_to_csv(grid, paths));
  atomic_write(dir / "manifest.json",
               simulation_manifest(ctx.cfg, plan, paths.size()).dump(2) + "\n");
  std::printf("simulated %zu paths on %zu grid points\n", paths.size(),
              grid.size());
  std::printf("wrote %s and %s\n", (dir / "paths.csv").c_str(),
              (dir / "manifest.json").c_str());
  return kOk;
}

int cmd_validate(const std::string& config_path, const std::string& plan_file) {
  Context ctx = make_context(config_path);
  const TruncationPlan plan = resolve_plan(ctx, plan_file);
  GeneratorSpec spec{ctx.cfg.distribution, ctx.cfg.seed};
  ReliabilityOptions opt;
  opt.grid_points = ctx.cfg.validation_grid_points;
  opt.effective.coef_floor = ctx.cfg.coef_floor;
  const std::size_t n_paths =
      ctx.cfg.validation_paths.value_or(ctx.cfg.n_paths);

  const ReliabilityReport rep =
      ctx.cfg.accuracy.norm == AccuracyRequest::Norm::uniform_relative
          ? check_reliability_uniform(ctx.kernel, ctx.family, ctx.cfg.accuracy,
                                      plan, ctx.cfg.ref_multiplier, n_paths,
                                      spec, opt)
          : check_reliability_lp(ctx.kernel, ctx.family, ctx.cfg.accuracy, plan,
                                 ctx.cfg.ref_multiplier, n_paths, spec, opt);

  std::printf("reliability (%s): exceedances %zu / %zu, empirical %.5f, "
              "Wilson-95%% upper %.5f -> %s\n",
              to_string(rep.request.norm).c_str(), rep.exceedance_count,
              rep.n_paths, rep.empirical_probability, rep.wilson_upper,
              rep.pass ? "pass" : "FAIL");
  std::printf("max path statistic %.6g; residual bound sigma <= %.3g "
              "(window %s, %zu slots computed of %lld)\n",
              rep.max_statistic, rep.sigma_neglect_max,
              rep.window_complete ? "complete" : "bounded",
              rep.window_slots_computed, rep.window_slots_total);
  const fs::path out = fs::path(ctx.cfg.output_dir) / "report.json";
  atomic_write(out, with_provenance(to_json(rep), ctx.cfg).dump(2) + "\n");
  std::printf("wrote %s\n", out.c_str());
  return rep.pass ? kOk : kValidationFail;
}

int cmd_export_plot(const std::string& config_path, const std::string& csv_file) {
  Context ctx = make_context(config_path);
  const fs::path dir = ctx.cfg.output_dir;
  fs::path src = csv_file.empty() ? dir / "paths.csv" : fs::path(csv_file);
  if (!fs::exists(src)) {
    const int rc = cmd_simulate(config_path, "");
    if (rc != kOk) return rc;
    src = dir / "paths.csv";
  }
  const fs::path out = dir / "paths.dat";
  atomic_write(out, csv_to_plot(read_file(src)));
  std::printf("wrote %s\n", out.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulation of exponentials of second-order processes via "
               "truncated wavelet-type expansions with certified accuracy"};
  app.require_subcommand(1);

  std::string config_path;
  std::string plan_file;
  std::string csv_file;

  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON configuration file")
        ->required();
  };
  auto* c_constants =
      app.add_subcommand("constants", "envelope constants for kernel+wavelet");
  add_config(c_constants);
  auto* c_plan = app.add_subcommand("plan", "certified truncation plan");
  add_config(c_plan);
  auto* c_coeffs =
      app.add_subcommand("coeffs", "build and cache the coefficient table");
  add_config(c_coeffs);
  c_coeffs->add_option("--plan", plan_file, "plan JSON from the plan command");
  auto* c_sim = app.add_subcommand("simulate", "draw paths and export CSV");
  add_config(c_sim);
  c_sim->add_option("--plan", plan_file, "plan JSON from the plan command");
  auto* c_val =
      app.add_subcommand("validate", "empirical reliability check of a plan");
  add_config(c_val);
  c_val->add_option("--plan", plan_file, "plan JSON from the plan command");
  auto* c_plot =
      app.add_subcommand("export-plot", "emit whitespace table for plotting");
  add_config(c_plot);
  c_plot->add_option("--paths", csv_file, "existing paths.csv to convert");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? kConfigError : kOk;
  }

  try {
    if (c_constants->parsed()) return cmd_constants(config_path);
    if (c_plan->parsed()) return cmd_plan(config_path);
    if (c_coeffs->parsed()) return cmd_coeffs(config_path, plan_file);
    if (c_sim->parsed()) return cmd_simulate(config_path, plan_file);
    if (c_val->parsed()) return cmd_validate(config_path, plan_file);
    if (c_plot->parsed()) return cmd_export_plot(config_path, csv_file);
  } catch (const config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const quad::quadrature_error& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kNumericError;
  } catch (const realness_error& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kNumericError;
  } catch (const std::overflow_error& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kNumericError;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumericError;
  }
  return kConfigError;
}
