// Command-line front end: simulate | run | experiment | validate.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "inbo/bench.hpp"
#include "inbo/csv.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int exit_code_for(inbo::ErrorCategory c) {
  using EC = inbo::ErrorCategory;
  switch (c) {
    case EC::Config: return 2;
    case EC::Parse: return 3;
    case EC::Ingestion: return 4;
    case EC::Input: return 5;
    case EC::Domain: return 6;
    case EC::Grid: return 7;
    case EC::Lookup: return 8;
    case EC::Reflection: return 9;
    case EC::Conditioning: return 10;
    case EC::Fit: return 11;
    case EC::Exhaustion: return 12;
    case EC::Singularity: return 13;
    case EC::Io: return 14;
  }
  return 1;
}

// Optional JSON config; every key has the built-in default. Schema:
//   bm:  n_paths, step_dt, seed
//   bo:  n_iterations, n_init, epsilon, epsilon_rel
//   fit: sigma_h2_count, sigma_h2_span [lo, hi], sigma_noise2_count,
//        sigma_noise2_span [lo, hi], rbf_length_scale_grid [..]
//   experiment: n_seeds, base_seed
void apply_config_file(const fs::path& file, inbo::ExperimentConfig& cfg) {
  std::ifstream is(file);
  if (!is) throw inbo::IoError("cannot open config file " + file.string());
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    throw inbo::ParseError("config file " + file.string() + ": " + e.what());
  }
  try {
    if (j.contains("bm")) {
      const auto& bm = j.at("bm");
      if (bm.contains("n_paths")) cfg.n_paths = bm.at("n_paths").get<int>();
      if (bm.contains("step_dt")) cfg.step_dt = bm.at("step_dt").get<double>();
      if (bm.contains("seed")) cfg.bm_seed = bm.at("seed").get<std::uint64_t>();
    }
    if (j.contains("bo")) {
      const auto& bo = j.at("bo");
      if (bo.contains("n_iterations")) cfg.n_iterations = bo.at("n_iterations").get<int>();
      if (bo.contains("n_init")) cfg.n_init = bo.at("n_init").get<int>();
      if (bo.contains("epsilon") && !bo.at("epsilon").is_null()) {
        cfg.epsilon = bo.at("epsilon").get<double>();
      }
      if (bo.contains("epsilon_rel")) cfg.epsilon_rel = bo.at("epsilon_rel").get<double>();
    }
    if (j.contains("fit")) {
      const auto& fit = j.at("fit");
      auto& g = cfg.fit_grids;
      if (fit.contains("sigma_h2_count")) g.sigma_h2_count = fit.at("sigma_h2_count").get<int>();
      if (fit.contains("sigma_h2_span")) {
        g.sigma_h2_lo = fit.at("sigma_h2_span").at(0).get<double>();
        g.sigma_h2_hi = fit.at("sigma_h2_span").at(1).get<double>();
      }
      if (fit.contains("sigma_noise2_count")) {
        g.sigma_noise2_count = fit.at("sigma_noise2_count").get<int>();
      }
      if (fit.contains("sigma_noise2_span")) {
        g.sigma_noise2_lo = fit.at("sigma_noise2_span").at(0).get<double>();
        g.sigma_noise2_hi = fit.at("sigma_noise2_span").at(1).get<double>();
      }
      if (fit.contains("rbf_length_scale_grid")) {
        cfg.rbf_length_scale_grid =
            fit.at("rbf_length_scale_grid").get<std::vector<double>>();
      }
    }
    if (j.contains("experiment")) {
      const auto& ex = j.at("experiment");
      if (ex.contains("n_seeds")) cfg.n_seeds = ex.at("n_seeds").get<int>();
      if (ex.contains("base_seed")) cfg.base_seed = ex.at("base_seed").get<std::uint64_t>();
    }
  } catch (const json::exception& e) {
    throw inbo::ParseError("config file " + file.string() + ": " + e.what());
  }
}

void write_file(const fs::path& file, const std::string& content) {
  std::ofstream os(file, std::ios::trunc);
  if (!os) throw inbo::IoError("cannot open " + file.string());
  os << content;
  if (!os) throw inbo::IoError("failed writing " + file.string());
}

std::string render_trace(const inbo::BOTrace& trace) {
  std::ostringstream os;
  inbo::write_trace_csv(trace, os);
  return os.str();
}

int cmd_simulate(const std::string& problem_arg, const inbo::ExperimentConfig& cfg,
                 const fs::path& cache_dir, const std::string& kernel_csv) {
  const inbo::Problem problem = inbo::resolve_problem(problem_arg);
  const inbo::BMConfig bm = inbo::effective_bm_config(problem, cfg);
  const auto ensembles = inbo::build_ensembles(problem, bm, cache_dir);
  std::uint64_t steps = 0, resamples = 0;
  for (const auto& e : ensembles) {
    steps += e.n_steps_total;
    resamples += e.n_reflect_resamples;
  }
  std::cout << "problem=" << problem.name << " ensembles=" << ensembles.size()
            << " paths_each=" << bm.n_paths << " snapshot_times=" << bm.time_grid.size()
            << " steps=" << steps << " reflect_resamples=" << resamples
            << " cache=" << cache_dir.string() << "\n";
  if (!kernel_csv.empty()) {
    const Eigen::VectorXd volumes =
        inbo::cell_volumes(problem.spec, problem.grid, problem.cell_area);
    const auto kernel = inbo::build_kernel(problem.spec, ensembles, problem.grid,
                                           volumes, problem.inducing_indices);
    std::ostringstream os;
    inbo::write_kernel_csv(kernel, os);
    write_file(kernel_csv, os.str());
    std::cout << "kernel_csv=" << kernel_csv << "\n";
  }
  return 0;
}

int cmd_run(const std::string& problem_arg, const std::string& method,
            std::uint64_t seed, const inbo::ExperimentConfig& cfg,
            const fs::path& out_dir) {
  const inbo::Problem problem = inbo::resolve_problem(problem_arg);
  std::unique_ptr<inbo::SurrogateModel> model;
  if (method == "in_bo") {
    const inbo::BMConfig bm = inbo::effective_bm_config(problem, cfg);
    model = std::make_unique<inbo::IntrinsicSurrogate>(
        inbo::build_problem_kernel(problem, bm, cfg.cache_dir), cfg.fit_grids);
  } else if (method == "tra_bo") {
    model = std::make_unique<inbo::RbfSurrogate>(inbo::baseline_coordinates(problem),
                                                 cfg.rbf_length_scale_grid, cfg.fit_grids);
  } else {
    throw inbo::ConfigError("method must be in_bo or tra_bo");
  }
  const inbo::BOTrace trace = inbo::run_method(problem, *model, cfg, seed);
  fs::create_directories(out_dir);
  const fs::path file = out_dir / (problem.name + "_" + method + "_seed" +
                                   std::to_string(seed) + "_trace.csv");
  write_file(file, render_trace(trace));
  std::cout << "trace=" << file.string() << " best_index=" << trace.best_index()
            << " best_value=" << inbo::format_double(trace.best_value())
            << " optimum_found="
            << (trace.best_index() == problem.true_optimum_index ? 1 : 0) << "\n";

  // final fitted hyperparameters and posterior diagnostics
  inbo::TrainingSet data;
  for (const auto& step : trace.steps) data.indices.push_back(step.grid_index);
  data.y.resize(data.indices.size());
  for (std::size_t i = 0; i < data.indices.size(); ++i) {
    data.y(static_cast<Eigen::Index>(i)) = problem.values(data.indices[i]);
  }
  if (const auto* in_gp = dynamic_cast<const inbo::IntrinsicSurrogate*>(model.get())) {
    const auto h = in_gp->fit(data);
    const auto post = in_gp->predict(data, h);
    std::cout << "fit: t=" << inbo::format_double(h.t)
              << " sigma_h2=" << inbo::format_double(h.sigma_h2)
              << " sigma_noise2=" << inbo::format_double(h.sigma_noise2)
              << " variance_clamps=" << post.n_clamped << "\n";
  } else if (const auto* rbf = dynamic_cast<const inbo::RbfSurrogate*>(model.get())) {
    const auto h = rbf->fit(data);
    const auto post = rbf->predict(data, h);
    std::cout << "fit: length_scale=" << inbo::format_double(h.length_scale)
              << " sigma_r2=" << inbo::format_double(h.sigma_r2)
              << " sigma_noise2=" << inbo::format_double(h.sigma_noise2)
              << " variance_clamps=" << post.n_clamped << "\n";
  }
  return 0;
}

int cmd_experiment(const std::string& problem_arg, const std::string& methods_arg,
                   const inbo::ExperimentConfig& cfg, const fs::path& out_dir) {
  const inbo::Problem problem = inbo::resolve_problem(problem_arg);
  std::vector<std::string> methods;
  std::stringstream ss(methods_arg);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) methods.push_back(item);
  }
  const inbo::ExperimentReport report = inbo::run_experiment(problem, methods, cfg);

  fs::create_directories(out_dir / "traces");
  std::ostringstream report_os, curves_os;
  inbo::write_report_csv(report, report_os);
  inbo::write_curves_csv(report, curves_os);
  write_file(out_dir / "report.csv", report_os.str());
  write_file(out_dir / "curves.csv", curves_os.str());
  for (const auto& r : report.results) {
    if (r.failed) continue;
    write_file(out_dir / "traces" /
                   (r.method + "_seed" + std::to_string(r.seed) + ".csv"),
               render_trace(r.trace));
  }
  for (const auto& m : methods) {
    std::cout << "method=" << m
              << " success_rate=" << inbo::format_double(report.success_rate(m))
              << " relaxed_success_rate="
              << inbo::format_double(report.relaxed_success_rate(m)) << "\n";
  }
  for (const auto& r : report.results) {
    if (r.failed) {
      std::cout << "failed method=" << r.method << " seed=" << r.seed << " ("
                << r.failure << ")\n";
    }
  }
  std::cout << "report=" << (out_dir / "report.csv").string() << "\n";
  return 0;
}

int cmd_validate(const std::string& problem_arg) {
  const inbo::Problem problem = inbo::resolve_problem(problem_arg);
  const auto failures = inbo::validate_problem(problem);
  std::cout << "problem=" << problem.name << " grid=" << problem.grid.cols()
            << " inducing=" << problem.inducing_indices.size()
            << " optimum_index=" << problem.true_optimum_index << "\n";
  if (failures.empty()) {
    std::cout << "ok: all invariants hold\n";
    return 0;
  }
  for (const auto& f : failures) std::cout << "invariant violated: " << f << "\n";
  return exit_code_for(inbo::ErrorCategory::Input);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian optimization on constrained domains and surfaces"};
  app.require_subcommand(1);

  std::string problem_arg, config_file, methods_arg = "in_bo,tra_bo";
  std::string method = "in_bo", cache_arg, out_arg = "out", kernel_csv;
  std::uint64_t seed = 1;
  int n_seeds = -1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--problem", problem_arg,
                    "ushape | torus | sea | boundary.csv,grid.csv")->required();
    cmd->add_option("--config", config_file, "JSON config file");
  };

  auto* sim = app.add_subcommand("simulate", "simulate and cache path ensembles");
  add_common(sim);
  sim->add_option("--cache", cache_arg, "ensemble cache directory")->required();
  sim->add_option("--kernel-csv", kernel_csv, "also export kernel matrices to CSV");

  auto* run = app.add_subcommand("run", "single optimization run");
  add_common(run);
  run->add_option("--method", method, "in_bo | tra_bo");
  run->add_option("--seed", seed, "initial-design seed");
  run->add_option("--out", out_arg, "output directory");
  run->add_option("--cache", cache_arg, "ensemble cache directory");

  auto* exp = app.add_subcommand("experiment", "multi-seed comparison");
  add_common(exp);
  exp->add_option("--methods", methods_arg, "comma-separated: in_bo,tra_bo");
  exp->add_option("--seeds", n_seeds, "number of seeds");
  exp->add_option("--out", out_arg, "output directory");
  exp->add_option("--cache", cache_arg, "ensemble cache directory");

  auto* val = app.add_subcommand("validate", "check problem invariants");
  add_common(val);

  CLI11_PARSE(app, argc, argv);

  try {
    inbo::ExperimentConfig cfg;
    if (!config_file.empty()) apply_config_file(config_file, cfg);
    if (!cache_arg.empty()) cfg.cache_dir = fs::path(cache_arg);
    if (n_seeds > 0) cfg.n_seeds = n_seeds;

    if (sim->parsed()) return cmd_simulate(problem_arg, cfg, cache_arg, kernel_csv);
    if (run->parsed()) return cmd_run(problem_arg, method, seed, cfg, out_arg);
    if (exp->parsed()) return cmd_experiment(problem_arg, methods_arg, cfg, out_arg);
    if (val->parsed()) return cmd_validate(problem_arg);
  } catch (const inbo::Error& e) {
    std::cerr << "error: category=" << inbo::to_string(e.category())
              << " message=" << e.what() << "\n";
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: category=internal message=" << e.what() << "\n";
    return 1;
  }
  return 0;
}
