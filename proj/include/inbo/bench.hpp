#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "inbo/bo.hpp"

namespace inbo {

// A fully specified benchmark instance: domain, grid, objective values at the
// grid, and the inducing subset used by the intrinsic surrogate.
struct Problem {
  std::string name;
  ManifoldSpec spec;
  Eigen::Matrix2Xd grid;
  Eigen::VectorXd values;
  std::vector<int> inducing_indices;
  double cell_area = 0.0;
  int true_optimum_index = -1;
  BMConfig bm_defaults;
  int default_n_init = 4;
  // PI margin for this problem's benchmark runs; unset falls back to the
  // range-relative default.
  std::optional<double> default_epsilon;
};

// 30 log-spaced diffusion times spanning [1e-2, 4] x diameter^2, snapped to
// multiples of step_dt.
std::vector<double> default_time_grid(double diameter, double step_dt, int count = 30);

// Greedy max-min (k-center) subset, seeded at the most central grid point.
std::vector<int> spread_indices(const ManifoldSpec& spec, const Eigen::Matrix2Xd& grid,
                                int count);

// Ramsay horseshoe domain (inner radius 0.5, outer 1.5, arms of length 3):
// 285 lattice points, 20 inducing points, objective monotone in arc length
// from the lower-arm tip to the upper-arm tip, rescaled to [-6.19, 6.19].
Problem ushape_problem();

// Torus R=2, r=1 with a 0.6 rad sector removed: 600 lattice points, 19
// inducing points, objective monotone in the angle from one cut face to the
// other, rescaled to [0.57, 5.50]. The argmax and argmin hug opposite cut
// faces: ambient-close, intrinsically far.
Problem bitten_torus_problem();

// Two basins joined by a narrow channel, an island hole, and values that are
// smooth along water paths but jump across the land barrier: 485 grid points,
// 42 inducing points. Stand-in for remotely sensed lake data.
Problem synthetic_sea_problem();

// Ingest a planar domain from CSV: boundary (ring_id,x,y; ring 0 is the outer
// boundary) and grid (x,y,value,is_inducing).
Problem load_domain(const std::filesystem::path& boundary_csv,
                    const std::filesystem::path& grid_csv);

void write_domain_csv(const Problem& problem, const std::filesystem::path& boundary_csv,
                      const std::filesystem::path& grid_csv);

// Resolve a named bundled problem ("ushape", "torus", "sea") or a
// "boundary.csv,grid.csv" pair.
Problem resolve_problem(const std::string& name_or_files);

// Empty on success; otherwise one message per violated invariant.
std::vector<std::string> validate_problem(const Problem& problem);

struct ExperimentConfig {
  int n_seeds = 20;
  std::uint64_t base_seed = 1;
  int n_iterations = 30;
  std::optional<int> n_init;  // default: the problem's
  std::optional<double> epsilon;
  double epsilon_rel = 0.01;
  // BM overrides; step_dt overrides re-derive the snapshot grid
  std::optional<int> n_paths;
  std::optional<double> step_dt;
  std::optional<std::uint64_t> bm_seed;
  std::optional<std::filesystem::path> cache_dir;
  FitGrids fit_grids;
  std::vector<double> rbf_length_scale_grid;  // empty = derived from coordinates
};

struct SeedResult {
  std::string method;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string failure;
  double best_value = 0.0;
  bool found_optimum = false;
  bool relaxed_success = false;  // best_value >= min + 0.99 (max - min)
  std::optional<int> n_evals_to_optimum;
  BOTrace trace;
};

struct ExperimentReport {
  std::string problem_name;
  std::vector<std::string> methods;
  std::vector<SeedResult> results;  // seed-major, then method order

  double success_rate(const std::string& method) const;
  double relaxed_success_rate(const std::string& method) const;
};

BMConfig effective_bm_config(const Problem& problem, const ExperimentConfig& cfg);

// One ensemble per inducing point, loaded from the cache when a file with the
// matching content key exists, simulated (and cached) otherwise.
std::vector<PathEnsemble> build_ensembles(const Problem& problem, const BMConfig& bm,
                                          const std::optional<std::filesystem::path>& cache_dir);

KernelEstimate build_problem_kernel(const Problem& problem, const BMConfig& bm,
                                    const std::optional<std::filesystem::path>& cache_dir);

// Coordinates the RBF baseline smooths over: the chart for planar domains,
// the ambient embedding for the torus.
Eigen::MatrixXd baseline_coordinates(const Problem& problem);

BOTrace run_method(const Problem& problem, const SurrogateModel& surrogate,
                   const ExperimentConfig& cfg, std::uint64_t seed);

// Runs every (seed, method) pair with paired initial designs (the seed alone
// determines them). A failed seed is recorded in the report, not fatal.
ExperimentReport run_experiment(const Problem& problem,
                                const std::vector<std::string>& methods,
                                const ExperimentConfig& cfg);

void write_trace_csv(const BOTrace& trace, std::ostream& os);
void write_report_csv(const ExperimentReport& report, std::ostream& os);
void write_curves_csv(const ExperimentReport& report, std::ostream& os);

}  // namespace inbo
