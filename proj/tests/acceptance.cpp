// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line. Criteria 4-6 run the full multi-seed benchmark comparisons and are
// the long poles (several minutes each).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>

#include "inbo/bench.hpp"
#include "test_support.hpp"

using namespace inbo;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Criterion {
  int number;
  std::string label;
  bool passed = false;
  ~Criterion() {
    std::printf("[%s] criterion %d: %s\n", passed ? "PASS" : "FAIL", number,
                label.c_str());
    std::fflush(stdout);
  }
};

std::filesystem::path cache_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "inbo_acceptance_cache";
  std::filesystem::create_directories(dir);
  return dir;
}

// reports shared with the property suite (criterion 7)
std::optional<ExperimentReport> g_ushape_report;
std::optional<ExperimentReport> g_torus_report;
std::optional<ExperimentReport> g_sea_report;

void check_trace_invariants(const BOTrace& trace, const Problem& problem) {
  double best = -std::numeric_limits<double>::infinity();
  std::set<int> visited;
  for (const auto& step : trace.steps) {
    REQUIRE(step.best_value >= best);
    best = step.best_value;
    REQUIRE(visited.insert(step.grid_index).second);
    REQUIRE(step.y == problem.values(step.grid_index));
  }
}

}  // namespace

TEST_CASE("criterion 1: flat-space heat-kernel convergence") {
  Criterion crit{1, "flat-space heat-kernel matches the closed form within 15%"};
  const auto start = Clock::now();

  const auto plane = testing::unbounded_plane();
  BMConfig bm;
  bm.n_paths = 100000;
  bm.step_dt = 1e-3;
  bm.time_grid = {0.5};
  bm.seed = 7001;
  const Vec2 origin(0.0, 0.0);
  const auto ensemble = simulate_ensemble(plane, origin, bm, 0);

  const double h = 0.4;
  const Eigen::Matrix2Xd grid = testing::square_lattice(-4.0, -4.0, 21, 21, h);
  const Eigen::VectorXd volumes = cell_volumes(plane, grid);
  const Eigen::VectorXd density =
      estimate_density_row(ensemble, plane, grid, volumes, 0.5);

  int cells_checked = 0;
  double worst = 0.0;
  for (int i = 0; i < grid.cols(); ++i) {
    const double analytic = euclidean_heat_kernel(origin, Eigen::Vector2d(grid.col(i)), 0.5);
    if (analytic < 0.05) continue;
    ++cells_checked;
    const double rel = std::fabs(density(i) - analytic) / analytic;
    worst = std::max(worst, rel);
    CHECK(rel <= 0.15);
  }
  REQUIRE(cells_checked >= 20);
  const double elapsed = seconds_since(start);
  CHECK(elapsed <= 120.0);
  std::printf("  criterion 1: %d cells, worst relative error %.3f, %.1f s\n",
              cells_checked, worst, elapsed);
  crit.passed = worst <= 0.15 && elapsed <= 120.0;
  REQUIRE(crit.passed);
}

TEST_CASE("criterion 2: torus SDE generic form equals the closed form") {
  Criterion crit{2, "generic SDE coefficients match the closed form to 1e-10"};
  const auto torus = ManifoldSpec::bitten_torus(2.0, 1.0, 0.0, 0.0);
  Splitmix64 rng(7002);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const Vec2 x(rng.uniform() * kTwoPi, rng.uniform() * kTwoPi);
    const SdeCoefficients generic = sde_coefficients(torus, x);
    const SdeCoefficients closed = torus_sde_closed_form(torus.torus_spec(), x.x());
    worst = std::max(worst, (generic.drift - closed.drift).cwiseAbs().maxCoeff());
    worst = std::max(worst, (generic.diffusion - closed.diffusion).cwiseAbs().maxCoeff());
  }
  std::printf("  criterion 2: worst deviation %.3e\n", worst);
  CHECK(worst < 1e-10);
  crit.passed = worst < 1e-10;
  REQUIRE(crit.passed);
}

TEST_CASE("criterion 3: sparse-GP routes match dense oracles") {
  Criterion crit{3, "Woodbury-route likelihood/posterior match dense oracles to 1e-8"};
  using namespace inbo::testing;
  Splitmix64 rng(7003);
  double worst = 0.0;

  // random DTC instances against textbook conditioning on the same model
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 4 + static_cast<int>(rng.bounded(5));
    const int m = 2 + static_cast<int>(rng.bounded(3));
    KernelEstimate kernel;
    kernel.t_grid = {0.3};
    kernel.n = n;
    for (int i = 0; i < m; ++i) kernel.inducing_indices.push_back(i);
    const Eigen::MatrixXd full = random_psd(n, rng);
    kernel.k_zr.push_back(full.topRows(m));
    kernel.k_zz.push_back(symmetrize_psd(full.topLeftCorner(m, m)));
    const KernelEstimate kernel_copy = kernel;
    const IntrinsicSurrogate gp(std::move(kernel), FitGrids{});

    const int d = 2 + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(n - 2)));
    TrainingSet data;
    for (int i = 0; i < d; ++i) data.indices.push_back(i);
    data.y.resize(d);
    for (int i = 0; i < d; ++i) data.y(i) = 2.0 * rng.uniform() - 1.0;
    const IntrinsicHyperparameters h{0.3, 0.5 + rng.uniform(), 0.05 + 0.5 * rng.uniform()};

    const Eigen::MatrixXd q_full = dense_dtc_covariance(kernel_copy, 0, h.sigma_h2);
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) a(i, j) = q_full(data.indices[i], data.indices[j]);
    }
    a.diagonal().array() += h.sigma_noise2;
    worst = std::max(worst, std::fabs(gp.log_marginal_likelihood(data, h) -
                                      dense_log_density(a, data.y)));
    const Posterior post = gp.predict(data, h);
    const DensePosterior want = dense_gp_posterior(q_full, data.indices, h.sigma_noise2, data.y);
    worst = std::max(worst, (post.mean - want.mean).cwiseAbs().maxCoeff());
    worst = std::max(worst,
                     (post.variance - want.variance.cwiseMax(0.0)).cwiseAbs().maxCoeff());
  }

  // full inducing set against the exact GP (no jitter in the oracle)
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 5 + static_cast<int>(rng.bounded(6));
    KernelEstimate kernel;
    kernel.t_grid = {1.0};
    kernel.n = n;
    for (int i = 0; i < n; ++i) kernel.inducing_indices.push_back(i);
    Eigen::MatrixXd s(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) s(i, j) = s(j, i) = 2.0 * rng.uniform() - 1.0;
    }
    kernel.k_zz.push_back(symmetrize_psd(0.1 * (Eigen::MatrixXd::Identity(n, n) + 0.05 * s)));
    kernel.k_zr.push_back(kernel.k_zz.back());
    const Eigen::MatrixXd cov_base = kernel.k_zz.back();
    const IntrinsicSurrogate gp(std::move(kernel), FitGrids{});

    const int d = 2 + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(n - 2)));
    TrainingSet data;
    for (int i = 0; i < d; ++i) data.indices.push_back(n - 1 - i);
    data.y.resize(d);
    for (int i = 0; i < d; ++i) data.y(i) = rng.uniform() - 0.5;
    const IntrinsicHyperparameters h{1.0, 0.5 + rng.uniform(), 0.1 * (0.01 + rng.uniform())};

    const Posterior post = gp.predict(data, h);
    const DensePosterior want =
        dense_gp_posterior(h.sigma_h2 * cov_base, data.indices, h.sigma_noise2, data.y);
    worst = std::max(worst, (post.mean - want.mean).cwiseAbs().maxCoeff());
    worst = std::max(worst,
                     (post.variance - want.variance.cwiseMax(0.0)).cwiseAbs().maxCoeff());
  }

  std::printf("  criterion 3: worst deviation %.3e\n", worst);
  CHECK(worst < 1e-8);
  crit.passed = worst < 1e-8;
  REQUIRE(crit.passed);
}

TEST_CASE("criterion 4: U-shape benchmark comparison") {
  Criterion crit{4, "U-shape: In-BO 20/20 exact, Tra-BO below, lower-arm failure"};
  const auto start = Clock::now();

  const Problem problem = ushape_problem();
  ExperimentConfig cfg;
  cfg.n_seeds = 20;
  cfg.cache_dir = cache_dir();
  const ExperimentReport report = run_experiment(problem, {"in_bo", "tra_bo"}, cfg);
  g_ushape_report = report;

  const double in_rate = report.success_rate("in_bo");
  const double tra_rate = report.success_rate("tra_bo");

  auto in_lower_arm = [&](int idx) {
    return problem.grid(0, idx) >= 0.0 && problem.grid(1, idx) < 0.0;
  };
  bool lower_arm_failure = false;
  int lower_arm_seeds = 0;
  for (const auto& r : report.results) {
    if (r.method != "tra_bo" || r.failed) continue;
    bool all_lower = true;
    for (int idx : r.trace.initial_indices) {
      if (!in_lower_arm(idx)) all_lower = false;
    }
    if (all_lower) {
      ++lower_arm_seeds;
      if (!r.found_optimum) lower_arm_failure = true;
    }
  }

  const double elapsed = seconds_since(start);
  std::printf(
      "  criterion 4: in_bo %.0f/20, tra_bo %.0f/20, lower-arm-only seeds %d "
      "(failure observed %d), %.0f s\n",
      20 * in_rate, 20 * tra_rate, lower_arm_seeds, lower_arm_failure ? 1 : 0, elapsed);
  CHECK(in_rate == 1.0);
  CHECK(tra_rate < 1.0);
  CHECK(lower_arm_failure);
  CHECK(elapsed <= 600.0);
  crit.passed = in_rate == 1.0 && tra_rate < 1.0 && lower_arm_failure && elapsed <= 600.0;
  REQUIRE(crit.passed);
}

TEST_CASE("criterion 5: bitten-torus benchmark comparison") {
  Criterion crit{5, "bitten torus: In-BO 20/20 exact, Tra-BO below"};
  const auto start = Clock::now();

  const Problem problem = bitten_torus_problem();
  ExperimentConfig cfg;
  cfg.n_seeds = 20;
  cfg.cache_dir = cache_dir();
  const ExperimentReport report = run_experiment(problem, {"in_bo", "tra_bo"}, cfg);
  g_torus_report = report;

  const double in_rate = report.success_rate("in_bo");
  const double tra_rate = report.success_rate("tra_bo");
  const double elapsed = seconds_since(start);
  std::printf("  criterion 5: in_bo %.0f/20, tra_bo %.0f/20, %.0f s\n", 20 * in_rate,
              20 * tra_rate, elapsed);
  CHECK(in_rate == 1.0);
  CHECK(tra_rate < 1.0);
  CHECK(elapsed <= 900.0);
  crit.passed = in_rate == 1.0 && tra_rate < 1.0 && elapsed <= 900.0;
  REQUIRE(crit.passed);
}

TEST_CASE("criterion 6: synthetic-sea benchmark comparison") {
  Criterion crit{6, "synthetic sea: In-BO relaxed success exceeds Tra-BO"};
  const auto start = Clock::now();

  // the bundled CSV pair is the shipped stand-in; ingest and check it matches
  // the generator before running the comparison
  const std::filesystem::path data_dir(INBO_DATA_DIR);
  const Problem loaded =
      load_domain(data_dir / "sea_boundary.csv", data_dir / "sea_grid.csv");
  REQUIRE(loaded.grid.cols() == 485);
  REQUIRE(loaded.inducing_indices.size() == 42);

  const Problem problem = synthetic_sea_problem();
  REQUIRE((loaded.values - problem.values).cwiseAbs().maxCoeff() < 1e-12);

  ExperimentConfig cfg;
  cfg.n_seeds = 20;
  cfg.cache_dir = cache_dir();
  const ExperimentReport report = run_experiment(problem, {"in_bo", "tra_bo"}, cfg);
  g_sea_report = report;

  const double in_rate = report.relaxed_success_rate("in_bo");
  const double tra_rate = report.relaxed_success_rate("tra_bo");
  const double elapsed = seconds_since(start);
  std::printf("  criterion 6: in_bo relaxed %.2f, tra_bo relaxed %.2f, %.0f s\n",
              in_rate, tra_rate, elapsed);
  CHECK(in_rate > tra_rate);
  CHECK(elapsed <= 900.0);
  crit.passed = in_rate > tra_rate && elapsed <= 900.0;
  REQUIRE(crit.passed);
}

TEST_CASE("criterion 7: property suites") {
  Criterion crit{7, "boundary respect, mass conservation, trace invariants, determinism, PI values"};
  bool ok = true;

  // PI pointwise values
  CHECK(standard_normal_cdf(0.0) == 0.5);
  ok = ok && standard_normal_cdf(0.0) == 0.5;
  CHECK(std::fabs(standard_normal_cdf(1.0) - 0.841345) < 1e-6);
  ok = ok && std::fabs(standard_normal_cdf(1.0) - 0.841345) < 1e-6;

  // boundary respect at N = 500 and exact mass conservation on every bundled
  // problem (one ensemble per problem, every snapshot time)
  for (const Problem& problem :
       {ushape_problem(), bitten_torus_problem(), synthetic_sea_problem()}) {
    BMConfig bm = problem.bm_defaults;
    bm.n_paths = 500;
    const auto ensemble =
        simulate_ensemble(problem.spec, problem.grid.col(problem.inducing_indices[0]), bm, 0);
    int out_of_domain = 0;
    for (const auto& snap : ensemble.snapshots) {
      for (int n = 0; n < bm.n_paths; ++n) {
        if (!contains(problem.spec, snap.col(n))) ++out_of_domain;
      }
    }
    CHECK(out_of_domain == 0);
    ok = ok && out_of_domain == 0;

    for (double t : bm.time_grid) {
      const Eigen::VectorXi counts =
          count_paths_per_cell(ensemble, problem.spec, problem.grid, t);
      CHECK(counts.sum() == bm.n_paths);
      ok = ok && counts.sum() == bm.n_paths;
    }
  }

  // incumbent monotonicity and no-revisit on every benchmark trace
  const Problem ushape = ushape_problem();
  const Problem torus = bitten_torus_problem();
  const Problem sea = synthetic_sea_problem();
  int traces_checked = 0;
  for (const auto& [report, problem] :
       {std::pair<const std::optional<ExperimentReport>*, const Problem*>{&g_ushape_report, &ushape},
        {&g_torus_report, &torus},
        {&g_sea_report, &sea}}) {
    if (!report->has_value()) continue;
    for (const auto& r : (*report)->results) {
      if (r.failed) continue;
      check_trace_invariants(r.trace, *problem);
      ++traces_checked;
    }
  }
  CHECK(traces_checked >= 40);
  ok = ok && traces_checked >= 40;

  // seed determinism: byte-identical report for a repeated small experiment
  Problem small = bitten_torus_problem();
  small.bm_defaults.n_paths = 120;
  small.bm_defaults.time_grid = {small.bm_defaults.time_grid[0],
                                 small.bm_defaults.time_grid[10],
                                 small.bm_defaults.time_grid[20]};
  ExperimentConfig cfg;
  cfg.n_seeds = 2;
  cfg.n_iterations = 6;
  auto render = [](const ExperimentReport& r) {
    std::ostringstream os;
    write_report_csv(r, os);
    write_curves_csv(r, os);
    return os.str();
  };
  const std::string once = render(run_experiment(small, {"in_bo", "tra_bo"}, cfg));
  const std::string twice = render(run_experiment(small, {"in_bo", "tra_bo"}, cfg));
  CHECK(once == twice);
  ok = ok && once == twice;

  crit.passed = ok;
  REQUIRE(crit.passed);
}
