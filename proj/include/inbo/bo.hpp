#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "inbo/sparse_gp.hpp"

namespace inbo {

struct BOConfig {
  int n_iterations = 30;
  int n_init = 3;
  std::uint64_t seed = 1;
  // Absolute PI exploration margin. When unset, epsilon is recomputed each
  // iteration as epsilon_rel * (max observed y - min observed y).
  std::optional<double> epsilon;
  double epsilon_rel = 0.01;
};

struct BOStep {
  int iteration = 0;  // 0 for initial-design rows
  int grid_index = 0;
  double y = 0.0;
  int best_index = 0;
  double best_value = 0.0;
};

struct BOTrace {
  std::vector<int> initial_indices;
  std::vector<BOStep> steps;  // initial design first (iteration 0), then one per iteration

  int best_index() const { return steps.back().best_index; }
  double best_value() const { return steps.back().best_value; }
};

double standard_normal_cdf(double x);

// Probability-of-improvement scores Phi((mean - f_best - epsilon) / sd).
// Where sd is exactly zero the score is 1 if mean - f_best - epsilon > 0,
// else 0.
Eigen::VectorXd pi_scores(const Posterior& post, double f_best, double epsilon);

// Argmax of scores over unvisited indices; ties break to the lowest index.
int select_next(const Eigen::VectorXd& scores, const std::vector<bool>& visited);

// Distinct uniform draws from [0, n), reproducible from the seed.
std::vector<int> draw_initial_indices(std::uint64_t seed, int n, int count);

// The full loop: draw the initial design, then for each iteration refit the
// surrogate on the current training set, score PI against the incumbent,
// pick the best unvisited grid point, observe, and augment. Deterministic
// given the seed.
BOTrace run_bo(const Eigen::VectorXd& objective, const SurrogateModel& surrogate,
               const BOConfig& cfg);

}  // namespace inbo
