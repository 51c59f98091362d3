#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "inbo/geometry.hpp"

namespace inbo {

struct BMConfig {
  int n_paths = 1000;
  double step_dt = 1e-3;               // chart units^2
  std::vector<double> time_grid;       // increasing multiples of step_dt
  std::uint64_t seed = 0;
  int max_reflect_attempts = 10000;
};

// N Brownian paths from one start point, snapshotted at the config's time
// grid. snapshots[k].col(n) is path n at time_grid[k]. Written once by
// simulate_ensemble, then immutable.
struct PathEnsemble {
  Vec2 start;
  int start_index = 0;  // feeds the per-path RNG stream key
  BMConfig config;
  std::vector<Eigen::Matrix2Xd> snapshots;

  // step diagnostics
  std::uint64_t n_steps_total = 0;
  std::uint64_t n_large_steps = 0;  // chart displacement > 10 sqrt(dt lambda_max(g^-1))
  std::uint64_t n_reflect_resamples = 0;
};

// Euler-Maruyama with the resampling realization of reflecting boundaries: a
// proposal that exits the domain is redrawn with time paused, up to
// max_reflect_attempts. Path n uses the RNG stream (seed, start_index, n),
// so results are reproducible and independent of thread scheduling.
PathEnsemble simulate_ensemble(const ManifoldSpec& spec, const Vec2& start,
                               const BMConfig& cfg, int start_index = 0);

const Eigen::Matrix2Xd& snapshot(const PathEnsemble& ensemble, double t);

// Index of t in the ensemble's time grid (relative tolerance 1e-9), or a
// lookup error.
int time_index(const std::vector<double>& time_grid, double t);

// --- ensemble cache ---
// Files are keyed by a content hash of (spec, start, start_index, config);
// loading a file whose stored key does not match the request is an error.
// The on-disk layout is internal.

std::uint64_t ensemble_cache_key(const ManifoldSpec& spec, const Vec2& start,
                                 const BMConfig& cfg, int start_index);

std::filesystem::path ensemble_cache_path(const std::filesystem::path& dir,
                                          std::uint64_t key);

void save_ensemble(const PathEnsemble& ensemble, const ManifoldSpec& spec,
                   const std::filesystem::path& file);

PathEnsemble load_ensemble(const ManifoldSpec& spec, const Vec2& start,
                           const BMConfig& cfg, int start_index,
                           const std::filesystem::path& file);

}  // namespace inbo
