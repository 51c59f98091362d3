#include "inbo/bo.hpp"

#include <cmath>
#include <sstream>

#include "inbo/rng.hpp"

namespace inbo {

double standard_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / 1.4142135623730950488016887242097);
}

Eigen::VectorXd pi_scores(const Posterior& post, double f_best, double epsilon) {
  const Eigen::Index n = post.mean.size();
  Eigen::VectorXd scores(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double gap = post.mean(i) - f_best - epsilon;
    const double sd = std::sqrt(post.variance(i));
    scores(i) = sd > 0.0 ? standard_normal_cdf(gap / sd) : (gap > 0.0 ? 1.0 : 0.0);
  }
  return scores;
}

int select_next(const Eigen::VectorXd& scores, const std::vector<bool>& visited) {
  int best = -1;
  double best_score = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (visited[static_cast<std::size_t>(i)]) continue;
    if (best < 0 || scores(i) > best_score) {
      best = static_cast<int>(i);
      best_score = scores(i);
    }
  }
  if (best < 0) throw ExhaustionError("select_next: every grid point already visited");
  return best;
}

std::vector<int> draw_initial_indices(std::uint64_t seed, int n, int count) {
  if (count > n) throw ConfigError("initial design larger than the grid");
  Splitmix64 rng(stream_key(seed, 0x696e6974ull, 0));  // "init" tag
  std::vector<int> out;
  std::vector<bool> taken(n, false);
  out.reserve(count);
  while (static_cast<int>(out.size()) < count) {
    const int idx = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(n)));
    if (taken[idx]) continue;
    taken[idx] = true;
    out.push_back(idx);
  }
  return out;
}

BOTrace run_bo(const Eigen::VectorXd& objective, const SurrogateModel& surrogate,
               const BOConfig& cfg) {
  const int n = static_cast<int>(objective.size());
  if (n == 0) throw InputError("run_bo: empty objective");
  if (surrogate.grid_size() != n) {
    throw InputError("run_bo: surrogate grid size does not match objective");
  }
  if (cfg.n_init < 1) throw ConfigError("n_init must be at least 1");
  if (cfg.n_iterations < 0) throw ConfigError("n_iterations must be nonnegative");
  if (cfg.n_init + cfg.n_iterations > n) {
    throw ConfigError("n_init + n_iterations exceeds the grid size");
  }
  if (cfg.epsilon && *cfg.epsilon < 0.0) throw ConfigError("epsilon must be nonnegative");

  BOTrace trace;
  trace.initial_indices = draw_initial_indices(cfg.seed, n, cfg.n_init);

  TrainingSet data;
  std::vector<bool> visited(n, false);
  int best_index = -1;
  double best_value = 0.0;
  double y_lo = 0.0, y_hi = 0.0;

  auto observe = [&](int idx, int iteration) {
    const double y = objective(idx);
    data.indices.push_back(idx);
    data.y.conservativeResize(data.y.size() + 1);
    data.y(data.y.size() - 1) = y;
    visited[idx] = true;
    if (best_index < 0 || y > best_value) {
      best_index = idx;
      best_value = y;
    }
    y_lo = data.y.minCoeff();
    y_hi = data.y.maxCoeff();
    trace.steps.push_back(BOStep{iteration, idx, y, best_index, best_value});
  };

  for (int idx : trace.initial_indices) observe(idx, 0);

  for (int iter = 1; iter <= cfg.n_iterations; ++iter) {
    Posterior post;
    try {
      post = surrogate.fit_predict(data);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "iteration " << iter << ": " << e.what();
      throw Error(e.category(), os.str());
    }
    const double epsilon = cfg.epsilon ? *cfg.epsilon : cfg.epsilon_rel * (y_hi - y_lo);
    const Eigen::VectorXd scores = pi_scores(post, best_value, epsilon);
    observe(select_next(scores, visited), iter);
  }
  return trace;
}

}  // namespace inbo
