#include "inbo/sparse_gp.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace inbo {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void validate_training_set(const TrainingSet& data, int n, int min_size) {
  if (data.size() < min_size) {
    throw InputError("training set needs at least " + std::to_string(min_size) +
                     " observations, got " + std::to_string(data.size()));
  }
  if (data.y.size() != data.size()) {
    throw InputError("training set indices and observations differ in length");
  }
  std::set<int> seen;
  for (int idx : data.indices) {
    if (idx < 0 || idx >= n) throw InputError("training index out of range: " + std::to_string(idx));
    if (!seen.insert(idx).second) throw InputError("duplicate training index: " + std::to_string(idx));
  }
  if (!data.y.allFinite()) throw InputError("training observations must be finite");
}

// Gaussian log density of y under N(0, A), with A factored in place.
double gaussian_log_density(const Eigen::MatrixXd& a, const Eigen::VectorXd& y) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw ConditioningError("training covariance is not positive definite");
  }
  const Eigen::MatrixXd& l = llt.matrixLLT();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += 2.0 * std::log(l(i, i));
  const double quad = y.dot(llt.solve(y));
  return -0.5 * (quad + log_det + static_cast<double>(y.size()) * kLog2Pi);
}

double variance_scale(const Eigen::VectorXd& centered) {
  const double v = centered.squaredNorm() / static_cast<double>(centered.size());
  return v > 1e-12 ? v : 1.0;
}

}  // namespace

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (count < 1 || !(lo > 0.0) || !(hi >= lo)) {
    throw ConfigError("log_spaced: invalid grid parameters");
  }
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double step = (std::log(hi) - std::log(lo)) / (count - 1);
  for (int i = 0; i < count; ++i) out[i] = std::exp(std::log(lo) + step * i);
  return out;
}

// --- intrinsic surrogate ---

IntrinsicSurrogate::IntrinsicSurrogate(KernelEstimate kernel, FitGrids grids)
    : kernel_(std::move(kernel)), grids_(grids) {
  if (kernel_.t_grid.empty() || kernel_.k_zz.size() != kernel_.t_grid.size() ||
      kernel_.k_zr.size() != kernel_.t_grid.size()) {
    throw InputError("kernel estimate is inconsistent");
  }
  const int m = kernel_.m();
  factors_.reserve(kernel_.t_grid.size());
  for (std::size_t k = 0; k < kernel_.t_grid.size(); ++k) {
    const Eigen::MatrixXd& kzz = kernel_.k_zz[k];
    if (kzz.rows() != m || kzz.cols() != m || kernel_.k_zr[k].rows() != m ||
        kernel_.k_zr[k].cols() != kernel_.n) {
      throw InputError("kernel estimate blocks have inconsistent shapes");
    }
    const double scale = kzz.trace() / m;
    TimeFactor factor;
    bool ok = false;
    for (double jitter_rel : {1e-8, 1e-6, 1e-4}) {
      const double jitter = jitter_rel * (scale > 0.0 ? scale : 1.0);
      Eigen::MatrixXd b = kzz;
      b.diagonal().array() += jitter;
      Eigen::LLT<Eigen::MatrixXd> llt(b);
      if (llt.info() == Eigen::Success) {
        factor.chol_lower = llt.matrixL();
        factor.whitened = factor.chol_lower.triangularView<Eigen::Lower>().solve(
            kernel_.k_zr[k]);
        factor.jitter = jitter;
        ok = true;
        break;
      }
    }
    if (!ok) {
      std::ostringstream os;
      os << "inducing covariance at t=" << kernel_.t_grid[k]
         << " failed Cholesky after jitter escalation";
      throw ConditioningError(os.str());
    }
    factors_.push_back(std::move(factor));
  }
}

Eigen::MatrixXd IntrinsicSurrogate::whitened_cols(int t_idx,
                                                  const std::vector<int>& idx) const {
  const Eigen::MatrixXd& w = factors_[t_idx].whitened;
  Eigen::MatrixXd out(w.rows(), idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    if (idx[j] < 0 || idx[j] >= kernel_.n) {
      throw InputError("grid index out of range: " + std::to_string(idx[j]));
    }
    out.col(j) = w.col(idx[j]);
  }
  return out;
}

Eigen::MatrixXd IntrinsicSurrogate::q_cross(double t, const std::vector<int>& rows,
                                            const std::vector<int>& cols,
                                            double sigma_h2) const {
  const int ti = kernel_.t_index(t);
  const Eigen::MatrixXd wr = whitened_cols(ti, rows);
  const Eigen::MatrixXd wc = whitened_cols(ti, cols);
  return sigma_h2 * (wr.transpose() * wc);
}

double IntrinsicSurrogate::log_marginal_likelihood(
    const TrainingSet& data, const IntrinsicHyperparameters& h) const {
  validate_training_set(data, kernel_.n, 1);
  const int ti = kernel_.t_index(h.t);
  const Eigen::MatrixXd wd = whitened_cols(ti, data.indices);
  Eigen::MatrixXd a = h.sigma_h2 * (wd.transpose() * wd);
  a.diagonal().array() += h.sigma_noise2;
  return gaussian_log_density(a, data.y);
}

IntrinsicHyperparameters IntrinsicSurrogate::fit(const TrainingSet& data) const {
  validate_training_set(data, kernel_.n, 2);
  const Eigen::VectorXd centered = data.y.array() - data.y.mean();
  const double scale = variance_scale(centered);
  const std::vector<double> sigma_h2_grid =
      log_spaced(grids_.sigma_h2_lo * scale, grids_.sigma_h2_hi * scale, grids_.sigma_h2_count);
  const std::vector<double> noise_grid =
      log_spaced(grids_.sigma_noise2_lo * scale, grids_.sigma_noise2_hi * scale,
                 grids_.sigma_noise2_count);

  IntrinsicHyperparameters best;
  double best_lml = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t ti = 0; ti < kernel_.t_grid.size(); ++ti) {
    const Eigen::MatrixXd wd = whitened_cols(static_cast<int>(ti), data.indices);
    const Eigen::MatrixXd gram = wd.transpose() * wd;
    for (double noise : noise_grid) {
      for (double mag : sigma_h2_grid) {
        Eigen::MatrixXd a = mag * gram;
        a.diagonal().array() += noise;
        double lml;
        try {
          lml = gaussian_log_density(a, centered);
        } catch (const ConditioningError&) {
          continue;
        }
        if (lml > best_lml) {
          best_lml = lml;
          best = IntrinsicHyperparameters{kernel_.t_grid[ti], mag, noise};
          any = true;
        }
      }
    }
  }
  if (!any) throw FitError("all hyperparameter candidates failed conditioning");
  return best;
}

Posterior IntrinsicSurrogate::predict(const TrainingSet& data,
                                      const IntrinsicHyperparameters& h) const {
  validate_training_set(data, kernel_.n, 1);
  const int ti = kernel_.t_index(h.t);
  const Eigen::MatrixXd& w = factors_[ti].whitened;  // m x n
  const Eigen::MatrixXd wd = whitened_cols(ti, data.indices);

  Eigen::MatrixXd a = h.sigma_h2 * (wd.transpose() * wd);
  a.diagonal().array() += h.sigma_noise2;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw ConditioningError("training covariance is not positive definite");
  }

  const double y_mean = data.y.mean();
  const Eigen::VectorXd centered = data.y.array() - y_mean;
  const Eigen::VectorXd alpha = llt.solve(centered);

  // Q_rD = sigma_h2 W^T W_D (n x |D|)
  const Eigen::MatrixXd q_rd = h.sigma_h2 * (w.transpose() * wd);
  Posterior post;
  post.mean = (q_rd * alpha).array() + y_mean;

  const Eigen::VectorXd q_rr = h.sigma_h2 * w.colwise().squaredNorm().transpose();
  const Eigen::MatrixXd solved = llt.solve(q_rd.transpose());  // |D| x n
  post.variance.resize(kernel_.n);
  for (int i = 0; i < kernel_.n; ++i) {
    double v = q_rr(i) - q_rd.row(i).dot(solved.col(i));
    if (v < 0.0) {
      if (v < -1e-10) {
        throw ConditioningError("posterior variance fell below tolerance: " +
                                std::to_string(v));
      }
      v = 0.0;
      ++post.n_clamped;
    }
    post.variance(i) = v;
  }
  return post;
}

// --- RBF surrogate ---

RbfSurrogate::RbfSurrogate(Eigen::MatrixXd coords, std::vector<double> length_scale_grid,
                           FitGrids grids)
    : coords_(std::move(coords)), length_scale_grid_(std::move(length_scale_grid)),
      grids_(grids) {
  const Eigen::Index n = coords_.cols();
  if (n == 0) throw InputError("RbfSurrogate: no coordinates");
  sq_dist_.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sq_dist_.col(i) = (coords_.colwise() - coords_.col(i)).colwise().squaredNorm();
  }
  if (length_scale_grid_.empty()) {
    const double diam = std::sqrt(sq_dist_.maxCoeff());
    const double d = diam > 0.0 ? diam : 1.0;
    length_scale_grid_ = log_spaced(0.05 * d, 2.0 * d, 30);
  }
  for (double l : length_scale_grid_) {
    if (!(l > 0.0)) throw ConfigError("length-scale grid entries must be positive");
  }
}

Eigen::MatrixXd RbfSurrogate::kernel_block(const std::vector<int>& rows,
                                           const std::vector<int>& cols,
                                           const RbfHyperparameters& h) const {
  Eigen::MatrixXd out(rows.size(), cols.size());
  const double inv = -0.5 / (h.length_scale * h.length_scale);
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out(i, j) = h.sigma_r2 * std::exp(inv * sq_dist_(rows[i], cols[j]));
    }
  }
  return out;
}

double RbfSurrogate::log_marginal_likelihood(const TrainingSet& data,
                                             const RbfHyperparameters& h) const {
  validate_training_set(data, grid_size(), 1);
  Eigen::MatrixXd a = kernel_block(data.indices, data.indices, h);
  a.diagonal().array() += h.sigma_noise2;
  return gaussian_log_density(a, data.y);
}

RbfHyperparameters RbfSurrogate::fit(const TrainingSet& data) const {
  validate_training_set(data, grid_size(), 2);
  const Eigen::VectorXd centered = data.y.array() - data.y.mean();
  const double scale = variance_scale(centered);
  const std::vector<double> mag_grid =
      log_spaced(grids_.sigma_h2_lo * scale, grids_.sigma_h2_hi * scale, grids_.sigma_h2_count);
  const std::vector<double> noise_grid =
      log_spaced(grids_.sigma_noise2_lo * scale, grids_.sigma_noise2_hi * scale,
                 grids_.sigma_noise2_count);

  RbfHyperparameters best;
  double best_lml = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (double l : length_scale_grid_) {
    Eigen::MatrixXd unit(data.size(), data.size());
    const double inv = -0.5 / (l * l);
    for (int j = 0; j < data.size(); ++j) {
      for (int i = 0; i < data.size(); ++i) {
        unit(i, j) = std::exp(inv * sq_dist_(data.indices[i], data.indices[j]));
      }
    }
    for (double noise : noise_grid) {
      for (double mag : mag_grid) {
        Eigen::MatrixXd a = mag * unit;
        a.diagonal().array() += noise;
        double lml;
        try {
          lml = gaussian_log_density(a, centered);
        } catch (const ConditioningError&) {
          continue;
        }
        if (lml > best_lml) {
          best_lml = lml;
          best = RbfHyperparameters{l, mag, noise};
          any = true;
        }
      }
    }
  }
  if (!any) throw FitError("all hyperparameter candidates failed conditioning");
  return best;
}

Posterior RbfSurrogate::predict(const TrainingSet& data,
                                const RbfHyperparameters& h) const {
  validate_training_set(data, grid_size(), 1);
  Eigen::MatrixXd a = kernel_block(data.indices, data.indices, h);
  a.diagonal().array() += h.sigma_noise2;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw ConditioningError("training covariance is not positive definite");
  }
  const double y_mean = data.y.mean();
  const Eigen::VectorXd centered = data.y.array() - y_mean;
  const Eigen::VectorXd alpha = llt.solve(centered);

  std::vector<int> all(grid_size());
  for (int i = 0; i < grid_size(); ++i) all[i] = i;
  const Eigen::MatrixXd k_rd = kernel_block(all, data.indices, h);

  Posterior post;
  post.mean = (k_rd * alpha).array() + y_mean;
  const Eigen::MatrixXd solved = llt.solve(k_rd.transpose());
  post.variance.resize(grid_size());
  for (int i = 0; i < grid_size(); ++i) {
    double v = h.sigma_r2 - k_rd.row(i).dot(solved.col(i));
    if (v < 0.0) {
      if (v < -1e-10) {
        throw ConditioningError("posterior variance fell below tolerance: " +
                                std::to_string(v));
      }
      v = 0.0;
      ++post.n_clamped;
    }
    post.variance(i) = v;
  }
  return post;
}

}  // namespace inbo
