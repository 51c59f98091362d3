#pragma once

#include <Eigen/Dense>
#include <vector>

#include "inbo/heat_kernel.hpp"

namespace inbo {

struct TrainingSet {
  std::vector<int> indices;  // grid-point indices, unique
  Eigen::VectorXd y;

  int size() const { return static_cast<int>(indices.size()); }
};

struct IntrinsicHyperparameters {
  double t = 0.0;            // diffusion time, member of the kernel's t grid
  double sigma_h2 = 1.0;     // kernel magnitude
  double sigma_noise2 = 0.0; // observation noise
};

struct RbfHyperparameters {
  double length_scale = 1.0;
  double sigma_r2 = 1.0;
  double sigma_noise2 = 0.0;
};

struct Posterior {
  Eigen::VectorXd mean;      // over all grid points
  Eigen::VectorXd variance;  // diagonal only, clamped at zero
  int n_clamped = 0;
};

// Log-spaced hyperparameter search grids, as multiples of var(y).
struct FitGrids {
  int sigma_h2_count = 15;
  double sigma_h2_lo = 1e-2;
  double sigma_h2_hi = 1e4;
  int sigma_noise2_count = 10;
  double sigma_noise2_lo = 1e-6;
  double sigma_noise2_hi = 1.0;
};

std::vector<double> log_spaced(double lo, double hi, int count);

// Common surface the optimization loop drives: refit hyperparameters on the
// training set and return the posterior over all grid points.
class SurrogateModel {
 public:
  virtual ~SurrogateModel() = default;
  virtual Posterior fit_predict(const TrainingSet& data) const = 0;
  virtual int grid_size() const = 0;
};

// Sparse GP over the grid with the estimated heat kernel, using the
// deterministic inducing conditional: all covariances are
//   Q_AB = S_Az S_zz^-1 S_zB,  S_Az = sigma_h^2 k_zr[:,A]^T, ...
// so only m x m and |D| x |D| systems are ever factored; the full n x n
// kernel is never formed. Observations are centered internally (the prior
// has zero mean) and the constant is added back to the posterior mean.
class IntrinsicSurrogate : public SurrogateModel {
 public:
  explicit IntrinsicSurrogate(KernelEstimate kernel, FitGrids grids = {});

  const KernelEstimate& kernel() const { return kernel_; }
  int grid_size() const override { return kernel_.n; }

  Eigen::MatrixXd q_cross(double t, const std::vector<int>& rows,
                          const std::vector<int>& cols, double sigma_h2 = 1.0) const;

  double log_marginal_likelihood(const TrainingSet& data,
                                 const IntrinsicHyperparameters& h) const;

  // Exhaustive search over the t grid crossed with log-spaced magnitude and
  // noise grids; ties break toward smaller t, then smaller noise.
  IntrinsicHyperparameters fit(const TrainingSet& data) const;

  Posterior predict(const TrainingSet& data, const IntrinsicHyperparameters& h) const;

  Posterior fit_predict(const TrainingSet& data) const override {
    return predict(data, fit(data));
  }

 private:
  struct TimeFactor {
    Eigen::MatrixXd chol_lower;  // L with L L^T = k_zz + jitter I
    Eigen::MatrixXd whitened;    // W = L^-1 k_zr, m x n
    double jitter = 0.0;
  };

  Eigen::MatrixXd whitened_cols(int t_idx, const std::vector<int>& idx) const;

  KernelEstimate kernel_;
  FitGrids grids_;
  std::vector<TimeFactor> factors_;
};

// Exact GP with the RBF kernel on the coordinates as given (chart coordinates
// for planar domains, ambient coordinates for embedded surfaces); boundaries
// are ignored. Same grid-search fitting strategy and centering as the
// intrinsic surrogate.
class RbfSurrogate : public SurrogateModel {
 public:
  RbfSurrogate(Eigen::MatrixXd coords, std::vector<double> length_scale_grid = {},
               FitGrids grids = {});

  int grid_size() const override { return static_cast<int>(coords_.cols()); }
  const std::vector<double>& length_scale_grid() const { return length_scale_grid_; }

  double log_marginal_likelihood(const TrainingSet& data,
                                 const RbfHyperparameters& h) const;
  RbfHyperparameters fit(const TrainingSet& data) const;
  Posterior predict(const TrainingSet& data, const RbfHyperparameters& h) const;

  Posterior fit_predict(const TrainingSet& data) const override {
    return predict(data, fit(data));
  }

 private:
  Eigen::MatrixXd kernel_block(const std::vector<int>& rows,
                               const std::vector<int>& cols,
                               const RbfHyperparameters& h) const;

  Eigen::MatrixXd coords_;   // p x n
  Eigen::MatrixXd sq_dist_;  // n x n pairwise squared distances
  std::vector<double> length_scale_grid_;
  FitGrids grids_;
};

}  // namespace inbo
