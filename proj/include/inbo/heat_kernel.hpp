#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "inbo/bm_sim.hpp"
#include "inbo/geometry.hpp"

namespace inbo {

// Monte-Carlo heat-kernel estimates between m inducing points and all n grid
// points, per diffusion time. k_zz[t] is symmetrized and projected to the PSD
// cone; k_zr[t] is kept raw (only k_zz is ever inverted).
struct KernelEstimate {
  std::vector<double> t_grid;
  std::vector<Eigen::MatrixXd> k_zz;  // m x m per t
  std::vector<Eigen::MatrixXd> k_zr;  // m x n per t
  std::vector<int> inducing_indices;
  int n = 0;

  int m() const { return static_cast<int>(inducing_indices.size()); }
  int t_index(double t) const { return time_index(t_grid, t); }
};

// Nearest grid cell (chart distance) for each column of positions.
Eigen::VectorXi nearest_cells(const ManifoldSpec& spec, const Eigen::Matrix2Xd& grid,
                              const Eigen::Matrix2Xd& positions);

// Paths-per-cell histogram of the ensemble's positions at time t.
Eigen::VectorXi count_paths_per_cell(const PathEnsemble& ensemble,
                                     const ManifoldSpec& spec,
                                     const Eigen::Matrix2Xd& grid, double t);

// Transition-density row: (count_i / N) / V(A_i). Row sums against the cell
// volumes equal one because every path lands in exactly one cell.
Eigen::VectorXd estimate_density_row(const PathEnsemble& ensemble,
                                     const ManifoldSpec& spec,
                                     const Eigen::Matrix2Xd& grid,
                                     const Eigen::VectorXd& volumes, double t);

// Assemble per-time kernels from one ensemble per inducing point. All
// ensembles must share the same time grid.
KernelEstimate build_kernel(const ManifoldSpec& spec,
                            const std::vector<PathEnsemble>& ensembles,
                            const Eigen::Matrix2Xd& grid,
                            const Eigen::VectorXd& volumes,
                            const std::vector<int>& inducing_indices);

void write_kernel_csv(const KernelEstimate& kernel, std::ostream& os);

// Symmetrize then clip negative eigenvalues to zero. Monte-Carlo estimates of
// a symmetric PSD kernel are neither exactly symmetric nor PSD; downstream
// solves need both.
template <typename Derived>
Eigen::MatrixXd symmetrize_psd(const Eigen::MatrixBase<Derived>& a) {
  Eigen::MatrixXd s = 0.5 * (a.derived() + a.derived().transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  Eigen::MatrixXd out = es.eigenvectors() *
                        es.eigenvalues().cwiseMax(0.0).asDiagonal() *
                        es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

// Heat kernel of flat R^d: (2 pi t)^{-d/2} exp(-|s0 - s|^2 / (2 t)).
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar euclidean_heat_kernel(const Eigen::MatrixBase<DerivedA>& s0,
                                                const Eigen::MatrixBase<DerivedB>& s,
                                                typename DerivedA::Scalar t) {
  using Scalar = typename DerivedA::Scalar;
  if (!(t > Scalar(0))) throw DomainError("euclidean_heat_kernel: t must be positive");
  const Scalar two_pi_t = Scalar(kTwoPi) * t;
  const Scalar d = Scalar(s0.size());
  return std::pow(two_pi_t, -d / Scalar(2)) *
         std::exp(-(s0 - s).squaredNorm() / (Scalar(2) * t));
}

// RBF kernel sigma_r^2 exp(-|x0 - x|^2 / (2 l^2)).
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar rbf_kernel(const Eigen::MatrixBase<DerivedA>& x0,
                                     const Eigen::MatrixBase<DerivedB>& x,
                                     typename DerivedA::Scalar length_scale,
                                     typename DerivedA::Scalar sigma_r2) {
  using Scalar = typename DerivedA::Scalar;
  if (!(length_scale > Scalar(0))) throw DomainError("rbf_kernel: length scale must be positive");
  if (!(sigma_r2 > Scalar(0))) throw DomainError("rbf_kernel: magnitude must be positive");
  return sigma_r2 * std::exp(-(x0 - x).squaredNorm() /
                             (Scalar(2) * length_scale * length_scale));
}

}  // namespace inbo
