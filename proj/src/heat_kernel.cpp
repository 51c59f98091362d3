#include "inbo/heat_kernel.hpp"

#include <cmath>
#include <ostream>
#include <sstream>
#include <thread>

namespace inbo {

namespace {

void nearest_plane(const Eigen::Matrix2Xd& grid, const Eigen::Matrix2Xd& positions,
                   Eigen::VectorXi& out, Eigen::Index begin, Eigen::Index end) {
  for (Eigen::Index p = begin; p < end; ++p) {
    Eigen::Index best;
    (grid.colwise() - positions.col(p)).colwise().squaredNorm().minCoeff(&best);
    out(p) = static_cast<int>(best);
  }
}

void nearest_torus(const BittenTorus& torus, const Eigen::Matrix2Xd& grid,
                   const Eigen::ArrayXd& grid_arc, const Eigen::Matrix2Xd& positions,
                   Eigen::VectorXi& out, Eigen::Index begin, Eigen::Index end) {
  const Eigen::ArrayXd grid_theta = grid.row(0).transpose().array();
  const bool bite = torus.has_bite();
  for (Eigen::Index p = begin; p < end; ++p) {
    const double theta = positions(0, p);
    const double phi = positions(1, p);
    Eigen::ArrayXd dtheta = (grid_theta - theta).abs();
    dtheta = dtheta.min(kTwoPi - dtheta);
    Eigen::ArrayXd dphi;
    if (bite) {
      const double u = wrap_angle(phi - torus.bite_hi);
      dphi = (grid_arc - u).abs();
    } else {
      dphi = (grid_arc - phi).abs();
      dphi = dphi.min(kTwoPi - dphi);
    }
    Eigen::Index best;
    (dtheta.square() + dphi.square()).minCoeff(&best);
    out(p) = static_cast<int>(best);
  }
}

}  // namespace

Eigen::VectorXi nearest_cells(const ManifoldSpec& spec, const Eigen::Matrix2Xd& grid,
                              const Eigen::Matrix2Xd& positions) {
  if (grid.cols() == 0) throw InputError("nearest_cells: empty grid");
  Eigen::VectorXi out(positions.cols());
  if (spec.is_plane()) {
    nearest_plane(grid, positions, out, 0, positions.cols());
  } else {
    const auto& torus = spec.torus_spec();
    Eigen::ArrayXd grid_arc(grid.cols());
    for (Eigen::Index i = 0; i < grid.cols(); ++i) {
      grid_arc(i) = torus.has_bite() ? wrap_angle(grid(1, i) - torus.bite_hi)
                                     : wrap_angle(grid(1, i));
    }
    nearest_torus(torus, grid, grid_arc, positions, out, 0, positions.cols());
  }
  return out;
}

Eigen::VectorXi count_paths_per_cell(const PathEnsemble& ensemble,
                                     const ManifoldSpec& spec,
                                     const Eigen::Matrix2Xd& grid, double t) {
  if (ensemble.snapshots.empty() || ensemble.config.n_paths <= 0) {
    throw InputError("count_paths_per_cell: empty ensemble");
  }
  const Eigen::Matrix2Xd& positions = snapshot(ensemble, t);
  const Eigen::VectorXi cells = nearest_cells(spec, grid, positions);
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(grid.cols());
  for (Eigen::Index p = 0; p < cells.size(); ++p) counts(cells(p)) += 1;
  return counts;
}

Eigen::VectorXd estimate_density_row(const PathEnsemble& ensemble,
                                     const ManifoldSpec& spec,
                                     const Eigen::Matrix2Xd& grid,
                                     const Eigen::VectorXd& volumes, double t) {
  if (volumes.size() != grid.cols()) {
    throw InputError("estimate_density_row: volumes do not match grid");
  }
  const Eigen::VectorXi counts = count_paths_per_cell(ensemble, spec, grid, t);
  const double n_paths = static_cast<double>(ensemble.config.n_paths);
  return (counts.cast<double>() / n_paths).cwiseQuotient(volumes);
}

KernelEstimate build_kernel(const ManifoldSpec& spec,
                            const std::vector<PathEnsemble>& ensembles,
                            const Eigen::Matrix2Xd& grid,
                            const Eigen::VectorXd& volumes,
                            const std::vector<int>& inducing_indices) {
  if (ensembles.empty()) throw InputError("build_kernel: no ensembles");
  if (ensembles.size() != inducing_indices.size()) {
    throw InputError("build_kernel: one ensemble per inducing point required");
  }
  const auto& t_grid = ensembles[0].config.time_grid;
  for (const auto& e : ensembles) {
    if (e.config.time_grid.size() != t_grid.size()) {
      throw InputError("build_kernel: mismatched time grids across ensembles");
    }
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
      if (std::fabs(e.config.time_grid[k] - t_grid[k]) >
          1e-9 * std::max(1.0, std::fabs(t_grid[k]))) {
        throw InputError("build_kernel: mismatched time grids across ensembles");
      }
    }
  }

  const int m = static_cast<int>(ensembles.size());
  const int n = static_cast<int>(grid.cols());
  const int n_times = static_cast<int>(t_grid.size());

  KernelEstimate kernel;
  kernel.t_grid = t_grid;
  kernel.inducing_indices = inducing_indices;
  kernel.n = n;
  kernel.k_zr.assign(n_times, Eigen::MatrixXd(m, n));

  unsigned hw = std::thread::hardware_concurrency();
  const int n_threads = std::max(1, std::min<int>({static_cast<int>(hw == 0 ? 1 : hw), 8, m}));
  std::vector<std::thread> workers;
  std::vector<std::string> errors(n_threads);
  for (int w = 0; w < n_threads; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (int i = w; i < m; i += n_threads) {
          for (int k = 0; k < n_times; ++k) {
            kernel.k_zr[k].row(i) =
                estimate_density_row(ensembles[i], spec, grid, volumes, t_grid[k])
                    .transpose();
          }
        }
      } catch (const std::exception& e) {
        errors[w] = e.what();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (const auto& e : errors) {
    if (!e.empty()) throw InputError("build_kernel: " + e);
  }

  kernel.k_zz.reserve(n_times);
  for (int k = 0; k < n_times; ++k) {
    Eigen::MatrixXd raw(m, m);
    for (int j = 0; j < m; ++j) raw.col(j) = kernel.k_zr[k].col(inducing_indices[j]);
    kernel.k_zz.push_back(symmetrize_psd(raw));
  }
  return kernel;
}

void write_kernel_csv(const KernelEstimate& kernel, std::ostream& os) {
  os << "# inducing_indices";
  for (int idx : kernel.inducing_indices) os << "," << idx;
  os << "\n";
  char buf[40];
  auto put_row = [&](const auto& row) {
    for (Eigen::Index j = 0; j < row.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", row(j));
      os << (j ? "," : "") << buf;
    }
    os << "\n";
  };
  for (std::size_t k = 0; k < kernel.t_grid.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", kernel.t_grid[k]);
    os << "# t=" << buf << " block=k_zz\n";
    for (Eigen::Index i = 0; i < kernel.k_zz[k].rows(); ++i) put_row(kernel.k_zz[k].row(i));
    os << "# t=" << buf << " block=k_zr\n";
    for (Eigen::Index i = 0; i < kernel.k_zr[k].rows(); ++i) put_row(kernel.k_zr[k].row(i));
  }
}

}  // namespace inbo
