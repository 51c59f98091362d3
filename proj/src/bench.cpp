#include "inbo/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <queue>
#include <set>
#include <sstream>

#include "inbo/csv.hpp"

namespace inbo {

std::vector<double> default_time_grid(double diameter, double step_dt, int count) {
  if (!(diameter > 0.0)) throw ConfigError("domain diameter must be positive");
  const double lo = 1e-2 * diameter * diameter;
  const double hi = 4.0 * diameter * diameter;
  std::vector<double> grid;
  grid.reserve(count);
  std::int64_t prev_steps = 0;
  for (double t : log_spaced(lo, hi, count)) {
    const std::int64_t k = std::max<std::int64_t>(1, std::llround(t / step_dt));
    if (k <= prev_steps) continue;  // snapping collapsed two entries
    prev_steps = k;
    grid.push_back(static_cast<double>(k) * step_dt);
  }
  return grid;
}

std::vector<int> spread_indices(const ManifoldSpec& spec, const Eigen::Matrix2Xd& grid,
                                int count) {
  const int n = static_cast<int>(grid.cols());
  if (count < 1 || count > n) throw InputError("spread_indices: invalid count");
  Eigen::MatrixXd dist(n, n);
  for (int i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      dist(i, j) = dist(j, i) = chart_distance(spec, grid.col(i), grid.col(j));
    }
  }
  int seed = 0;
  double best_sum = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double s = dist.row(i).sum();
    if (s < best_sum) {
      best_sum = s;
      seed = i;
    }
  }
  std::vector<int> chosen{seed};
  Eigen::VectorXd nearest = dist.col(seed);
  while (static_cast<int>(chosen.size()) < count) {
    int next = 0;
    double far = -1.0;
    for (int i = 0; i < n; ++i) {
      if (nearest(i) > far) {
        far = nearest(i);
        next = i;
      }
    }
    chosen.push_back(next);
    nearest = nearest.cwiseMin(dist.col(next));
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

namespace {

Eigen::VectorXd rescale_affine(const Eigen::VectorXd& raw, double lo, double hi) {
  const double rmin = raw.minCoeff();
  const double rmax = raw.maxCoeff();
  if (rmax - rmin <= 0.0) throw InputError("cannot rescale a constant field");
  return lo + (hi - lo) * (raw.array() - rmin) / (rmax - rmin);
}

int unique_argmax(const Eigen::VectorXd& values) {
  int best = 0;
  for (int i = 1; i < values.size(); ++i) {
    if (values(i) > values(best)) best = i;
  }
  return best;
}

void require_strict_argmax(const Eigen::VectorXd& values, int argmax, const char* name) {
  for (int i = 0; i < values.size(); ++i) {
    if (i != argmax && values(i) == values(argmax)) {
      throw InputError(std::string(name) + ": objective argmax is not unique");
    }
  }
}

// Lattice columns sorted ascending by (y, x): index 0 is the bottom-left
// interior point.
Eigen::Matrix2Xd finish_lattice(std::vector<Vec2> pts, int expected) {
  if (static_cast<int>(pts.size()) != expected) {
    throw GridError("lattice produced " + std::to_string(pts.size()) +
                    " points, expected " + std::to_string(expected));
  }
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.y() != b.y() ? a.y() < b.y() : a.x() < b.x();
  });
  Eigen::Matrix2Xd grid(2, pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) grid.col(k) = pts[k];
  return grid;
}

Eigen::Matrix2Xd lattice_points(const ManifoldSpec& spec, double xmin, double xmax,
                                double ymin, double ymax, double h, double ox,
                                double oy, int expected) {
  std::vector<Vec2> pts;
  for (int j = 0; ymin + (j + oy) * h < ymax; ++j) {
    for (int i = 0; xmin + (i + ox) * h < xmax; ++i) {
      const Vec2 p(xmin + (i + ox) * h, ymin + (j + oy) * h);
      if (contains(spec, p)) pts.push_back(p);
    }
  }
  return finish_lattice(std::move(pts), expected);
}

// Lattice descending from an anchor point, so the cells touching the walls
// through the anchor are never clipped by them.
Eigen::Matrix2Xd lattice_points_anchored(const ManifoldSpec& spec, double x_anchor,
                                         double y_anchor, double xmin, double ymin,
                                         double h, int expected) {
  std::vector<Vec2> pts;
  for (int j = 0; y_anchor - j * h > ymin; ++j) {
    for (int i = 0; x_anchor - i * h > xmin; ++i) {
      const Vec2 p(x_anchor - i * h, y_anchor - j * h);
      if (contains(spec, p)) pts.push_back(p);
    }
  }
  return finish_lattice(std::move(pts), expected);
}

// --- horseshoe construction ---

constexpr double kArmLength = 3.0;
constexpr double kInnerRadius = 0.5;
constexpr double kOuterRadius = 1.5;
constexpr int kArcSegments = 48;

PolygonDomain horseshoe_boundary() {
  std::vector<Vec2> v;
  v.emplace_back(0.0, -kOuterRadius);
  v.emplace_back(kArmLength, -kOuterRadius);
  v.emplace_back(kArmLength, -kInnerRadius);
  v.emplace_back(0.0, -kInnerRadius);
  for (int k = 1; k < kArcSegments; ++k) {  // inner arc, through (-r, 0)
    const double a = -M_PI / 2.0 - k * M_PI / kArcSegments;
    v.emplace_back(kInnerRadius * std::cos(a), kInnerRadius * std::sin(a));
  }
  v.emplace_back(0.0, kInnerRadius);
  v.emplace_back(kArmLength, kInnerRadius);
  v.emplace_back(kArmLength, kOuterRadius);
  v.emplace_back(0.0, kOuterRadius);
  for (int k = 1; k < kArcSegments; ++k) {  // outer arc, through (-R, 0)
    const double a = M_PI / 2.0 + k * M_PI / kArcSegments;
    v.emplace_back(kOuterRadius * std::cos(a), kOuterRadius * std::sin(a));
  }
  Eigen::Matrix2Xd ring(2, v.size());
  for (std::size_t i = 0; i < v.size(); ++i) ring.col(i) = v[i];
  return PolygonDomain{{ring}};
}

// Arc-length coordinate along the horseshoe centerline, 0 at the lower-arm
// tip, increasing around the bend to the upper-arm tip.
double horseshoe_arc(const Vec2& p) {
  if (p.x() >= 0.0) {
    return p.y() < 0.0 ? kArmLength - p.x() : kArmLength + M_PI + p.x();
  }
  const double a = std::atan2(p.y(), p.x());
  const double bend = a <= 0.0 ? (-M_PI / 2.0 - a) : (3.0 * M_PI / 2.0 - a);
  return kArmLength + bend;
}

// Signed transverse coordinate: 0 on the centerline, +1/2 at the outer wall,
// -1/2 at the inner (gap-side) wall. Continuous across the arm/bend joints.
double horseshoe_transverse(const Vec2& p) {
  if (p.x() >= 0.0) return p.y() < 0.0 ? -(p.y() + 1.0) : p.y() - 1.0;
  return p.norm() - 1.0;
}

}  // namespace

Problem ushape_problem() {
  Problem problem{.name = "ushape", .spec = ManifoldSpec::plane(horseshoe_boundary())};

  // spacing chosen so the lattice has exactly 285 interior points; anchoring
  // near the upper-arm tip keeps the cells at the top and tip walls (where
  // the optimum lives) unclipped by the boundary
  const double h = 0.1760;
  problem.grid = lattice_points_anchored(problem.spec, kArmLength - 0.7 * h,
                                         kOuterRadius - 0.7 * h, -kOuterRadius,
                                         -kOuterRadius, h, 285);
  problem.cell_area = h * h;

  Eigen::VectorXd raw(problem.grid.cols());
  for (int i = 0; i < problem.grid.cols(); ++i) {
    const Vec2 p = problem.grid.col(i);
    raw(i) = horseshoe_arc(p) + 0.8 * horseshoe_transverse(p);
  }
  problem.values = rescale_affine(raw, -6.19, 6.19);
  problem.true_optimum_index = unique_argmax(problem.values);
  require_strict_argmax(problem.values, problem.true_optimum_index, "ushape");

  problem.inducing_indices = spread_indices(problem.spec, problem.grid, 20);
  problem.default_n_init = 3;
  problem.default_epsilon = 0.0;
  problem.bm_defaults.n_paths = 3000;
  problem.bm_defaults.step_dt = 2e-3;
  problem.bm_defaults.seed = 101;
  problem.bm_defaults.time_grid = default_time_grid(
      chart_diameter(problem.spec, problem.grid), problem.bm_defaults.step_dt);
  return problem;
}

Problem bitten_torus_problem() {
  constexpr double kBiteWidth = 0.6;
  constexpr int kThetaCount = 15;
  constexpr int kPhiCount = 40;

  const double bite_lo = M_PI - kBiteWidth / 2.0;
  const double bite_hi = M_PI + kBiteWidth / 2.0;
  Problem problem{.name = "torus",
                  .spec = ManifoldSpec::bitten_torus(2.0, 1.0, bite_lo, bite_hi)};

  const double arc = kTwoPi - kBiteWidth;
  const double dtheta = kTwoPi / kThetaCount;
  const double dphi = arc / kPhiCount;
  problem.cell_area = dtheta * dphi;

  problem.grid.resize(2, kThetaCount * kPhiCount);
  Eigen::VectorXd raw(problem.grid.cols());
  const double arc_mid = arc / 2.0;
  int idx = 0;
  // the 0.2 lattice offset leaves the cells at the high-value cut face larger
  // than nominal, so the estimated kernel never understates that column; the
  // tube-angle term is phased onto a grid row so the extremes sit on-grid
  const double tube_phase = M_PI / kThetaCount;
  for (int j = 0; j < kPhiCount; ++j) {
    const double u = (j + 0.2) * dphi;  // angle from the upper cut face
    for (int i = 0; i < kThetaCount; ++i, ++idx) {
      const double theta = i * dtheta;
      problem.grid(0, idx) = theta;
      problem.grid(1, idx) = wrap_angle(bite_hi + u);
      // strictly increasing in u along every tube circle (the tube-angle
      // amplitude must stay below 1), with the extremes pulled to the inner
      // equator so argmax and argmin are ambient-close across the bite; the
      // softplus knee keeps the far half low-contrast while the approach to
      // the upper cut face stays steep and evenly graded
      const double along = u + 0.9 * (u - arc_mid) * std::cos(theta - M_PI - tube_phase);
      raw(idx) = 0.25 * along + 0.75 * 0.7 * std::log1p(std::exp((along - 4.2) / 0.7));
    }
  }
  problem.values = rescale_affine(raw, 0.57, 5.50);
  problem.true_optimum_index = unique_argmax(problem.values);
  require_strict_argmax(problem.values, problem.true_optimum_index, "torus");

  problem.inducing_indices = spread_indices(problem.spec, problem.grid, 19);
  problem.default_n_init = 4;
  problem.default_epsilon = 0.0;
  problem.bm_defaults.n_paths = 6000;
  problem.bm_defaults.step_dt = 4e-3;
  problem.bm_defaults.seed = 102;
  problem.bm_defaults.time_grid = default_time_grid(
      chart_diameter(problem.spec, problem.grid), problem.bm_defaults.step_dt);
  return problem;
}

namespace {

PolygonDomain sea_boundary() {
  // two basins joined by a channel above the peninsula, plus an island hole;
  // wall positions sit strictly between lattice columns/rows of the h = 1/3
  // grid, and the shape removes 30 (peninsula) + 25 (island) of the 540
  // rectangle points, leaving exactly 485
  Eigen::Matrix2Xd outer(2, 8);
  outer << 0.0, 4.6, 4.6, 5.4, 5.4, 10.0, 10.0, 0.0,
           0.0, 0.0, 5.1, 5.1, 0.0, 0.0, 6.0, 6.0;
  Eigen::Matrix2Xd island(2, 4);
  island << 1.65, 3.45, 3.45, 1.65,
            1.95, 1.95, 3.75, 3.75;
  return PolygonDomain{{outer, island}};
}

// Shortest path distances through the lattice graph (8-neighborhood), so the
// field varies along water paths and jumps across the land barrier.
Eigen::VectorXd water_path_distances(const Eigen::Matrix2Xd& grid, double h, int source) {
  const int n = static_cast<int>(grid.cols());
  std::map<std::pair<long, long>, int> cell_of;
  auto key = [&](const Vec2& p) {
    return std::make_pair(std::lround(p.x() / h - 0.5), std::lround(p.y() / h - 0.5));
  };
  for (int i = 0; i < n; ++i) cell_of[key(grid.col(i))] = i;

  Eigen::VectorXd dist = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  dist(source) = 0.0;
  queue.emplace(0.0, source);
  const double diag = h * std::sqrt(2.0);
  while (!queue.empty()) {
    const auto [d, i] = queue.top();
    queue.pop();
    if (d > dist(i)) continue;
    const auto [cx, cy] = key(grid.col(i));
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        if (dx == 0 && dy == 0) continue;
        const auto it = cell_of.find({cx + dx, cy + dy});
        if (it == cell_of.end()) continue;
        const double w = (dx != 0 && dy != 0) ? diag : h;
        if (d + w < dist(it->second)) {
          dist(it->second) = d + w;
          queue.emplace(d + w, it->second);
        }
      }
    }
  }
  return dist;
}

int nearest_grid_index(const Eigen::Matrix2Xd& grid, const Vec2& target) {
  Eigen::Index best;
  (grid.colwise() - target).colwise().squaredNorm().minCoeff(&best);
  return static_cast<int>(best);
}

}  // namespace

Problem synthetic_sea_problem() {
  Problem problem{.name = "sea", .spec = ManifoldSpec::plane(sea_boundary())};

  const double h = 1.0 / 3.0;
  problem.grid = lattice_points(problem.spec, 0.0, 10.0, 0.0, 6.0, h, 0.5, 0.5, 485);
  problem.cell_area = h * h;

  // the global peak is a narrow plateau pressed against the east face of the
  // land barrier: Euclidean smoothing from west-basin data confidently (and
  // wrongly) marks that zone low, while the wide west decoy soaks up myopic
  // search; the ripple keeps the field noisy but learnable
  const int peak = nearest_grid_index(problem.grid, Vec2(6.0, 0.9));
  const int decoy = nearest_grid_index(problem.grid, Vec2(2.0, 1.6));
  const int north = nearest_grid_index(problem.grid, Vec2(8.7, 4.9));
  const Eigen::VectorXd d_peak = water_path_distances(problem.grid, h, peak);
  const Eigen::VectorXd d_decoy = water_path_distances(problem.grid, h, decoy);
  const Eigen::VectorXd d_north = water_path_distances(problem.grid, h, north);

  Eigen::VectorXd values(problem.grid.cols());
  for (int i = 0; i < problem.grid.cols(); ++i) {
    const double x = problem.grid(0, i), y = problem.grid(1, i);
    const double core = std::pow(d_peak(i) / 0.9, 4);
    values(i) = 5.1 * std::exp(-0.5 * std::min(core, 700.0)) +
                3.1 * std::exp(-0.5 * std::pow(d_decoy(i) / 1.2, 2)) +
                1.1 * std::exp(-0.5 * std::pow(d_north(i) / 1.5, 2)) +
                0.25 * std::sin(2.1 * x + 1.3 * y) * std::cos(1.7 * y - 0.6 * x);
  }
  problem.values = values;
  problem.true_optimum_index = unique_argmax(problem.values);
  require_strict_argmax(problem.values, problem.true_optimum_index, "sea");

  problem.inducing_indices = spread_indices(problem.spec, problem.grid, 42);
  problem.default_n_init = 4;
  problem.default_epsilon = 0.0;
  problem.bm_defaults.n_paths = 2500;
  problem.bm_defaults.step_dt = 8e-3;
  problem.bm_defaults.seed = 103;
  problem.bm_defaults.time_grid = default_time_grid(
      chart_diameter(problem.spec, problem.grid), problem.bm_defaults.step_dt);
  return problem;
}

// --- CSV ingestion / export ---

Problem load_domain(const std::filesystem::path& boundary_csv,
                    const std::filesystem::path& grid_csv) {
  const CsvTable boundary = read_csv(boundary_csv);
  const int c_ring = boundary.column("ring_id");
  const int c_bx = boundary.column("x");
  const int c_by = boundary.column("y");

  std::vector<long> ring_order;
  std::map<long, std::vector<Vec2>> rings;
  for (std::size_t r = 0; r < boundary.rows.size(); ++r) {
    const int line = boundary.line_numbers[r];
    const long ring_id = parse_long(boundary.rows[r][c_ring], line, "ring_id");
    if (rings.find(ring_id) == rings.end()) ring_order.push_back(ring_id);
    rings[ring_id].emplace_back(parse_double(boundary.rows[r][c_bx], line, "x"),
                                parse_double(boundary.rows[r][c_by], line, "y"));
  }
  if (rings.find(0) == rings.end()) {
    throw IngestionError(boundary_csv.filename().string() + ": no outer ring (ring_id 0)");
  }
  std::stable_sort(ring_order.begin(), ring_order.end(),
                   [](long a, long b) { return (a == 0) > (b == 0); });
  PolygonDomain domain;
  for (long ring_id : ring_order) {
    const auto& pts = rings[ring_id];
    Eigen::Matrix2Xd ring(2, pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) ring.col(i) = pts[i];
    domain.rings.push_back(std::move(ring));
  }

  Problem problem{.name = grid_csv.stem().string(),
                  .spec = ManifoldSpec::plane(std::move(domain))};

  const CsvTable grid = read_csv(grid_csv);
  const int c_x = grid.column("x");
  const int c_y = grid.column("y");
  const int c_v = grid.column("value");
  const int c_ind = grid.column("is_inducing");

  const int n = static_cast<int>(grid.rows.size());
  if (n == 0) throw IngestionError(grid_csv.filename().string() + ": no grid rows");
  problem.grid.resize(2, n);
  problem.values.resize(n);
  for (int i = 0; i < n; ++i) {
    const int line = grid.line_numbers[i];
    const Vec2 p(parse_double(grid.rows[i][c_x], line, "x"),
                 parse_double(grid.rows[i][c_y], line, "y"));
    if (!contains(problem.spec, p)) {
      std::ostringstream os;
      os << grid_csv.filename().string() << " line " << line << ": grid point ("
         << p.x() << ", " << p.y() << ") outside the domain";
      throw IngestionError(os.str());
    }
    const double v = parse_double(grid.rows[i][c_v], line, "value");
    if (!std::isfinite(v)) {
      throw IngestionError(grid_csv.filename().string() + " line " +
                           std::to_string(line) + ": value is not finite");
    }
    const long flag = parse_long(grid.rows[i][c_ind], line, "is_inducing");
    if (flag != 0 && flag != 1) {
      throw IngestionError(grid_csv.filename().string() + " line " +
                           std::to_string(line) + ": is_inducing must be 0 or 1");
    }
    problem.grid.col(i) = p;
    problem.values(i) = v;
    if (flag == 1) problem.inducing_indices.push_back(i);
  }
  if (problem.inducing_indices.empty()) {
    throw IngestionError(grid_csv.filename().string() + ": no inducing points flagged");
  }

  // infers the cell area and validates spacing uniformity
  const Eigen::VectorXd volumes = cell_volumes(problem.spec, problem.grid);
  problem.cell_area = volumes(0);
  problem.true_optimum_index = unique_argmax(problem.values);

  problem.default_n_init = 4;
  problem.bm_defaults.n_paths = 1500;
  problem.bm_defaults.step_dt = 4e-3;
  problem.bm_defaults.seed = 104;
  problem.bm_defaults.time_grid = default_time_grid(
      chart_diameter(problem.spec, problem.grid), problem.bm_defaults.step_dt);
  return problem;
}

void write_domain_csv(const Problem& problem, const std::filesystem::path& boundary_csv,
                      const std::filesystem::path& grid_csv) {
  if (!problem.spec.is_plane()) throw InputError("only planar domains export to CSV");
  std::ofstream bos(boundary_csv);
  if (!bos) throw IoError("cannot open " + boundary_csv.string());
  bos << "ring_id,x,y\n";
  const auto& rings = problem.spec.plane_spec().boundary.rings;
  for (std::size_t k = 0; k < rings.size(); ++k) {
    for (Eigen::Index i = 0; i < rings[k].cols(); ++i) {
      bos << k << "," << format_double(rings[k](0, i)) << ","
          << format_double(rings[k](1, i)) << "\n";
    }
  }
  std::ofstream gos(grid_csv);
  if (!gos) throw IoError("cannot open " + grid_csv.string());
  gos << "x,y,value,is_inducing\n";
  std::vector<bool> inducing(problem.grid.cols(), false);
  for (int idx : problem.inducing_indices) inducing[idx] = true;
  for (int i = 0; i < problem.grid.cols(); ++i) {
    gos << format_double(problem.grid(0, i)) << "," << format_double(problem.grid(1, i))
        << "," << format_double(problem.values(i)) << "," << (inducing[i] ? 1 : 0)
        << "\n";
  }
}

Problem resolve_problem(const std::string& name_or_files) {
  if (name_or_files == "ushape") return ushape_problem();
  if (name_or_files == "torus") return bitten_torus_problem();
  if (name_or_files == "sea") return synthetic_sea_problem();
  const auto comma = name_or_files.find(',');
  if (comma != std::string::npos) {
    return load_domain(name_or_files.substr(0, comma), name_or_files.substr(comma + 1));
  }
  throw InputError("unknown problem '" + name_or_files +
                   "' (expected ushape, torus, sea, or boundary.csv,grid.csv)");
}

std::vector<std::string> validate_problem(const Problem& problem) {
  std::vector<std::string> failures;
  const int n = static_cast<int>(problem.grid.cols());
  if (n == 0) {
    failures.push_back("grid is empty");
    return failures;
  }
  for (int i = 0; i < n; ++i) {
    if (!contains(problem.spec, problem.grid.col(i))) {
      failures.push_back("grid point " + std::to_string(i) + " outside the domain");
      break;
    }
  }
  if (!problem.values.allFinite()) failures.push_back("objective values are not all finite");
  if (problem.values.size() != n) failures.push_back("values length does not match grid");
  if (static_cast<int>(problem.inducing_indices.size()) > n) {
    failures.push_back("more inducing points than grid points");
  }
  std::set<int> seen;
  for (int idx : problem.inducing_indices) {
    if (idx < 0 || idx >= n) failures.push_back("inducing index out of range");
    if (!seen.insert(idx).second) failures.push_back("duplicate inducing index");
  }
  if (problem.true_optimum_index < 0 || problem.true_optimum_index >= n ||
      problem.values(problem.true_optimum_index) != problem.values.maxCoeff()) {
    failures.push_back("true optimum index does not attain the maximum");
  }
  for (int i = 0; i < problem.true_optimum_index; ++i) {
    if (problem.values(i) == problem.values(problem.true_optimum_index)) {
      failures.push_back("true optimum index is not the lowest argmax");
      break;
    }
  }
  try {
    const Eigen::VectorXd volumes =
        cell_volumes(problem.spec, problem.grid, problem.cell_area);
    if ((volumes.array() <= 0.0).any()) failures.push_back("nonpositive cell volume");
  } catch (const Error& e) {
    failures.push_back(std::string("cell volumes: ") + e.what());
  }
  for (int i = 0; i < n; ++i) {
    const MetricTensor m = metric_tensor(problem.spec, problem.grid.col(i));
    if ((m.g - m.g.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      failures.push_back("metric not symmetric at grid point " + std::to_string(i));
      break;
    }
    if (Eigen::LLT<Mat2>(m.g).info() != Eigen::Success) {
      failures.push_back("metric not positive definite at grid point " + std::to_string(i));
      break;
    }
    if ((m.inv_g * m.g - Mat2::Identity()).cwiseAbs().maxCoeff() > 1e-10) {
      failures.push_back("metric inverse check failed at grid point " + std::to_string(i));
      break;
    }
  }
  return failures;
}

// --- experiment runner ---

BMConfig effective_bm_config(const Problem& problem, const ExperimentConfig& cfg) {
  BMConfig bm = problem.bm_defaults;
  if (cfg.n_paths) bm.n_paths = *cfg.n_paths;
  if (cfg.bm_seed) bm.seed = *cfg.bm_seed;
  if (cfg.step_dt && *cfg.step_dt != bm.step_dt) {
    bm.step_dt = *cfg.step_dt;
    bm.time_grid = default_time_grid(chart_diameter(problem.spec, problem.grid), bm.step_dt);
  }
  return bm;
}

std::vector<PathEnsemble> build_ensembles(const Problem& problem, const BMConfig& bm,
                                          const std::optional<std::filesystem::path>& cache_dir) {
  std::vector<PathEnsemble> ensembles;
  ensembles.reserve(problem.inducing_indices.size());
  if (cache_dir) std::filesystem::create_directories(*cache_dir);
  for (std::size_t i = 0; i < problem.inducing_indices.size(); ++i) {
    const Vec2 start = problem.grid.col(problem.inducing_indices[i]);
    const int start_index = static_cast<int>(i);
    if (cache_dir) {
      const auto file = ensemble_cache_path(
          *cache_dir, ensemble_cache_key(problem.spec, start, bm, start_index));
      if (std::filesystem::exists(file)) {
        ensembles.push_back(load_ensemble(problem.spec, start, bm, start_index, file));
        continue;
      }
      ensembles.push_back(simulate_ensemble(problem.spec, start, bm, start_index));
      save_ensemble(ensembles.back(), problem.spec, file);
      continue;
    }
    ensembles.push_back(simulate_ensemble(problem.spec, start, bm, start_index));
  }
  return ensembles;
}

KernelEstimate build_problem_kernel(const Problem& problem, const BMConfig& bm,
                                    const std::optional<std::filesystem::path>& cache_dir) {
  const auto ensembles = build_ensembles(problem, bm, cache_dir);
  const Eigen::VectorXd volumes =
      cell_volumes(problem.spec, problem.grid, problem.cell_area);
  return build_kernel(problem.spec, ensembles, problem.grid, volumes,
                      problem.inducing_indices);
}

Eigen::MatrixXd baseline_coordinates(const Problem& problem) {
  if (problem.spec.is_plane()) return problem.grid;
  Eigen::MatrixXd coords(3, problem.grid.cols());
  for (int i = 0; i < problem.grid.cols(); ++i) {
    coords.col(i) = embed(problem.spec, problem.grid.col(i));
  }
  return coords;
}

BOTrace run_method(const Problem& problem, const SurrogateModel& surrogate,
                   const ExperimentConfig& cfg, std::uint64_t seed) {
  BOConfig bo;
  bo.n_iterations = cfg.n_iterations;
  bo.n_init = cfg.n_init.value_or(problem.default_n_init);
  bo.seed = seed;
  bo.epsilon = cfg.epsilon ? cfg.epsilon : problem.default_epsilon;
  bo.epsilon_rel = cfg.epsilon_rel;
  return run_bo(problem.values, surrogate, bo);
}

double ExperimentReport::success_rate(const std::string& method) const {
  int hits = 0, total = 0;
  for (const auto& r : results) {
    if (r.method != method) continue;
    ++total;
    hits += (!r.failed && r.found_optimum) ? 1 : 0;
  }
  return total ? static_cast<double>(hits) / total : 0.0;
}

double ExperimentReport::relaxed_success_rate(const std::string& method) const {
  int hits = 0, total = 0;
  for (const auto& r : results) {
    if (r.method != method) continue;
    ++total;
    hits += (!r.failed && r.relaxed_success) ? 1 : 0;
  }
  return total ? static_cast<double>(hits) / total : 0.0;
}

ExperimentReport run_experiment(const Problem& problem,
                                const std::vector<std::string>& methods,
                                const ExperimentConfig& cfg) {
  if (methods.empty()) throw ConfigError("no methods requested");
  for (const auto& m : methods) {
    if (m != "in_bo" && m != "tra_bo") throw ConfigError("unknown method '" + m + "'");
  }

  std::map<std::string, std::unique_ptr<SurrogateModel>> models;
  if (std::find(methods.begin(), methods.end(), "in_bo") != methods.end()) {
    const BMConfig bm = effective_bm_config(problem, cfg);
    models["in_bo"] = std::make_unique<IntrinsicSurrogate>(
        build_problem_kernel(problem, bm, cfg.cache_dir), cfg.fit_grids);
  }
  if (std::find(methods.begin(), methods.end(), "tra_bo") != methods.end()) {
    models["tra_bo"] = std::make_unique<RbfSurrogate>(
        baseline_coordinates(problem), cfg.rbf_length_scale_grid, cfg.fit_grids);
  }

  const double v_lo = problem.values.minCoeff();
  const double v_hi = problem.values.maxCoeff();
  const double relaxed_bar = v_lo + 0.99 * (v_hi - v_lo);

  ExperimentReport report;
  report.problem_name = problem.name;
  report.methods = methods;
  for (int k = 0; k < cfg.n_seeds; ++k) {
    const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(k);
    for (const auto& method : methods) {
      SeedResult result;
      result.method = method;
      result.seed = seed;
      try {
        result.trace = run_method(problem, *models.at(method), cfg, seed);
        result.best_value = result.trace.best_value();
        result.found_optimum = result.trace.best_index() == problem.true_optimum_index;
        result.relaxed_success = result.best_value >= relaxed_bar;
        for (std::size_t s = 0; s < result.trace.steps.size(); ++s) {
          if (result.trace.steps[s].grid_index == problem.true_optimum_index) {
            result.n_evals_to_optimum = static_cast<int>(s) + 1;
            break;
          }
        }
      } catch (const Error& e) {
        result.failed = true;
        result.failure = e.what();
        result.best_value = std::numeric_limits<double>::quiet_NaN();
      }
      report.results.push_back(std::move(result));
    }
  }
  return report;
}

void write_trace_csv(const BOTrace& trace, std::ostream& os) {
  os << "iteration,grid_index,y,best_index,best_value\n";
  for (const auto& s : trace.steps) {
    os << s.iteration << "," << s.grid_index << "," << format_double(s.y) << ","
       << s.best_index << "," << format_double(s.best_value) << "\n";
  }
}

void write_report_csv(const ExperimentReport& report, std::ostream& os) {
  os << "method,seed,best_value,found_optimum,n_evals_to_optimum\n";
  for (const auto& r : report.results) {
    os << r.method << "," << r.seed << "," << format_double(r.best_value) << ","
       << (r.found_optimum ? 1 : 0) << ",";
    if (r.n_evals_to_optimum) os << *r.n_evals_to_optimum;
    os << "\n";
  }
}

void write_curves_csv(const ExperimentReport& report, std::ostream& os) {
  os << "method,seed,eval,best_value\n";
  for (const auto& r : report.results) {
    for (std::size_t s = 0; s < r.trace.steps.size(); ++s) {
      os << r.method << "," << r.seed << "," << (s + 1) << ","
         << format_double(r.trace.steps[s].best_value) << "\n";
    }
  }
}

}  // namespace inbo
