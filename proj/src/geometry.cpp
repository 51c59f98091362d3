#include "inbo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace inbo {

const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Domain: return "domain";
    case ErrorCategory::Singularity: return "singularity";
    case ErrorCategory::Grid: return "grid";
    case ErrorCategory::Reflection: return "reflection";
    case ErrorCategory::Lookup: return "lookup";
    case ErrorCategory::Input: return "input";
    case ErrorCategory::Conditioning: return "conditioning";
    case ErrorCategory::Fit: return "fit";
    case ErrorCategory::Exhaustion: return "exhaustion";
    case ErrorCategory::Ingestion: return "ingestion";
    case ErrorCategory::Parse: return "parse";
    case ErrorCategory::Io: return "io";
  }
  return "unknown";
}

double wrap_angle(double a) {
  double w = std::fmod(a, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;  // fmod can land exactly on 2*pi after the add
  return w;
}

double angle_distance(double a, double b) {
  double w = std::fabs(wrap_angle(a) - wrap_angle(b));
  return std::min(w, kTwoPi - w);
}

// --- polygon primitives ---

bool point_in_ring(const Eigen::Matrix2Xd& ring, const Vec2& p) {
  const Eigen::Index n = ring.cols();
  bool inside = false;
  for (Eigen::Index i = 0, j = n - 1; i < n; j = i++) {
    const double xi = ring(0, i), yi = ring(1, i);
    const double xj = ring(0, j), yj = ring(1, j);
    if ((yi > p.y()) != (yj > p.y())) {
      const double x_cross = xi + (p.y() - yi) / (yj - yi) * (xj - xi);
      if (p.x() < x_cross) inside = !inside;
    }
  }
  return inside;
}

double distance_to_ring(const Eigen::Matrix2Xd& ring, const Vec2& p) {
  const Eigen::Index n = ring.cols();
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = ring.col(j), b = ring.col(i);
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    best = std::min(best, (p - (a + t * ab)).norm());
  }
  return best;
}

double ring_signed_area(const Eigen::Matrix2Xd& ring) {
  const Eigen::Index n = ring.cols();
  double s = 0.0;
  for (Eigen::Index i = 0, j = n - 1; i < n; j = i++) {
    s += ring(0, j) * ring(1, i) - ring(0, i) * ring(1, j);
  }
  return 0.5 * s;
}

namespace {

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  auto orient = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    const double v = (q.x() - p.x()) * (r.y() - p.y()) - (q.y() - p.y()) * (r.x() - p.x());
    if (v > 0) return 1;
    if (v < 0) return -1;
    return 0;
  };
  const int o1 = orient(a, b, c), o2 = orient(a, b, d);
  const int o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  auto on_segment = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    return std::min(p.x(), q.x()) <= r.x() && r.x() <= std::max(p.x(), q.x()) &&
           std::min(p.y(), q.y()) <= r.y() && r.y() <= std::max(p.y(), q.y());
  };
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

}  // namespace

bool ring_is_simple(const Eigen::Matrix2Xd& ring) {
  const Eigen::Index n = ring.cols();
  if (n < 3) return false;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec2 a = ring.col(i), b = ring.col((i + 1) % n);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      // skip adjacent edges (shared vertex)
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      const Vec2 c = ring.col(j), d = ring.col((j + 1) % n);
      if (segments_intersect(a, b, c, d)) return false;
    }
  }
  return true;
}

// --- manifold spec ---

ManifoldSpec ManifoldSpec::plane(PolygonDomain boundary) {
  if (boundary.rings.empty()) throw InputError("plane domain needs at least one ring");
  for (std::size_t k = 0; k < boundary.rings.size(); ++k) {
    auto& ring = boundary.rings[k];
    if (ring.cols() < 3) throw InputError("polygon ring " + std::to_string(k) + " has fewer than 3 vertices");
    // drop an explicit closing vertex if present
    if ((ring.col(0) - ring.col(ring.cols() - 1)).norm() < kBoundaryTol) {
      ring.conservativeResize(2, ring.cols() - 1);
      if (ring.cols() < 3) throw InputError("polygon ring " + std::to_string(k) + " degenerate after closing");
    }
    if (!ring_is_simple(ring)) throw InputError("polygon ring " + std::to_string(k) + " self-intersects");
  }
  // normalize the outer ring to counterclockwise
  if (ring_signed_area(boundary.rings[0]) < 0.0) {
    boundary.rings[0] = boundary.rings[0].rowwise().reverse().eval();
  }
  return ManifoldSpec(ConstrainedPlane{std::move(boundary)});
}

ManifoldSpec ManifoldSpec::bitten_torus(double major_radius, double tube_radius,
                                        double bite_lo, double bite_hi) {
  if (!(major_radius > tube_radius) || !(tube_radius > 0.0)) {
    throw InputError("torus requires R > r > 0");
  }
  if (bite_hi < bite_lo || bite_hi - bite_lo >= kTwoPi) {
    throw InputError("bite interval length must lie in [0, 2*pi)");
  }
  return ManifoldSpec(BittenTorus{major_radius, tube_radius, bite_lo, bite_hi});
}

std::string ManifoldSpec::canonical_string() const {
  std::ostringstream os;
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g,", v);
    os << buf;
  };
  if (is_plane()) {
    os << "plane:";
    for (const auto& ring : plane_spec().boundary.rings) {
      os << "ring:";
      for (Eigen::Index i = 0; i < ring.cols(); ++i) {
        put(ring(0, i));
        put(ring(1, i));
      }
    }
  } else {
    const auto& t = torus_spec();
    os << "torus:";
    put(t.major_radius);
    put(t.tube_radius);
    put(t.bite_lo);
    put(t.bite_hi);
  }
  return os.str();
}

// --- membership, reduction, distances ---

namespace {

bool plane_contains(const PolygonDomain& domain, const Vec2& p) {
  const auto& outer = domain.rings[0];
  if (!point_in_ring(outer, p)) {
    if (distance_to_ring(outer, p) > kBoundaryTol) return false;
    return true;  // on (or effectively on) the outer boundary
  }
  for (std::size_t k = 1; k < domain.rings.size(); ++k) {
    if (point_in_ring(domain.rings[k], p) &&
        distance_to_ring(domain.rings[k], p) > kBoundaryTol) {
      return false;
    }
  }
  return true;
}

bool torus_contains(const BittenTorus& torus, double phi) {
  if (!torus.has_bite()) return true;
  const double u = wrap_angle(phi - torus.bite_lo);
  const double width = torus.bite_width();
  // excluded strictly inside the bite; the cut faces themselves are interior
  return !(u > kBoundaryTol && u < width - kBoundaryTol);
}

// Arc coordinate of phi measured from the upper bite face, in [0, 2*pi - width].
double torus_arc_coordinate(const BittenTorus& torus, double phi) {
  return wrap_angle(phi - torus.bite_hi);
}

void require_in_domain(const ManifoldSpec& spec, const Vec2& x, const char* op) {
  if (!contains(spec, x)) {
    std::ostringstream os;
    os << op << ": point (" << x.x() << ", " << x.y() << ") outside chart domain";
    throw DomainError(os.str());
  }
}

}  // namespace

bool contains(const ManifoldSpec& spec, const Vec2& x) {
  if (spec.is_plane()) return plane_contains(spec.plane_spec().boundary, x);
  return torus_contains(spec.torus_spec(), x.y());
}

Vec2 reduce_to_chart(const ManifoldSpec& spec, const Vec2& x) {
  if (spec.is_plane()) return x;
  return Vec2(wrap_angle(x.x()), wrap_angle(x.y()));
}

double chart_distance(const ManifoldSpec& spec, const Vec2& a, const Vec2& b) {
  if (spec.is_plane()) return (a - b).norm();
  const auto& torus = spec.torus_spec();
  const double dtheta = angle_distance(a.x(), b.x());
  double dphi;
  if (torus.has_bite()) {
    dphi = std::fabs(torus_arc_coordinate(torus, a.y()) -
                     torus_arc_coordinate(torus, b.y()));
  } else {
    dphi = angle_distance(a.y(), b.y());
  }
  return std::hypot(dtheta, dphi);
}

double chart_diameter(const ManifoldSpec& spec, const Eigen::Matrix2Xd& grid) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < grid.cols(); ++i) {
    for (Eigen::Index j = i + 1; j < grid.cols(); ++j) {
      best = std::max(best, chart_distance(spec, grid.col(i), grid.col(j)));
    }
  }
  return best;
}

// --- embedding, metric, SDE ---

Eigen::VectorXd embed(const ManifoldSpec& spec, const Vec2& x) {
  require_in_domain(spec, x, "embed");
  if (spec.is_plane()) return x;
  const auto& t = spec.torus_spec();
  const double a = t.major_radius + t.tube_radius * std::cos(x.x());
  Eigen::Vector3d out(a * std::cos(x.y()), a * std::sin(x.y()),
                      t.tube_radius * std::sin(x.x()));
  return out;
}

MetricTensor metric_tensor(const ManifoldSpec& spec, const Vec2& x) {
  require_in_domain(spec, x, "metric_tensor");
  MetricTensor m;
  if (spec.is_plane()) {
    m.g = Mat2::Identity();
    m.det_g = 1.0;
    m.inv_g = Mat2::Identity();
    return m;
  }
  const auto& t = spec.torus_spec();
  const double a = t.major_radius + t.tube_radius * std::cos(x.x());
  m.g = Mat2::Zero();
  m.g(0, 0) = t.tube_radius * t.tube_radius;
  m.g(1, 1) = a * a;
  m.det_g = m.g(0, 0) * m.g(1, 1);
  if (m.det_g <= kMetricDetFloor) {
    throw SingularityError("degenerate metric at theta=" + std::to_string(x.x()));
  }
  m.inv_g = Mat2::Zero();
  m.inv_g(0, 0) = 1.0 / m.g(0, 0);
  m.inv_g(1, 1) = 1.0 / m.g(1, 1);
  return m;
}

namespace {

Mat2 symmetric_sqrt(const Mat2& a) {
  Eigen::SelfAdjointEigenSolver<Mat2> es(a);
  return es.eigenvectors() *
         es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

// Generic drift for the chart SDE of Brownian motion, from the metric and its
// analytic partials:
//   drift_i = 1/2 sum_j (-g^-1 (dg/dx_j) g^-1)_ij
//           + 1/4 sum_j (g^-1)_ij tr(g^-1 dg/dx_j)
Vec2 drift_from_metric(const Mat2& inv_g, const Mat2 dg[2]) {
  Vec2 drift = Vec2::Zero();
  for (int j = 0; j < 2; ++j) {
    const Mat2 d_inv = -inv_g * dg[j] * inv_g;
    const double tr = (inv_g * dg[j]).trace();
    for (int i = 0; i < 2; ++i) {
      drift(i) += 0.5 * d_inv(i, j) + 0.25 * inv_g(i, j) * tr;
    }
  }
  return drift;
}

}  // namespace

SdeCoefficients sde_coefficients(const ManifoldSpec& spec, const Vec2& x) {
  require_in_domain(spec, x, "sde_coefficients");
  SdeCoefficients out;
  if (spec.is_plane()) {
    out.drift = Vec2::Zero();
    out.diffusion = Mat2::Identity();
    return out;
  }
  const auto& t = spec.torus_spec();
  MetricTensor m = metric_tensor(spec, x);
  Mat2 dg[2];
  dg[0] = Mat2::Zero();
  dg[0](1, 1) = -2.0 * (t.major_radius + t.tube_radius * std::cos(x.x())) *
                t.tube_radius * std::sin(x.x());
  dg[1] = Mat2::Zero();
  out.drift = drift_from_metric(m.inv_g, dg);
  out.diffusion = symmetric_sqrt(m.inv_g);
  return out;
}

SdeCoefficients torus_sde_closed_form(const BittenTorus& torus, double theta) {
  const double r = torus.tube_radius;
  const double a = torus.major_radius + r * std::cos(theta);
  if (r * r * a * a <= kMetricDetFloor) {
    throw SingularityError("degenerate metric at theta=" + std::to_string(theta));
  }
  SdeCoefficients out;
  out.drift = Vec2(-0.5 * std::sin(theta) / (r * a), 0.0);
  out.diffusion = Mat2::Zero();
  out.diffusion(0, 0) = 1.0 / r;
  out.diffusion(1, 1) = 1.0 / std::fabs(a);
  return out;
}

// --- cell volumes ---

Eigen::VectorXd cell_volumes(const ManifoldSpec& spec, const Eigen::Matrix2Xd& grid,
                             std::optional<double> cell_area) {
  const Eigen::Index n = grid.cols();
  if (n == 0) throw InputError("cell_volumes: empty grid");
  double area;
  if (n >= 2) {
    double d_lo = std::numeric_limits<double>::infinity();
    double d_hi = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double nearest = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        nearest = std::min(nearest, chart_distance(spec, grid.col(i), grid.col(j)));
      }
      d_lo = std::min(d_lo, nearest);
      d_hi = std::max(d_hi, nearest);
    }
    if (d_hi - d_lo > 0.05 * d_lo) {
      std::ostringstream os;
      os << "grid spacing non-uniform: nearest-neighbor distances span [" << d_lo
         << ", " << d_hi << "]";
      throw GridError(os.str());
    }
    area = cell_area.value_or(d_lo * d_lo);
  } else {
    if (!cell_area) throw GridError("cannot infer cell area from a single grid point");
    area = *cell_area;
  }
  if (!(area > 0.0)) throw GridError("cell area must be positive");

  Eigen::VectorXd volumes(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (spec.is_plane()) {
      volumes(i) = area;
    } else {
      volumes(i) = area * std::sqrt(metric_tensor(spec, grid.col(i)).det_g);
    }
  }
  return volumes;
}

// --- planar membership index ---

PlanarDomainIndex::PlanarDomainIndex(const PolygonDomain& domain, int resolution)
    : domain_(&domain) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& ring : domain.rings) {
    xmin = std::min(xmin, ring.row(0).minCoeff());
    xmax = std::max(xmax, ring.row(0).maxCoeff());
    ymin = std::min(ymin, ring.row(1).minCoeff());
    ymax = std::max(ymax, ring.row(1).maxCoeff());
  }
  const double pad = 1e-9 + 1e-9 * std::max(xmax - xmin, ymax - ymin);
  xmin -= pad;
  ymin -= pad;
  xmax += pad;
  ymax += pad;
  cell_ = std::max(xmax - xmin, ymax - ymin) / resolution;
  x0_ = xmin;
  y0_ = ymin;
  nx_ = static_cast<int>(std::ceil((xmax - xmin) / cell_)) + 1;
  ny_ = static_cast<int>(std::ceil((ymax - ymin) / cell_)) + 1;
  cls_.assign(static_cast<std::size_t>(nx_) * ny_, 0);

  // mark cells touched by any edge (inflated by the boundary tolerance)
  for (const auto& ring : domain.rings) {
    const Eigen::Index m = ring.cols();
    for (Eigen::Index i = 0, j = m - 1; i < m; j = i++) {
      const Vec2 a = ring.col(j), b = ring.col(i);
      const double exl = std::min(a.x(), b.x()) - kBoundaryTol;
      const double exh = std::max(a.x(), b.x()) + kBoundaryTol;
      const double eyl = std::min(a.y(), b.y()) - kBoundaryTol;
      const double eyh = std::max(a.y(), b.y()) + kBoundaryTol;
      const int cx0 = std::max(0, static_cast<int>((exl - x0_) / cell_));
      const int cx1 = std::min(nx_ - 1, static_cast<int>((exh - x0_) / cell_));
      const int cy0 = std::max(0, static_cast<int>((eyl - y0_) / cell_));
      const int cy1 = std::min(ny_ - 1, static_cast<int>((eyh - y0_) / cell_));
      for (int cy = cy0; cy <= cy1; ++cy) {
        for (int cx = cx0; cx <= cx1; ++cx) {
          // conservative: edge bbox overlap is enough, extra cells only cost speed
          cls_[static_cast<std::size_t>(cy) * nx_ + cx] = 2;
        }
      }
    }
  }
  // classify untouched cells by their center; no edge crosses them, so the
  // whole cell shares the center's membership
  for (int cy = 0; cy < ny_; ++cy) {
    for (int cx = 0; cx < nx_; ++cx) {
      auto& c = cls_[static_cast<std::size_t>(cy) * nx_ + cx];
      if (c == 2) continue;
      const Vec2 center(x0_ + (cx + 0.5) * cell_, y0_ + (cy + 0.5) * cell_);
      c = plane_contains(domain, center) ? 1 : 0;
    }
  }
}

bool PlanarDomainIndex::contains(const Vec2& p) const {
  const int cx = static_cast<int>((p.x() - x0_) / cell_);
  const int cy = static_cast<int>((p.y() - y0_) / cell_);
  if (cx < 0 || cy < 0 || cx >= nx_ || cy >= ny_ || p.x() < x0_ || p.y() < y0_) {
    return plane_contains(*domain_, p);
  }
  const unsigned char c = cls_[static_cast<std::size_t>(cy) * nx_ + cx];
  if (c != 2) return c == 1;
  return plane_contains(*domain_, p);
}

}  // namespace inbo
