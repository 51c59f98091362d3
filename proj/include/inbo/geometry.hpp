#pragma once

#include <Eigen/Dense>
#include <optional>
#include <variant>
#include <vector>

#include "inbo/errors.hpp"

namespace inbo {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Points this close to a boundary edge are classified interior, so reflection
// cannot livelock at machine precision.
inline constexpr double kBoundaryTol = 1e-12;

// Metric determinants at or below this are treated as singular.
inline constexpr double kMetricDetFloor = 1e-14;

// Reduce an angle to [0, 2*pi).
double wrap_angle(double a);

// Circular distance between two angles, in [0, pi].
double angle_distance(double a, double b);

// Planar region bounded by polygon rings. Ring 0 is the outer boundary
// (stored counterclockwise); any further rings are holes.
struct PolygonDomain {
  std::vector<Eigen::Matrix2Xd> rings;
};

struct ConstrainedPlane {
  PolygonDomain boundary;
};

// Torus with tube radius r around a circle of radius R, embedded in R^3 as
//   X(theta, phi) = ((R + r cos theta) cos phi, (R + r cos theta) sin phi,
//                    r sin theta),
// with the angular sector phi in (bite_lo, bite_hi) removed. theta is the
// tube angle, phi the angle around the symmetry axis; both live in [0, 2*pi).
// theta wraps freely; phi wraps except across the bite, which is a hard
// boundary.
struct BittenTorus {
  double major_radius = 2.0;  // R, center of tube to center of torus
  double tube_radius = 1.0;   // r
  double bite_lo = 0.0;
  double bite_hi = 0.0;  // bite width = bite_hi - bite_lo, in [0, 2*pi)

  double bite_width() const { return bite_hi - bite_lo; }
  bool has_bite() const { return bite_width() > 0.0; }
};

class ManifoldSpec {
 public:
  static ManifoldSpec plane(PolygonDomain boundary);
  static ManifoldSpec bitten_torus(double major_radius, double tube_radius,
                                   double bite_lo, double bite_hi);

  bool is_plane() const { return std::holds_alternative<ConstrainedPlane>(kind_); }
  bool is_torus() const { return std::holds_alternative<BittenTorus>(kind_); }
  const ConstrainedPlane& plane_spec() const { return std::get<ConstrainedPlane>(kind_); }
  const BittenTorus& torus_spec() const { return std::get<BittenTorus>(kind_); }

  int intrinsic_dim() const { return 2; }
  int ambient_dim() const { return is_plane() ? 2 : 3; }

  // Canonical text form, used for cache keys.
  std::string canonical_string() const;

 private:
  explicit ManifoldSpec(std::variant<ConstrainedPlane, BittenTorus> kind)
      : kind_(std::move(kind)) {}
  std::variant<ConstrainedPlane, BittenTorus> kind_;
};

// First fundamental form at a chart point: g_ij = d(embed)/dx_i . d(embed)/dx_j.
struct MetricTensor {
  Mat2 g;
  double det_g = 0.0;
  Mat2 inv_g;
};

// Ito coefficients of Brownian motion in chart coordinates:
//   dx = drift dt + diffusion dB,  diffusion = g^{-1/2} (symmetric root).
struct SdeCoefficients {
  Vec2 drift;
  Mat2 diffusion;
};

Eigen::VectorXd embed(const ManifoldSpec& spec, const Vec2& x);
MetricTensor metric_tensor(const ManifoldSpec& spec, const Vec2& x);
SdeCoefficients sde_coefficients(const ManifoldSpec& spec, const Vec2& x);

// Closed-form torus coefficients:
//   d theta = -1/2 r^-1 sin(theta) (R + r cos theta)^-1 dt + r^-1 dB_1
//   d phi   = |R + r cos theta|^-1 dB_2
SdeCoefficients torus_sde_closed_form(const BittenTorus& torus, double theta);

// True iff x lies in the interior of the domain; points within kBoundaryTol
// of an edge count as interior.
bool contains(const ManifoldSpec& spec, const Vec2& x);

// Reduce chart coordinates to the declared ranges (angle wrapping for the
// torus; identity for planes).
Vec2 reduce_to_chart(const ManifoldSpec& spec, const Vec2& x);

// Chart distance used for cell assignment and grid diagnostics. For the
// torus this is wrap-aware in theta and measures phi along the arc that does
// not cross the bite.
double chart_distance(const ManifoldSpec& spec, const Vec2& a, const Vec2& b);

// Largest pairwise chart distance across the grid columns.
double chart_diameter(const ManifoldSpec& spec, const Eigen::Matrix2Xd& grid);

// Riemannian volume of each grid point's chart cell: a * sqrt(det g), with a
// the chart-cell area (provided, or inferred as the squared minimal
// nearest-neighbor chart distance). Spacing must be uniform within 5%.
Eigen::VectorXd cell_volumes(const ManifoldSpec& spec, const Eigen::Matrix2Xd& grid,
                             std::optional<double> cell_area = std::nullopt);

// --- polygon primitives ---

// Crossing-number test; boundary behavior half-open, resolved separately via
// distance_to_ring.
bool point_in_ring(const Eigen::Matrix2Xd& ring, const Vec2& p);
double distance_to_ring(const Eigen::Matrix2Xd& ring, const Vec2& p);
double ring_signed_area(const Eigen::Matrix2Xd& ring);
bool ring_is_simple(const Eigen::Matrix2Xd& ring);

// Bucketed membership index for the Euler-Maruyama hot loop. Cells crossed
// by no boundary edge resolve in O(1); cells near the boundary fall back to
// the exact test, so results agree with contains() everywhere.
class PlanarDomainIndex {
 public:
  explicit PlanarDomainIndex(const PolygonDomain& domain, int resolution = 192);

  bool contains(const Vec2& p) const;

 private:
  const PolygonDomain* domain_;
  double x0_ = 0.0, y0_ = 0.0, cell_ = 1.0;
  int nx_ = 0, ny_ = 0;
  // 0 = outside, 1 = inside, 2 = near boundary (exact test required)
  std::vector<unsigned char> cls_;
};

}  // namespace inbo
