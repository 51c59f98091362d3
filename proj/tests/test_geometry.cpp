#include <doctest.h>

#include <cmath>

#include "inbo/geometry.hpp"
#include "inbo/bench.hpp"
#include "inbo/rng.hpp"
#include "test_support.hpp"

using namespace inbo;

namespace {

ManifoldSpec test_torus(double bite_lo = 0.0, double bite_hi = 0.0) {
  return ManifoldSpec::bitten_torus(2.0, 1.0, bite_lo, bite_hi);
}

// Metric from the embedding Jacobian by central differences.
Mat2 fd_metric(const ManifoldSpec& spec, const Vec2& x, double h = 1e-5) {
  Eigen::MatrixXd j(spec.ambient_dim(), 2);
  for (int c = 0; c < 2; ++c) {
    Vec2 hi = x, lo = x;
    hi(c) += h;
    lo(c) -= h;
    j.col(c) = (embed(spec, hi) - embed(spec, lo)) / (2.0 * h);
  }
  return j.transpose() * j;
}

// Drift of the chart SDE by central differences of g^{ij} sqrt(det g).
Vec2 fd_torus_drift(double big_r, double r, const Vec2& x, double h = 1e-5) {
  auto metric = [&](const Vec2& p) {
    Mat2 g = Mat2::Zero();
    g(0, 0) = r * r;
    const double a = big_r + r * std::cos(p.x());
    g(1, 1) = a * a;
    return g;
  };
  const Mat2 g = metric(x);
  const double sqrt_det = std::sqrt(g.determinant());
  Vec2 drift = Vec2::Zero();
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      Vec2 hi = x, lo = x;
      hi(j) += h;
      lo(j) -= h;
      const Mat2 g_hi = metric(hi), g_lo = metric(lo);
      const double f_hi = g_hi.inverse()(i, j) * std::sqrt(g_hi.determinant());
      const double f_lo = g_lo.inverse()(i, j) * std::sqrt(g_lo.determinant());
      drift(i) += 0.5 / sqrt_det * (f_hi - f_lo) / (2.0 * h);
    }
  }
  return drift;
}

}  // namespace

TEST_CASE("angle wrapping") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(kTwoPi) == doctest::Approx(0.0));
  CHECK(wrap_angle(-0.1) == doctest::Approx(kTwoPi - 0.1));
  CHECK(wrap_angle(7.0) == doctest::Approx(7.0 - kTwoPi));
  CHECK(angle_distance(0.1, kTwoPi - 0.1) == doctest::Approx(0.2));
  CHECK(angle_distance(1.0, 4.0) == doctest::Approx(3.0));
}

TEST_CASE("embed torus and plane") {
  const auto torus = test_torus();
  Eigen::VectorXd p = embed(torus, Vec2(0.0, 0.0));
  CHECK(p.size() == 3);
  CHECK(p(0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(p(1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p(2) == doctest::Approx(0.0).epsilon(1e-12));

  p = embed(torus, Vec2(M_PI / 2.0, 0.0));
  CHECK(p(0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(p(1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p(2) == doctest::Approx(1.0).epsilon(1e-12));

  const auto plane = testing::unbounded_plane();
  p = embed(plane, Vec2(0.3, -1.2));
  CHECK(p.size() == 2);
  CHECK(p(0) == 0.3);
  CHECK(p(1) == -1.2);
}

TEST_CASE("embed rejects chart-domain violations") {
  const auto torus = test_torus(3.0, 3.3);
  CHECK_THROWS_AS(embed(torus, Vec2(0.0, 3.1)), DomainError);
  const auto plane = testing::unbounded_plane(1.0);
  CHECK_THROWS_AS(embed(plane, Vec2(5.0, 0.0)), DomainError);
}

TEST_CASE("metric tensor closed forms") {
  const auto torus = test_torus();
  MetricTensor m = metric_tensor(torus, Vec2(0.0, 1.0));
  CHECK(m.g(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m.g(1, 1) == doctest::Approx(9.0).epsilon(1e-14));
  CHECK(m.g(0, 1) == 0.0);
  CHECK(m.det_g == doctest::Approx(9.0).epsilon(1e-14));

  m = metric_tensor(torus, Vec2(M_PI / 2.0, 1.0));
  CHECK(m.g(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.g(1, 1) == doctest::Approx(4.0).epsilon(1e-12));

  const auto plane = testing::unbounded_plane();
  m = metric_tensor(plane, Vec2(0.7, -4.0));
  CHECK(m.g.isIdentity(0.0));
  CHECK(m.inv_g.isIdentity(0.0));
  CHECK(m.det_g == 1.0);
}

TEST_CASE("metric inverse and positive definiteness at random points") {
  const auto torus = test_torus();
  Splitmix64 rng(11);
  for (int rep = 0; rep < 100; ++rep) {
    const Vec2 x(rng.uniform() * kTwoPi, rng.uniform() * kTwoPi);
    const MetricTensor m = metric_tensor(torus, x);
    CHECK((m.inv_g * m.g - Mat2::Identity()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((m.g - m.g.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(Eigen::LLT<Mat2>(m.g).info() == Eigen::Success);
    CHECK(m.det_g > 0.0);
  }
}

TEST_CASE("embedding Jacobian reproduces the metric") {
  const auto torus = test_torus();
  Splitmix64 rng(12);
  for (int rep = 0; rep < 25; ++rep) {
    const Vec2 x(rng.uniform() * kTwoPi, 0.3 + rng.uniform() * 5.0);
    const Mat2 fd = fd_metric(torus, x);
    const Mat2 exact = metric_tensor(torus, x).g;
    CHECK((fd - exact).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("SDE coefficients: plane and torus closed forms") {
  const auto plane = testing::unbounded_plane();
  SdeCoefficients c = sde_coefficients(plane, Vec2(0.2, 0.4));
  CHECK(c.drift.norm() == 0.0);
  CHECK(c.diffusion.isIdentity(0.0));

  const auto torus = test_torus();
  c = sde_coefficients(torus, Vec2(0.0, 0.5));
  CHECK(c.drift.cwiseAbs().maxCoeff() < 1e-14);
  CHECK(c.diffusion(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.diffusion(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(std::fabs(c.diffusion(0, 1)) < 1e-14);

  c = sde_coefficients(torus, Vec2(M_PI / 2.0, 0.5));
  CHECK(c.drift(0) == doctest::Approx(-0.25).epsilon(1e-10));
  CHECK(c.drift(1) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("generic SDE drift matches finite differences") {
  const auto torus = test_torus();
  Splitmix64 rng(13);
  for (int rep = 0; rep < 10; ++rep) {
    const Vec2 x(rng.uniform() * kTwoPi, rng.uniform() * kTwoPi);
    const SdeCoefficients c = sde_coefficients(torus, x);
    const Vec2 fd = fd_torus_drift(2.0, 1.0, x);
    CHECK((c.drift - fd).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("generic SDE equals the closed form at 100 random points") {
  const auto torus = test_torus();
  Splitmix64 rng(14);
  for (int rep = 0; rep < 100; ++rep) {
    const Vec2 x(rng.uniform() * kTwoPi, rng.uniform() * kTwoPi);
    const SdeCoefficients generic = sde_coefficients(torus, x);
    const SdeCoefficients closed = torus_sde_closed_form(torus.torus_spec(), x.x());
    CHECK((generic.drift - closed.drift).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((generic.diffusion - closed.diffusion).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("containment on the horseshoe and torus") {
  const Problem ushape = ushape_problem();
  CHECK(contains(ushape.spec, Vec2(1.5, -1.0)));   // lower arm
  CHECK(!contains(ushape.spec, Vec2(1.5, 0.0)));   // gap between the arms
  CHECK(contains(ushape.spec, Vec2(-1.0, 0.0)));   // bend
  CHECK(!contains(ushape.spec, Vec2(3.5, -1.0)));  // beyond the arm tip
  CHECK(!contains(ushape.spec, Vec2(0.0, 0.0)));   // inner disc

  const auto torus = test_torus(3.0, 3.3);
  CHECK(!contains(torus, Vec2(0.0, 3.1)));
  CHECK(contains(torus, Vec2(0.0, 2.9)));
  CHECK(contains(torus, Vec2(0.0, 3.4)));
  CHECK(contains(torus, Vec2(0.0, 3.0)));  // cut face counts interior
}

TEST_CASE("points on or near edges are classified interior") {
  Eigen::Matrix2Xd ring(2, 4);
  ring << 0, 1, 1, 0,
          0, 0, 1, 1;
  const auto spec = ManifoldSpec::plane(PolygonDomain{{ring}});
  CHECK(contains(spec, Vec2(0.5, 0.5)));
  CHECK(contains(spec, Vec2(0.5, 0.0)));          // exactly on the edge
  CHECK(contains(spec, Vec2(0.5, -0.9e-12)));     // within tolerance outside
  CHECK(!contains(spec, Vec2(0.5, -1e-9)));       // clearly outside
  CHECK(contains(spec, Vec2(0.0, 0.0)));          // corner
}

TEST_CASE("containment is stable under tiny perturbations away from edges") {
  const Problem ushape = ushape_problem();
  Splitmix64 rng(15);
  int tested = 0;
  const auto& outer = ushape.spec.plane_spec().boundary.rings[0];
  while (tested < 200) {
    const Vec2 p(-1.5 + 4.5 * rng.uniform(), -1.5 + 3.0 * rng.uniform());
    if (distance_to_ring(outer, p) < 1e-6) continue;
    const bool base = contains(ushape.spec, p);
    for (const Vec2 d : {Vec2(1e-9, 0), Vec2(-1e-9, 0), Vec2(0, 1e-9), Vec2(0, -1e-9)}) {
      CHECK(contains(ushape.spec, p + d) == base);
    }
    ++tested;
  }
}

TEST_CASE("planar domain index agrees with the exact test") {
  const Problem sea = synthetic_sea_problem();
  const PlanarDomainIndex index(sea.spec.plane_spec().boundary);
  Splitmix64 rng(16);
  for (int rep = 0; rep < 20000; ++rep) {
    const Vec2 p(-1.0 + 12.0 * rng.uniform(), -1.0 + 8.0 * rng.uniform());
    CHECK(index.contains(p) == contains(sea.spec, p));
  }
}

TEST_CASE("chart distance wraps theta and respects the bite") {
  const auto torus = test_torus(3.0, 3.6);
  // theta wraps freely
  CHECK(chart_distance(torus, Vec2(0.1, 4.0), Vec2(kTwoPi - 0.1, 4.0)) ==
        doctest::Approx(0.2));
  // phi on opposite sides of the bite: must go the long way around
  const double direct = 0.8;  // raw angular gap across the bite
  const double long_way = kTwoPi - direct;
  CHECK(chart_distance(torus, Vec2(0.0, 2.9), Vec2(0.0, 3.7)) ==
        doctest::Approx(long_way));
  // without a bite the same pair is close
  CHECK(chart_distance(test_torus(), Vec2(0.0, 2.9), Vec2(0.0, 3.7)) ==
        doctest::Approx(direct));
}

TEST_CASE("cell volumes: flat lattice and torus closed form") {
  const auto plane = testing::unbounded_plane();
  const Eigen::Matrix2Xd lattice = testing::square_lattice(0.0, 0.0, 5, 4, 0.1);
  const Eigen::VectorXd flat = cell_volumes(plane, lattice);
  for (int i = 0; i < flat.size(); ++i) CHECK(flat(i) == doctest::Approx(0.01).epsilon(1e-12));

  // uniform torus grid: every point's nearest neighbor sits 0.1 away in phi
  const auto torus = test_torus();
  Eigen::Matrix2Xd grid(2, 8);
  int c = 0;
  for (double theta : {0.0, M_PI / 2.0, M_PI, 3.0 * M_PI / 2.0}) {
    for (double phi : {0.5, 0.6}) {
      grid(0, c) = theta;
      grid(1, c) = phi;
      ++c;
    }
  }
  const double a = 0.1 * 0.1;
  const Eigen::VectorXd volumes = cell_volumes(torus, grid, a);
  CHECK(volumes(0) == doctest::Approx(3.0 * a).epsilon(1e-12));  // sqrt(1 * 9) at theta 0
  CHECK(volumes(4) == doctest::Approx(1.0 * a).epsilon(1e-12));  // (R - r)^2 = 1 at theta pi
}

TEST_CASE("cell volumes reject non-uniform grids") {
  const auto plane = testing::unbounded_plane();
  Eigen::Matrix2Xd grid(2, 3);
  grid << 0.0, 0.1, 0.5,
          0.0, 0.0, 0.0;
  CHECK_THROWS_AS(cell_volumes(plane, grid), GridError);
}

TEST_CASE("polygon validation") {
  Eigen::Matrix2Xd bowtie(2, 4);
  bowtie << 0, 1, 0, 1,
            0, 1, 1, 0;
  CHECK(!ring_is_simple(bowtie));
  CHECK_THROWS_AS(ManifoldSpec::plane(PolygonDomain{{bowtie}}), InputError);

  Eigen::Matrix2Xd cw(2, 3);
  cw << 0, 0, 1,
        0, 1, 0;
  CHECK(ring_signed_area(cw) < 0.0);
  const auto spec = ManifoldSpec::plane(PolygonDomain{{cw}});  // normalized
  CHECK(ring_signed_area(spec.plane_spec().boundary.rings[0]) > 0.0);

  CHECK_THROWS_AS(ManifoldSpec::bitten_torus(1.0, 2.0, 0, 0), InputError);
  CHECK_THROWS_AS(ManifoldSpec::bitten_torus(2.0, 1.0, 0.0, 7.0), InputError);
}

TEST_CASE("holes exclude points but keep their edges interior") {
  Eigen::Matrix2Xd outer(2, 4);
  outer << 0, 4, 4, 0,
           0, 0, 4, 4;
  Eigen::Matrix2Xd hole(2, 4);
  hole << 1, 2, 2, 1,
          1, 1, 2, 2;
  const auto spec = ManifoldSpec::plane(PolygonDomain{{outer, hole}});
  CHECK(contains(spec, Vec2(3.0, 3.0)));
  CHECK(!contains(spec, Vec2(1.5, 1.5)));
  CHECK(contains(spec, Vec2(1.0, 1.5)));  // on the hole edge
}
