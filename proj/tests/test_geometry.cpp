#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "wmfield/geometry.hpp"
#include "wmfield/rng.hpp"

using namespace wmf;

namespace {
constexpr double kPi = 3.14159265358979323846;

Vec3 random_unit(SubStream& s) {
  // Box-Muller triple normalized.
  const double x = s.next_normal();
  const double y = s.next_normal();
  const double z = s.next_normal();
  const double r = std::sqrt(x * x + y * y + z * z);
  return {x / r, y / r, z / r};
}
}  // namespace

TEST_CASE("geodesic distance on the sphere") {
  const Vec3 ex{1, 0, 0}, ey{0, 1, 0}, mex{-1, 0, 0};
  CHECK(geodesic_distance(Domain::sphere, ex, ey) == doctest::Approx(kPi / 2).epsilon(1e-14));
  CHECK(geodesic_distance(Domain::sphere, ex, ex) == doctest::Approx(0.0));
  CHECK(geodesic_distance(Domain::sphere, ex, mex) == doctest::Approx(kPi).epsilon(1e-14));
}

TEST_CASE("triangle inequality on random triples") {
  SubStream s(7, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 a = random_unit(s), b = random_unit(s), c = random_unit(s);
    const double ab = geodesic_distance(Domain::sphere, a, b);
    const double bc = geodesic_distance(Domain::sphere, b, c);
    const double ac = geodesic_distance(Domain::sphere, a, c);
    CHECK(ac <= ab + bc + 1e-10);
  }
}

TEST_CASE("deserno placement counts and degenerate request") {
  CHECK_THROWS(deserno_sphere(0));

  const PointSet one = deserno_sphere(1);
  REQUIRE(one.size() == 1);
  CHECK(one.points[0][2] == doctest::Approx(1.0));

  const PointSet ps = deserno_sphere(1000);
  CHECK(ps.size() >= 900);
  CHECK(ps.size() <= 1100);

  for (int n : {100, 250, 500, 2000}) {
    const PointSet p = deserno_sphere(n);
    CHECK(std::fabs(static_cast<double>(p.size()) - n) <= 0.1 * n);
  }
}

TEST_CASE("deserno points lie on the unit sphere, pairwise distinct") {
  const PointSet ps = deserno_sphere(300);
  for (const Vec3& p : ps.points) {
    const double norm = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
  }
  const DesignDiagnostics d = design_diagnostics(ps, 10 * static_cast<int>(ps.size()));
  CHECK(d.separation > 0.0);
}

TEST_CASE("uniform interval grids") {
  CHECK_THROWS(uniform_grid_interval(0));

  const PointSet one = uniform_grid_interval(1);
  REQUIRE(one.size() == 1);
  CHECK(one.points[0][0] == doctest::Approx(kPi / 2).epsilon(1e-14));

  const PointSet three = uniform_grid_interval(3);
  REQUIRE(three.size() == 3);
  CHECK(three.points[0][0] == doctest::Approx(kPi / 4).epsilon(1e-14));
  CHECK(three.points[1][0] == doctest::Approx(kPi / 2).epsilon(1e-14));
  CHECK(three.points[2][0] == doctest::Approx(3 * kPi / 4).epsilon(1e-14));
}

TEST_CASE("interval diagnostics include the boundary") {
  const PointSet ps = uniform_grid_interval(9);
  const DesignDiagnostics d = design_diagnostics(ps, 200);
  // Grid spacing pi/10: fill is attained at the boundary, separation is
  // boundary-capped to pi/20.
  CHECK(d.fill == doctest::Approx(kPi / 10).epsilon(1e-12));
  CHECK(d.separation == doctest::Approx(kPi / 20).epsilon(1e-12));
  CHECK(d.mesh_ratio == doctest::Approx(2.0).epsilon(1e-12));

  for (int n : {5, 17, 40}) {
    const DesignDiagnostics dn = design_diagnostics(uniform_grid_interval(n), 40 * n);
    CHECK(dn.separation == doctest::Approx(kPi / (2.0 * (n + 1))).epsilon(1e-12));
  }
}

TEST_CASE("antipodal pair diagnostics") {
  PointSet ps;
  ps.domain = Domain::sphere;
  ps.points = {{0, 0, 1}, {0, 0, -1}};
  const DesignDiagnostics d = design_diagnostics(ps, 4000);
  CHECK(d.separation == doctest::Approx(kPi / 2).epsilon(1e-12));
  CHECK(d.fill == doctest::Approx(kPi / 2).epsilon(0.05));
}

TEST_CASE("diagnostics argument checking") {
  PointSet single;
  single.points = {{0, 0, 1}};
  CHECK_THROWS(design_diagnostics(single, 100));

  PointSet dup;
  dup.points = {{0, 0, 1}, {0, 0, 1}};
  CHECK_THROWS(design_diagnostics(dup, 100));

  CHECK_THROWS(design_diagnostics(deserno_sphere(100), 200));  // resolution too coarse
}

TEST_CASE("quasi-uniform scaling of deserno designs") {
  double h100 = 0.0, h400 = 0.0, h1600 = 0.0;
  for (int n : {100, 400, 1600}) {
    const PointSet ps = deserno_sphere(n);
    const DesignDiagnostics d = design_diagnostics(ps, 10 * static_cast<int>(ps.size()));
    CHECK(d.mesh_ratio <= 3.0);
    CHECK(d.mesh_ratio >= 1.0 - 1e-9);
    const double scaled = d.fill * std::sqrt(static_cast<double>(n));
    if (n == 100) h100 = scaled;
    if (n == 400) h400 = scaled;
    if (n == 1600) h1600 = scaled;
  }
  const double lo = std::min({h100, h400, h1600});
  const double hi = std::max({h100, h400, h1600});
  CHECK(hi / lo < 2.0);
}

TEST_CASE("fill estimate is stable under candidate refinement") {
  const PointSet ps = deserno_sphere(400);
  const int n = static_cast<int>(ps.size());
  const double h10 = design_diagnostics(ps, 10 * n).fill;
  const double h40 = design_diagnostics(ps, 40 * n).fill;
  CHECK(h40 >= h10 * 0.999);
  CHECK(h40 <= h10 * 1.10);
}
