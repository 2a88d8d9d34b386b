#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "wmfield/geometry.hpp"
#include "wmfield/quadrature.hpp"
#include "wmfield/rng.hpp"
#include "wmfield/spectral.hpp"

using namespace wmf;

namespace {
constexpr double kPi = 3.14159265358979323846;

Vec3 random_unit(SubStream& s) {
  const double x = s.next_normal();
  const double y = s.next_normal();
  const double z = s.next_normal();
  const double r = std::sqrt(x * x + y * y + z * z);
  return {x / r, y / r, z / r};
}

double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
}  // namespace

TEST_CASE("legendre polynomial examples and explicit forms") {
  CHECK(legendre_p(0, 0.3) == doctest::Approx(1.0));
  CHECK(legendre_p(1, 0.3) == doctest::Approx(0.3));
  CHECK(legendre_p(2, 0.5) == doctest::Approx(-0.125).epsilon(1e-14));
  CHECK_THROWS(legendre_p(2, 1.5));

  for (int i = 0; i <= 99; ++i) {
    const double t = -1.0 + 2.0 * i / 99.0;
    CHECK(legendre_p(2, t) == doctest::Approx(0.5 * (3 * t * t - 1)).epsilon(1e-12));
    CHECK(legendre_p(3, t) == doctest::Approx(0.5 * (5 * t * t * t - 3 * t)).epsilon(1e-12));
    CHECK(legendre_p(4, t) ==
          doctest::Approx((35 * t * t * t * t - 30 * t * t + 3) / 8.0).epsilon(1e-12));
  }
  for (int l : {7, 23, 100}) CHECK(legendre_p(l, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("constant harmonic and degree-one shell sum") {
  const Vec3 p{0.36, -0.48, 0.8};
  CHECK(real_sphere_harmonic(0, 0, p) == doctest::Approx(0.2820948).epsilon(1e-7));

  double shell = 0.0;
  for (int m = -1; m <= 1; ++m) {
    const double y = real_sphere_harmonic(1, m, p);
    shell += y * y;
  }
  CHECK(shell == doctest::Approx(3.0 / (4.0 * kPi)).epsilon(1e-12));
  CHECK_THROWS(real_sphere_harmonic(1, 2, p));
}

TEST_CASE("addition theorem against the brute-force order sum") {
  SubStream s(11, 0);
  for (int pair = 0; pair < 20; ++pair) {
    const Vec3 x = random_unit(s);
    const Vec3 y = random_unit(s);
    const double t = dot(x, y);
    for (int l = 0; l <= 10; ++l) {
      double sum = 0.0;
      for (int m = -l; m <= l; ++m)
        sum += real_sphere_harmonic(l, m, x) * real_sphere_harmonic(l, m, y);
      const double closed = (2.0 * l + 1.0) / (4.0 * kPi) * legendre_p(l, std::clamp(t, -1.0, 1.0));
      CHECK(std::fabs(sum - closed) <= 1e-10);
    }
  }
}

TEST_CASE("basis row agrees with per-harmonic evaluation") {
  SubStream s(13, 0);
  const int L = 12;
  std::vector<double> row((L + 1) * (L + 1));
  for (int trial = 0; trial < 5; ++trial) {
    const Vec3 p = random_unit(s);
    sphere_basis_row(L, p, row);
    for (int l = 0; l <= L; ++l)
      for (int m = -l; m <= l; ++m) {
        const int idx = l * l + l + m;
        CHECK(row[idx] == doctest::Approx(real_sphere_harmonic(l, m, p)).epsilon(1e-12));
      }
  }
}

TEST_CASE("harmonics are orthonormal under surface quadrature") {
  // Gauss-Legendre in cos(theta) x uniform trapezoid in phi integrates
  // band-limited integrands exactly.
  const int gl_order = 64;
  const int n_phi = 128;
  const GaussLegendreRule& rule = gauss_legendre(gl_order);

  auto inner = [&](int l1, int m1, int l2, int m2) {
    double total = 0.0;
    for (int i = 0; i < gl_order; ++i) {
      const double t = rule.nodes[i];
      const double st = std::sqrt(1.0 - t * t);
      double phi_sum = 0.0;
      for (int j = 0; j < n_phi; ++j) {
        const double phi = 2.0 * kPi * j / n_phi;
        const Vec3 p{st * std::cos(phi), st * std::sin(phi), t};
        phi_sum += real_sphere_harmonic(l1, m1, p) * real_sphere_harmonic(l2, m2, p);
      }
      total += rule.weights[i] * phi_sum * (2.0 * kPi / n_phi);
    }
    return total;
  };

  const int cases[][2] = {{0, 0}, {1, 1}, {3, -2}, {9, 5}, {25, -17}, {25, 0}};
  for (const auto& c : cases) {
    CHECK(inner(c[0], c[1], c[0], c[1]) == doctest::Approx(1.0).epsilon(1e-10));
  }
  CHECK(std::fabs(inner(3, -2, 3, 2)) <= 1e-10);
  CHECK(std::fabs(inner(9, 5, 7, 5)) <= 1e-10);
  CHECK(std::fabs(inner(2, 0, 4, 0)) <= 1e-10);
}

TEST_CASE("normalized recurrence stays finite at high degree") {
  // The factorial-quotient normalization is inf/inf at l = 150, m = 150.
  const double naive =
      std::tgamma(2.0 * 150 + 1.0) > 0 ? std::tgamma(300.0 + 1.0) : 0.0;
  CHECK(std::isinf(naive));
  std::vector<double> lam(1);
  normalized_assoc_legendre(150, 150, 0.3, lam);
  CHECK(std::isfinite(lam[0]));
  std::vector<double> lam2(151);
  normalized_assoc_legendre(150, 0, 0.3, lam2);
  for (double v : lam2) CHECK(std::isfinite(v));
}

TEST_CASE("interval eigenfunctions") {
  CHECK(interval_eigenfunction(1, kPi / 2) == doctest::Approx(std::sqrt(2.0 / kPi)).epsilon(1e-14));
  CHECK(interval_eigenfunction(2, kPi / 2) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK_THROWS(interval_eigenfunction(0, 1.0));

  auto cross = [](double x) { return interval_eigenfunction(3, x) * interval_eigenfunction(5, x); };
  CHECK(std::fabs(adaptive_gauss_legendre(cross, 0.0, kPi, 1e-12)) <= 1e-10);
  auto norm3 = [](double x) { const double e = interval_eigenfunction(3, x); return e * e; };
  CHECK(adaptive_gauss_legendre(norm3, 0.0, kPi, 1e-12) == doctest::Approx(1.0).epsilon(1e-10));

  std::vector<double> row(6);
  interval_basis_row(6, 0.71, row);
  for (int i = 1; i <= 6; ++i)
    CHECK(row[i - 1] == doctest::Approx(interval_eigenfunction(i, 0.71)).epsilon(1e-12));
}

TEST_CASE("eigensystem ordering, multiplicity, and index map") {
  const EigenSystem es3 = sphere_eigensystem(3);
  REQUIRE(es3.lambda.size() == 16);
  CHECK(es3.lambda[0] == 0.0);
  for (int i = 1; i <= 3; ++i) CHECK(es3.lambda[i] == 2.0);
  for (int i = 4; i <= 8; ++i) CHECK(es3.lambda[i] == 6.0);
  for (int i = 9; i <= 15; ++i) CHECK(es3.lambda[i] == 12.0);

  const EigenSystem es100 = sphere_eigensystem(100);
  CHECK(es100.lambda.size() == 10201);
  CHECK(es100.lambda.back() == doctest::Approx(100.0 * 101.0));

  for (int i = 1; i <= 400; ++i) {
    const SphereIndex si = sphere_index_lm(i);
    CHECK(si.l * si.l + si.l + si.m + 1 == i);
    CHECK(std::abs(si.m) <= si.l);
    CHECK(es100.lambda[i - 1] == doctest::Approx(static_cast<double>(si.l) * (si.l + 1)));
  }
}

TEST_CASE("weyl ratio bounds") {
  const EigenSystem sphere = sphere_eigensystem(100);
  const WeylBounds wb = weyl_ratio_bounds(sphere, 10201);
  CHECK(wb.lower > 0.0);
  CHECK(wb.upper / wb.lower <= 5.0);
  CHECK(sphere.lambda[1] == doctest::Approx(2.0));  // i = 2 sits in degree one

  const EigenSystem interval = interval_eigensystem(1000);
  const WeylBounds wi = weyl_ratio_bounds(interval, 1000);
  CHECK(wi.lower >= 1.0);
  CHECK(wi.upper <= 2.0);

  const EigenSystem synth = synthetic_weyl_eigensystem(4, 100);
  CHECK(synth.lambda[0] == doctest::Approx(1.0));
  CHECK(synth.lambda[99] == doctest::Approx(10.0));
}
