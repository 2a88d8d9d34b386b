#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "wmfield/quadrature.hpp"
#include "wmfield/rng.hpp"
#include "wmfield/specfun.hpp"

using namespace wmf;

namespace {

// Independent oracle: K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt.
double bessel_k_by_quadrature(double nu, double x) {
  double T = 5.0;
  while (x * std::cosh(T) - nu * T < 720.0 && T < 60.0) T += 1.0;
  auto f = [&](double t) { return std::exp(-x * std::cosh(t)) * std::cosh(nu * t); };
  return adaptive_gauss_legendre(f, 0.0, T, 1e-14);
}

}  // namespace

TEST_CASE("half-integer closed forms") {
  const double pi = 3.14159265358979323846;
  for (double x : {0.05, 0.3, 1.0, 2.0, 7.5, 25.0}) {
    const double k_half = std::sqrt(pi / (2.0 * x)) * std::exp(-x);
    CHECK(bessel_k(0.5, x) == doctest::Approx(k_half).epsilon(1e-12));
    CHECK(bessel_k(1.5, x) == doctest::Approx(k_half * (1.0 + 1.0 / x)).epsilon(1e-12));
    CHECK(bessel_k(2.5, x) ==
          doctest::Approx(k_half * (1.0 + 3.0 / x + 3.0 / (x * x))).epsilon(1e-12));
  }
}

TEST_CASE("quadrature oracle across orders and arguments") {
  for (double nu : {0.0, 0.17, 0.5, 1.0, 2.3, 4.0, 6.75, 10.0}) {
    for (double x : {0.1, 0.6, 1.9, 2.1, 5.0, 14.0, 30.0}) {
      const double ref = bessel_k_by_quadrature(nu, x);
      const double got = bessel_k(nu, x);
      CHECK(got == doctest::Approx(ref).epsilon(1e-9));
    }
  }
}

TEST_CASE("wronskian against an independent I series") {
  for (double nu : {0.0, 0.3, 1.2, 3.7, 8.0}) {
    for (double x : {0.2, 1.0, 3.0, 9.0}) {
      const double w = bessel_i_series(nu, x) * bessel_k(nu + 1.0, x) +
                       bessel_i_series(nu + 1.0, x) * bessel_k(nu, x);
      CHECK(w == doctest::Approx(1.0 / x).epsilon(1e-9));
    }
  }
}

TEST_CASE("scaled value survives high order at small argument") {
  // K_nu(x) ~ Gamma(nu)/2 * (2/x)^nu for x -> 0; the plain double overflows.
  const double nu = 29.0;
  const double x = 1e-6;
  const ScaledBesselK k = bessel_k_scaled(nu, x);
  CHECK(k.value > 0.0);
  CHECK(std::isfinite(k.value));
  const double log_k = std::log(k.value) + k.log_scale;
  const double log_ref = std::lgamma(nu) - std::log(2.0) + nu * std::log(2.0 / x);
  CHECK(log_k == doctest::Approx(log_ref).epsilon(1e-10));
}

TEST_CASE("rejects bad arguments") {
  CHECK_THROWS(bessel_k(-1.0, 1.0));
  CHECK_THROWS(bessel_k(1.0, 0.0));
  CHECK_THROWS(bessel_k(1.0, -2.0));
}

TEST_CASE("fixed gauss-legendre integrates polynomials exactly") {
  auto cubic = [](double x) { return x * x * x + 2.0 * x; };
  CHECK(fixed_gauss_legendre(cubic, 0.0, 1.0, 8) == doctest::Approx(0.25 + 1.0).epsilon(1e-14));
  auto sine = [](double x) { return std::sin(x); };
  CHECK(adaptive_gauss_legendre(sine, 0.0, 3.14159265358979323846, 1e-13) ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("adaptive quadrature is stable under splitting") {
  auto f = [](double x) { return std::exp(-3.0 * x) * std::cos(7.0 * x); };
  const double a = adaptive_gauss_legendre(f, 0.0, 4.0, 1e-12);
  const double b = adaptive_gauss_legendre(f, 0.0, 2.0, 1e-12) +
                   adaptive_gauss_legendre(f, 2.0, 4.0, 1e-12);
  CHECK(a == doctest::Approx(b).epsilon(1e-11));
}

TEST_CASE("substreams are reproducible and independent of order") {
  SubStream s1(42, 7);
  SubStream s2(42, 7);
  for (int i = 0; i < 100; ++i) CHECK(s1.next_u64() == s2.next_u64());

  SubStream a(42, 7), b(42, 8);
  bool differ = false;
  for (int i = 0; i < 10; ++i)
    if (a.next_u64() != b.next_u64()) differ = true;
  CHECK(differ);
}

TEST_CASE("uniform draws stay inside the open unit interval") {
  SubStream s(1, 1);
  for (int i = 0; i < 100000; ++i) {
    const double u = s.next_unit();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal draws have standard moments") {
  const int n = 400000;
  double sum = 0.0, sum2 = 0.0;
  SubStream s(2024, 0);
  for (int i = 0; i < n; ++i) {
    const double z = s.next_normal();
    sum += z;
    sum2 += z * z;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::fabs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::fabs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
}
