#include "wmfield/specfun.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace wmf {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxIter = 20000;

// Renormalisation threshold for the upward recurrence in nu.
constexpr double kBig = 1e250;
constexpr double kLogBig = 575.6462732485114;  // log(1e250)

// 1/Gamma(1+mu) and 1/Gamma(1-mu) combinations needed by the Temme series.
// gam1 = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu), continuous at mu = 0.
void temme_gammas(double mu, double& gam1, double& gam2, double& gampl,
                  double& gammi) {
  gampl = 1.0 / std::tgamma(1.0 + mu);
  gammi = 1.0 / std::tgamma(1.0 - mu);
  if (std::fabs(mu) < 1e-5) {
    // 1/Gamma(1+x) = 1 + g1 x + g2 x^2 + g3 x^3 + ..., odd part gives gam1.
    const double g1 = 0.5772156649015329;    // Euler-Mascheroni
    const double g3 = -0.04200263503409524;  // cubic coefficient
    gam1 = -(g1 + g3 * mu * mu);
  } else {
    gam1 = (gammi - gampl) / (2.0 * mu);
  }
  gam2 = 0.5 * (gammi + gampl);
}

// Temme's series for K_mu(x), K_{mu+1}(x), valid for x <= 2, |mu| <= 1/2.
void bessel_k_temme(double mu, double x, double& kmu, double& kmu1) {
  const double x2 = 0.5 * x;
  const double pimu = kPi * mu;
  const double fact = (std::fabs(pimu) < kEps) ? 1.0 : pimu / std::sin(pimu);
  double d = -std::log(x2);
  double e = mu * d;
  const double fact2 = (std::fabs(e) < kEps) ? 1.0 : std::sinh(e) / e;
  double gam1, gam2, gampl, gammi;
  temme_gammas(mu, gam1, gam2, gampl, gammi);
  double ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
  double sum = ff;
  e = std::exp(e);
  double p = 0.5 * e / gampl;
  double q = 0.5 / (e * gammi);
  double c = 1.0;
  d = x2 * x2;
  double sum1 = p;
  int i = 1;
  for (; i <= kMaxIter; ++i) {
    ff = (i * ff + p + q) / (i * i - mu * mu);
    c *= d / i;
    p /= (i - mu);
    q /= (i + mu);
    const double del = c * ff;
    sum += del;
    const double del1 = c * (p - i * ff);
    sum1 += del1;
    if (std::fabs(del) < std::fabs(sum) * kEps) break;
  }
  if (i > kMaxIter) throw std::runtime_error("bessel_k: series failed to converge");
  kmu = sum;
  kmu1 = sum1 * (2.0 / x);
}

// Steed's continued fraction CF2 for x > 2: returns e^x K_mu(x), e^x K_{mu+1}(x).
void bessel_k_cf2(double mu, double x, double& kmu, double& kmu1) {
  const double a1 = 0.25 - mu * mu;
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0;
  double q2 = 1.0;
  double a = -a1;
  double q = a1;
  double c = a1;
  double s = 1.0 + q * delh;
  int i = 2;
  for (; i <= kMaxIter; ++i) {
    a -= 2 * (i - 1);
    c = -a * c / i;
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::fabs(dels / s) < kEps) break;
  }
  if (i > kMaxIter) throw std::runtime_error("bessel_k: continued fraction failed to converge");
  h = a1 * h;
  kmu = std::sqrt(kPi / (2.0 * x)) / s;  // e^x K_mu(x)
  kmu1 = kmu * (mu + x + 0.5 - h) / x;
}

}  // namespace

ScaledBesselK bessel_k_scaled(double nu, double x) {
  if (!(nu >= 0.0) || !(x > 0.0))
    throw std::invalid_argument("bessel_k: requires nu >= 0 and x > 0");

  ScaledBesselK out;
  double kmu, kmu1;  // K_m, K_{m+1} for the starting order m
  double m;
  int steps;

  const double twice = 2.0 * nu;
  if (twice == std::floor(twice) && std::floor(nu) != nu) {
    // Half-integer order: K_{1/2}(x) = sqrt(pi/(2x)) e^{-x} exactly.
    kmu = std::sqrt(kPi / (2.0 * x));
    kmu1 = kmu * (1.0 + 1.0 / x);
    out.log_scale = -x;
    m = 0.5;
    steps = static_cast<int>(std::lround(nu - 0.5));
  } else {
    steps = static_cast<int>(std::floor(nu + 0.5));
    m = nu - steps;  // |m| <= 1/2
    if (x <= 2.0) {
      bessel_k_temme(m, x, kmu, kmu1);
      out.log_scale = 0.0;
    } else {
      bessel_k_cf2(m, x, kmu, kmu1);
      out.log_scale = -x;
    }
  }

  // K_{m+2} = (2(m+1)/x) K_{m+1} + K_m; after `steps` advances kmu = K_nu.
  for (int j = 0; j < steps; ++j) {
    const double knext = kmu + (2.0 * (m + 1.0) / x) * kmu1;
    kmu = kmu1;
    kmu1 = knext;
    m += 1.0;
    if (kmu1 > kBig) {
      kmu /= kBig;
      kmu1 /= kBig;
      out.log_scale += kLogBig;
    }
  }
  out.value = kmu;
  return out;
}

double bessel_k(double nu, double x) {
  const ScaledBesselK k = bessel_k_scaled(nu, x);
  return k.value * std::exp(k.log_scale);
}

double bessel_i_series(double nu, double x) {
  if (!(nu >= 0.0) || !(x >= 0.0))
    throw std::invalid_argument("bessel_i_series: requires nu >= 0 and x >= 0");
  if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
  // I_nu(x) = sum_k (x/2)^{nu+2k} / (k! Gamma(nu+k+1))
  const double q = 0.25 * x * x;
  double term = std::exp(nu * std::log(0.5 * x) - std::lgamma(nu + 1.0));
  double sum = term;
  for (int k = 1; k <= kMaxIter; ++k) {
    term *= q / (k * (nu + k));
    sum += term;
    if (term < sum * kEps) return sum;
  }
  throw std::runtime_error("bessel_i_series: failed to converge");
}

}  // namespace wmf
