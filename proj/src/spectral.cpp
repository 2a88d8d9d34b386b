#include "wmfield/spectral.hpp"

#include <cmath>
#include <stdexcept>

namespace wmf {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kInvSqrt4Pi = 0.28209479177387814;  // 1/sqrt(4 pi)
}  // namespace

EigenSystem sphere_eigensystem(int max_degree) {
  if (max_degree < 0) throw std::invalid_argument("sphere_eigensystem: max_degree must be >= 0");
  EigenSystem es;
  es.dimension = 2;
  es.lambda.reserve((max_degree + 1) * (max_degree + 1));
  for (int l = 0; l <= max_degree; ++l)
    for (int m = -l; m <= l; ++m) es.lambda.push_back(static_cast<double>(l) * (l + 1));
  return es;
}

EigenSystem interval_eigensystem(int max_mode) {
  if (max_mode < 1) throw std::invalid_argument("interval_eigensystem: max_mode must be >= 1");
  EigenSystem es;
  es.dimension = 1;
  es.lambda.reserve(max_mode);
  for (int i = 1; i <= max_mode; ++i) es.lambda.push_back(static_cast<double>(i) * i);
  return es;
}

EigenSystem synthetic_weyl_eigensystem(int dimension, int count) {
  if (dimension < 1) throw std::invalid_argument("synthetic_weyl_eigensystem: dimension must be >= 1");
  if (count < 1) throw std::invalid_argument("synthetic_weyl_eigensystem: count must be >= 1");
  EigenSystem es;
  es.dimension = dimension;
  es.lambda.reserve(count);
  for (int i = 1; i <= count; ++i)
    es.lambda.push_back(std::pow(static_cast<double>(i), 2.0 / dimension));
  return es;
}

SphereIndex sphere_index_lm(int i) {
  if (i < 1) throw std::invalid_argument("sphere_index_lm: index must be >= 1");
  const int l = static_cast<int>(std::floor(std::sqrt(static_cast<double>(i - 1))));
  const int m = i - 1 - l * l - l;
  return SphereIndex{l, m};
}

double legendre_p(int l, double t) {
  if (l < 0) throw std::invalid_argument("legendre_p: degree must be >= 0");
  if (std::fabs(t) > 1.0) throw std::invalid_argument("legendre_p: |t| must be <= 1");
  if (l == 0) return 1.0;
  double pm1 = 1.0;
  double p = t;
  for (int j = 1; j < l; ++j) {
    const double pnext = ((2.0 * j + 1.0) * t * p - j * pm1) / (j + 1.0);
    pm1 = p;
    p = pnext;
  }
  return p;
}

void legendre_p_row(int max_degree, double t, std::span<double> out) {
  if (max_degree < 0) throw std::invalid_argument("legendre_p_row: degree must be >= 0");
  if (std::fabs(t) > 1.0) throw std::invalid_argument("legendre_p_row: |t| must be <= 1");
  if (out.size() < static_cast<std::size_t>(max_degree + 1))
    throw std::invalid_argument("legendre_p_row: output span too small");
  out[0] = 1.0;
  if (max_degree == 0) return;
  out[1] = t;
  for (int j = 1; j < max_degree; ++j)
    out[j + 1] = ((2.0 * j + 1.0) * t * out[j] - j * out[j - 1]) / (j + 1.0);
}

void normalized_assoc_legendre(int max_degree, int m, double t, std::span<double> out) {
  if (m < 0 || m > max_degree)
    throw std::invalid_argument("normalized_assoc_legendre: need 0 <= m <= max_degree");
  if (std::fabs(t) > 1.0)
    throw std::invalid_argument("normalized_assoc_legendre: |t| must be <= 1");
  if (out.size() < static_cast<std::size_t>(max_degree - m + 1))
    throw std::invalid_argument("normalized_assoc_legendre: output span too small");

  const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
  // Lambda_m^m = sqrt((2m+1)!!/(4 pi (2m)!!)) s^m, built up one factor at a time.
  double pmm = kInvSqrt4Pi;
  for (int k = 1; k <= m; ++k)
    pmm *= std::sqrt((2.0 * k + 1.0) / (2.0 * k)) * s;
  out[0] = pmm;
  if (max_degree == m) return;
  double plm1 = pmm;
  double pl = t * std::sqrt(2.0 * m + 3.0) * pmm;  // Lambda_{m+1}^m
  out[1] = pl;
  for (int l = m + 2; l <= max_degree; ++l) {
    const double fl = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
    const double flm1 =
        std::sqrt((4.0 * (l - 1.0) * (l - 1.0) - 1.0) /
                  ((l - 1.0) * (l - 1.0) - static_cast<double>(m) * m));
    const double pnext = (t * pl - plm1 / flm1) * fl;
    plm1 = pl;
    pl = pnext;
    out[l - m] = pl;
  }
}

double real_sphere_harmonic(int l, int m, const Vec3& p) {
  if (std::abs(m) > l) throw std::invalid_argument("real_sphere_harmonic: need |m| <= l");
  const int am = std::abs(m);
  const double t = p[2];
  std::vector<double> lam(l - am + 1);
  normalized_assoc_legendre(l, am, t, lam);
  const double base = lam[l - am];
  if (m == 0) return base;
  const double phi = std::atan2(p[1], p[0]);
  const double sqrt2 = 1.4142135623730951;
  return m > 0 ? sqrt2 * base * std::cos(am * phi) : sqrt2 * base * std::sin(am * phi);
}

void sphere_basis_row(int max_degree, const Vec3& p, std::span<double> out) {
  const int L = max_degree;
  const std::size_t count = static_cast<std::size_t>(L + 1) * (L + 1);
  if (out.size() < count) throw std::invalid_argument("sphere_basis_row: output span too small");
  const double t = p[2];
  const double phi = std::atan2(p[1], p[0]);
  const double cphi = std::cos(phi);
  const double sphi = std::sin(phi);
  const double sqrt2 = 1.4142135623730951;

  std::vector<double> lam(L + 1);
  // cos(m phi), sin(m phi) advanced by rotation as m grows.
  double cm = 1.0, sm = 0.0;
  for (int m = 0; m <= L; ++m) {
    if (m > 0) {
      const double c = cm * cphi - sm * sphi;
      const double s = sm * cphi + cm * sphi;
      cm = c;
      sm = s;
    }
    normalized_assoc_legendre(L, m, t, lam);
    for (int l = m; l <= L; ++l) {
      const std::size_t base = static_cast<std::size_t>(l) * l + l;  // (l, 0)
      const double v = lam[l - m];
      if (m == 0) {
        out[base] = v;
      } else {
        out[base + m] = sqrt2 * v * cm;
        out[base - m] = sqrt2 * v * sm;
      }
    }
  }
}

double interval_eigenfunction(int i, double x) {
  if (i < 1) throw std::invalid_argument("interval_eigenfunction: index must be >= 1");
  return std::sqrt(2.0 / kPi) * std::sin(i * x);
}

void interval_basis_row(int max_mode, double x, std::span<double> out) {
  if (out.size() < static_cast<std::size_t>(max_mode))
    throw std::invalid_argument("interval_basis_row: output span too small");
  // sin(i x) by rotation recurrence.
  const double c1 = std::cos(x);
  const double s1 = std::sin(x);
  double c = 1.0, s = 0.0;
  const double norm = std::sqrt(2.0 / kPi);
  for (int i = 1; i <= max_mode; ++i) {
    const double cn = c * c1 - s * s1;
    const double sn = s * c1 + c * s1;
    c = cn;
    s = sn;
    out[i - 1] = norm * s;
  }
}

WeylBounds weyl_ratio_bounds(const EigenSystem& es, int n) {
  if (n < 10) throw std::invalid_argument("weyl_ratio_bounds: need n >= 10");
  if (static_cast<std::size_t>(n) > es.lambda.size())
    throw std::invalid_argument("weyl_ratio_bounds: n exceeds eigensystem size");
  const int start = es.lambda[0] > 0.0 ? 1 : 2;
  WeylBounds wb{1e300, 0.0};
  for (int i = start; i <= n; ++i) {
    const double ratio =
        (1.0 + es.lambda[i - 1]) / std::pow(static_cast<double>(i), 2.0 / es.dimension);
    wb.lower = std::min(wb.lower, ratio);
    wb.upper = std::max(wb.upper, ratio);
  }
  return wb;
}

}  // namespace wmf
