#include "wmfield/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "wmfield/quadrature.hpp"
#include "wmfield/specfun.hpp"
#include "wmfield/spectral.hpp"

namespace wmf {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInv4Pi = 0.07957747154594767;

double intrinsic_dim(Domain domain) { return domain == Domain::sphere ? 2.0 : 1.0; }

void validate_spectral(const SpectralParams& p, Domain domain) {
  if (!(p.s > 0.5 * intrinsic_dim(domain)))
    throw std::invalid_argument("spectral params: need s > d/2");
  if (!(p.tau > 0.0)) throw std::invalid_argument("spectral params: need tau > 0");
  if (!(p.sigma2 > 0.0)) throw std::invalid_argument("spectral params: need sigma2 > 0");
}

// sum_{l=0}^{L} (tau + l(l+1))^{-s} (2l+1)/(4pi), summed smallest-first.
double sphere_diagonal_sum(double s, double tau, int L) {
  double acc = 0.0;
  for (int l = L; l >= 0; --l)
    acc += std::pow(tau + l * (l + 1.0), -s) * (2.0 * l + 1.0);
  return acc * kInv4Pi;
}

// Addition-theorem collapsed series at cosine t, without sigma2 or v(theta).
double sphere_series_at_cos(double s, double tau, int L, double t) {
  double acc = std::pow(tau, -s);  // l = 0, P_0 = 1
  if (L >= 1) {
    double pm1 = 1.0;
    double pl = t;
    acc += std::pow(tau + 2.0, -s) * 3.0 * t;
    for (int l = 2; l <= L; ++l) {
      const double pnext = ((2.0 * l - 1.0) * t * pl - (l - 1.0) * pm1) / l;
      pm1 = pl;
      pl = pnext;
      acc += std::pow(tau + l * (l + 1.0), -s) * (2.0 * l + 1.0) * pl;
    }
  }
  return acc * kInv4Pi;
}

double interval_series(double s, double tau, int L, double x, double y) {
  double acc = 0.0;
  for (int i = L; i >= 1; --i)
    acc += std::pow(tau + static_cast<double>(i) * i, -s) *
           interval_eigenfunction(i, x) * interval_eigenfunction(i, y);
  return acc;
}

double clamped_cos(const Vec3& a, const Vec3& b) {
  if (a == b) return 1.0;
  const double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  return std::clamp(dot, -1.0, 1.0);
}

void validate_wendland(double kappa, double mu, double beta, double sigma2) {
  if (!(kappa > 0.0)) throw std::invalid_argument("wendland: need kappa > 0");
  if (!(mu >= kappa + 1.0))
    throw std::invalid_argument("wendland: mu below the validity threshold");
  if (!(beta > 0.0)) throw std::invalid_argument("wendland: need beta > 0");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("wendland: need sigma2 > 0");
}

// Covariance as a function of chordal distance; spectral models admit such a
// curve on the sphere only.
double curve_value(const KernelModel& model, Domain domain, double r) {
  if (const auto* ts = std::get_if<TruncatedSpectral>(&model)) {
    if (domain != Domain::sphere)
      throw std::invalid_argument(
          "fit_auxiliary_parameters: spectral curve needs the sphere");
    validate_spectral(ts->params, domain);
    const double t = std::clamp(1.0 - 0.5 * r * r, -1.0, 1.0);
    const double v = normalization_value(ts->params, domain, ts->truncation);
    return ts->params.sigma2 * v *
           sphere_series_at_cos(ts->params.s, ts->params.tau, ts->truncation, t);
  }
  if (const auto* em = std::get_if<EuclideanMatern>(&model))
    return matern_eval(em->nu, em->tau, em->sigma2, r);
  const auto& gw = std::get<GeneralizedWendland>(model);
  return wendland_eval(gw.kappa, gw.mu, gw.beta, gw.sigma2, r);
}

// Rebuild of `model` with unit magnitude and the given scale parameter.
KernelModel with_scale(const KernelModel& family, double scale) {
  KernelModel m = family;
  if (auto* ts = std::get_if<TruncatedSpectral>(&m)) {
    ts->params.tau = scale;
    ts->params.sigma2 = 1.0;
  } else if (auto* em = std::get_if<EuclideanMatern>(&m)) {
    em->tau = scale;
    em->sigma2 = 1.0;
  } else {
    auto& gw = std::get<GeneralizedWendland>(m);
    gw.beta = scale;
    gw.sigma2 = 1.0;
  }
  return m;
}

struct ScaleFit {
  double sigma2 = 0.0;
  double ssr = 0.0;
};

// Profile sigma2 out of the least-squares problem at a fixed scale.
ScaleFit fit_at_scale(const KernelModel& family, Domain domain, double scale,
                      std::span<const double> grid, const std::vector<double>& target) {
  const KernelModel m = with_scale(family, scale);
  double ff = 0.0;
  double fg = 0.0;
  std::vector<double> f(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    f[j] = curve_value(m, domain, grid[j]);
    ff += f[j] * f[j];
    fg += f[j] * target[j];
  }
  ScaleFit out;
  if (ff <= 0.0) {
    out.sigma2 = 0.0;
    for (double g : target) out.ssr += g * g;
    return out;
  }
  out.sigma2 = std::max(fg / ff, 1e-300);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double d = out.sigma2 * f[j] - target[j];
    out.ssr += d * d;
  }
  return out;
}

}  // namespace

double normalization_value(const SpectralParams& p, Domain domain, int truncation) {
  validate_spectral(p, domain);
  if (truncation < 0)
    throw std::invalid_argument("normalization_value: truncation must be >= 0");
  switch (p.norm) {
    case NormalizationKind::none:
      return 1.0;
    case NormalizationKind::power:
      return std::pow(p.tau, -p.s + 0.5 * intrinsic_dim(domain));
    case NormalizationKind::unit_diagonal: {
      if (domain != Domain::sphere)
        throw std::invalid_argument(
            "normalization_value: unit_diagonal needs a constant diagonal (sphere)");
      return 1.0 / sphere_diagonal_sum(p.s, p.tau, truncation);
    }
  }
  throw std::invalid_argument("normalization_value: unknown kind");
}

double spectral_kernel_eval(const SpectralParams& p, int truncation, Domain domain,
                            const Vec3& a, const Vec3& b) {
  validate_spectral(p, domain);
  if (truncation < 0)
    throw std::invalid_argument("spectral_kernel_eval: truncation must be >= 0");
  const double v = normalization_value(p, domain, truncation);
  if (domain == Domain::sphere)
    return p.sigma2 * v * sphere_series_at_cos(p.s, p.tau, truncation, clamped_cos(a, b));
  return p.sigma2 * v * interval_series(p.s, p.tau, truncation, a[0], b[0]);
}

double spectral_truncation_tail(const SpectralParams& p, Domain domain, int truncation) {
  if (truncation < 0)
    throw std::invalid_argument("spectral_truncation_tail: truncation must be >= 0");
  if (!(p.tau > 0.0)) throw std::invalid_argument("spectral_truncation_tail: need tau > 0");
  const int kExact = 4000;  // summed term by term before the integral bound
  if (domain == Domain::sphere) {
    if (!(p.s > 1.0))
      throw std::invalid_argument("spectral_truncation_tail: diagonal series diverges");
    double acc = 0.0;
    for (int l = truncation + kExact; l > truncation; --l)
      acc += std::pow(p.tau + l * (l + 1.0), -p.s) * (2.0 * l + 1.0);
    const double a = truncation + kExact + 0.5;
    acc += std::pow(p.tau + a * (a + 1.0), 1.0 - p.s) / (p.s - 1.0);
    return acc * kInv4Pi;
  }
  if (!(p.s > 0.5))
    throw std::invalid_argument("spectral_truncation_tail: diagonal series diverges");
  double acc = 0.0;
  for (int i = truncation + kExact; i > truncation; --i)
    acc += std::pow(p.tau + static_cast<double>(i) * i, -p.s);
  const double a = truncation + kExact + 0.5;
  acc += std::pow(a, 1.0 - 2.0 * p.s) / (2.0 * p.s - 1.0);
  return acc * 2.0 / kPi;
}

double matern_eval(double nu, double tau, double sigma2, double r) {
  if (!(nu > 0.0)) throw std::invalid_argument("matern_eval: need nu > 0");
  if (!(tau > 0.0)) throw std::invalid_argument("matern_eval: need tau > 0");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("matern_eval: need sigma2 > 0");
  if (r < 0.0) throw std::invalid_argument("matern_eval: need r >= 0");
  if (r == 0.0) return sigma2;
  const double x = std::sqrt(tau) * r;
  const ScaledBesselK k = bessel_k_scaled(nu, x);
  const double log_value = (1.0 - nu) * std::log(2.0) - std::lgamma(nu) +
                           nu * std::log(x) + std::log(k.value) + k.log_scale;
  return sigma2 * std::exp(log_value);
}

double wendland_eval(double kappa, double mu, double beta, double sigma2, double r) {
  validate_wendland(kappa, mu, beta, sigma2);
  if (r < 0.0) throw std::invalid_argument("wendland_eval: need r >= 0");
  const double z = r / beta;
  if (z >= 1.0) return 0.0;
  const double prefactor =
      sigma2 * std::exp((1.0 - kappa) * std::log(2.0) - std::lgamma(kappa));
  double integral;
  if (kappa >= 1.0) {
    integral = adaptive_gauss_legendre(
        [&](double u) {
          return u * std::pow(u * u - z * z, kappa - 1.0) * std::pow(1.0 - u, mu);
        },
        z, 1.0, 1e-12);
  } else {
    // u = z + w^{1/kappa} absorbs the (u-z)^{kappa-1} endpoint singularity:
    // (u-z)^{kappa-1} du = dw / kappa exactly.
    const double w_top = std::pow(1.0 - z, kappa);
    integral = adaptive_gauss_legendre(
        [&](double w) {
          const double u = std::min(z + std::pow(w, 1.0 / kappa), 1.0);
          return u * std::pow(u + z, kappa - 1.0) * std::pow(1.0 - u, mu) / kappa;
        },
        0.0, w_top, 1e-12);
  }
  return prefactor * integral;
}

double kernel_eval(const KernelModel& model, Domain domain, const Vec3& a, const Vec3& b) {
  if (const auto* ts = std::get_if<TruncatedSpectral>(&model))
    return spectral_kernel_eval(ts->params, ts->truncation, domain, a, b);
  if (const auto* em = std::get_if<EuclideanMatern>(&model))
    return matern_eval(em->nu, em->tau, em->sigma2, chordal_distance(domain, a, b));
  const auto& gw = std::get<GeneralizedWendland>(model);
  // positive definiteness on this domain needs mu >= kappa + (d+1)/2
  if (!(gw.mu >= gw.kappa + 0.5 * (intrinsic_dim(domain) + 1.0)))
    throw std::invalid_argument("kernel_eval: wendland mu below the domain threshold");
  return wendland_eval(gw.kappa, gw.mu, gw.beta, gw.sigma2,
                       chordal_distance(domain, a, b));
}

SpectralGramBuilder::SpectralGramBuilder(const PointSet& ps, int truncation)
    : domain_(ps.domain), n_(static_cast<int>(ps.size())), truncation_(truncation) {
  if (n_ < 1) throw std::invalid_argument("SpectralGramBuilder: empty design");
  if (truncation_ < 0)
    throw std::invalid_argument("SpectralGramBuilder: truncation must be >= 0");
  if (domain_ == Domain::sphere) {
    cosines_.resize(n_, n_);
    for (int i = 0; i < n_; ++i) {
      cosines_(i, i) = 1.0;
      for (int j = i + 1; j < n_; ++j) {
        const double t = clamped_cos(ps.points[i], ps.points[j]);
        cosines_(i, j) = t;
        cosines_(j, i) = t;
      }
    }
  } else {
    basis_.resize(n_, truncation_);
    std::vector<double> row(truncation_);
    for (int i = 0; i < n_; ++i) {
      interval_basis_row(truncation_, ps.points[i][0], row);
      for (int k = 0; k < truncation_; ++k) basis_(i, k) = row[k];
    }
  }
}

Eigen::MatrixXd SpectralGramBuilder::build(const SpectralParams& p) const {
  validate_spectral(p, domain_);
  const double amp = p.sigma2 * normalization_value(p, domain_, truncation_);
  Eigen::MatrixXd gram(n_, n_);
  if (domain_ == Domain::sphere) {
    std::vector<double> weight(truncation_ + 1);
    for (int l = 0; l <= truncation_; ++l)
      weight[l] = amp * std::pow(p.tau + l * (l + 1.0), -p.s) * (2.0 * l + 1.0) * kInv4Pi;
    for (int i = 0; i < n_; ++i) {
      for (int j = i; j < n_; ++j) {
        const double t = cosines_(i, j);
        double acc = weight[0];
        if (truncation_ >= 1) {
          double pm1 = 1.0;
          double pl = t;
          acc += weight[1] * t;
          for (int l = 2; l <= truncation_; ++l) {
            const double pnext = ((2.0 * l - 1.0) * t * pl - (l - 1.0) * pm1) / l;
            pm1 = pl;
            pl = pnext;
            acc += weight[l] * pl;
          }
        }
        gram(i, j) = acc;
        gram(j, i) = acc;
      }
    }
    return gram;
  }
  Eigen::VectorXd weight(truncation_);
  for (int i = 1; i <= truncation_; ++i)
    weight(i - 1) = amp * std::pow(p.tau + static_cast<double>(i) * i, -p.s);
  gram.noalias() = basis_ * weight.asDiagonal() * basis_.transpose();
  gram = 0.5 * (gram + gram.transpose()).eval();
  return gram;
}

Eigen::MatrixXd gram_matrix(const KernelModel& model, const PointSet& ps) {
  const int n = static_cast<int>(ps.size());
  if (n < 1) throw std::invalid_argument("gram_matrix: empty design");
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (ps.points[i] == ps.points[j])
        throw std::invalid_argument("gram_matrix: duplicate design points");
  if (const auto* ts = std::get_if<TruncatedSpectral>(&model))
    return SpectralGramBuilder(ps, ts->truncation).build(ts->params);
  Eigen::MatrixXd gram(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double value = kernel_eval(model, ps.domain, ps.points[i], ps.points[j]);
      gram(i, j) = value;
      gram(j, i) = value;
    }
  }
  return gram;
}

AuxiliaryFit fit_auxiliary_parameters(const KernelModel& target, Domain domain,
                                      const KernelModel& family,
                                      std::span<const double> distance_grid) {
  if (distance_grid.empty())
    throw std::invalid_argument("fit_auxiliary_parameters: empty distance grid");
  std::vector<double> g(distance_grid.size());
  double gg = 0.0;
  for (std::size_t j = 0; j < distance_grid.size(); ++j) {
    g[j] = curve_value(target, domain, distance_grid[j]);
    gg += g[j] * g[j];
  }

  const double log_lo = std::log(1e-4);
  const double log_hi = std::log(1e6);
  const int coarse = 121;
  int best = 0;
  double best_ssr = std::numeric_limits<double>::infinity();
  std::vector<double> log_scale(coarse);
  for (int k = 0; k < coarse; ++k) {
    log_scale[k] = log_lo + (log_hi - log_lo) * k / (coarse - 1.0);
    const ScaleFit f = fit_at_scale(family, domain, std::exp(log_scale[k]),
                                    distance_grid, g);
    if (f.ssr < best_ssr) {
      best_ssr = f.ssr;
      best = k;
    }
  }

  // golden-section refinement on log scale inside the bracketing interval
  const double kGold = 0.6180339887498949;
  double a = log_scale[std::max(best - 1, 0)];
  double b = log_scale[std::min(best + 1, coarse - 1)];
  double x1 = b - kGold * (b - a);
  double x2 = a + kGold * (b - a);
  double f1 = fit_at_scale(family, domain, std::exp(x1), distance_grid, g).ssr;
  double f2 = fit_at_scale(family, domain, std::exp(x2), distance_grid, g).ssr;
  for (int it = 0; it < 80 && b - a > 1e-12; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGold * (b - a);
      f1 = fit_at_scale(family, domain, std::exp(x1), distance_grid, g).ssr;
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGold * (b - a);
      f2 = fit_at_scale(family, domain, std::exp(x2), distance_grid, g).ssr;
    }
  }
  const double refined = 0.5 * (a + b);
  const ScaleFit fine = fit_at_scale(family, domain, std::exp(refined), distance_grid, g);

  AuxiliaryFit out;
  if (fine.ssr <= best_ssr) {
    out.scale = std::exp(refined);
    out.sigma2 = fine.sigma2;
    out.residual = fine.ssr;
  } else {
    const ScaleFit coarse_best =
        fit_at_scale(family, domain, std::exp(log_scale[best]), distance_grid, g);
    out.scale = std::exp(log_scale[best]);
    out.sigma2 = coarse_best.sigma2;
    out.residual = coarse_best.ssr;
  }
  out.residual = gg > 0.0 ? std::sqrt(out.residual / gg) : std::sqrt(out.residual);
  return out;
}

}  // namespace wmf
