#pragma once

#include <span>
#include <variant>

#include <Eigen/Dense>

#include "wmfield/geometry.hpp"

namespace wmf {

enum class NormalizationKind { power, unit_diagonal, none };

// theta = (s, tau) plus the magnitude sigma2; v(theta) picked by norm.
struct SpectralParams {
  double s = 2.0;       // smoothness, > d/2
  double tau = 1.0;     // range scale, > 0
  double sigma2 = 1.0;  // magnitude, > 0
  NormalizationKind norm = NormalizationKind::power;
};

struct TruncatedSpectral {
  SpectralParams params;
  int truncation = 100;  // sphere: max degree; interval: max mode
};

// sigma2 2^{1-nu}/Gamma(nu) (sqrt(tau) r)^nu K_nu(sqrt(tau) r) on chordal r.
struct EuclideanMatern {
  double nu = 1.0;
  double tau = 1.0;
  double sigma2 = 1.0;
};

// sigma2 2^{1-kappa}/Gamma(kappa) int_z^1 u (u^2-z^2)^{kappa-1} (1-u)^mu du,
// z = r/beta; identically 0 for r >= beta.
struct GeneralizedWendland {
  double kappa = 1.0;
  double mu = 4.0;
  double beta = 1.0;
  double sigma2 = 1.0;
};

using KernelModel = std::variant<TruncatedSpectral, EuclideanMatern, GeneralizedWendland>;

// v(theta): power = tau^{-s+d/2}; unit_diagonal = reciprocal of the
// truncation-level diagonal sum, so the marginal variance is exactly sigma2
// (sphere only, where the diagonal is constant); none = 1.
double normalization_value(const SpectralParams& p, Domain domain, int truncation);

double spectral_kernel_eval(const SpectralParams& p, int truncation, Domain domain,
                            const Vec3& a, const Vec3& b);

// Diagonal remainder beyond the truncation: exact partial sum plus an
// integral bound for the far tail. Decreasing in the truncation level.
double spectral_truncation_tail(const SpectralParams& p, Domain domain, int truncation);

double matern_eval(double nu, double tau, double sigma2, double r);

double wendland_eval(double kappa, double mu, double beta, double sigma2, double r);

double kernel_eval(const KernelModel& model, Domain domain, const Vec3& a, const Vec3& b);

Eigen::MatrixXd gram_matrix(const KernelModel& model, const PointSet& ps);

// Caches the pairwise geometry of a fixed design so Gram matrices for many
// (s, tau, sigma2) values share the setup work.
class SpectralGramBuilder {
 public:
  SpectralGramBuilder(const PointSet& ps, int truncation);
  Eigen::MatrixXd build(const SpectralParams& p) const;
  int truncation() const { return truncation_; }
  Domain domain() const { return domain_; }

 private:
  Domain domain_;
  int n_ = 0;
  int truncation_ = 0;
  Eigen::MatrixXd cosines_;  // sphere: <x_i, x_j>, diagonal pinned to 1
  Eigen::MatrixXd basis_;    // interval: n x truncation eigenfunction values
};

struct AuxiliaryFit {
  double scale = 0.0;     // fitted tau (Matern / spectral) or beta (Wendland)
  double sigma2 = 0.0;
  double residual = 0.0;  // relative L2 mismatch over the grid
};

// Least-squares match of the family's covariance-vs-chordal-distance curve to
// the target's over distance_grid. Smoothness-type parameters of `family` are
// held fixed; only the scale and sigma2 move, sigma2 by closed form.
AuxiliaryFit fit_auxiliary_parameters(const KernelModel& target, Domain domain,
                                      const KernelModel& family,
                                      std::span<const double> distance_grid);

}  // namespace wmf
