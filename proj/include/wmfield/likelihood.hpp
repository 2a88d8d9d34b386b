#pragma once

#include <span>
#include <stdexcept>

#include <Eigen/Dense>

#include "wmfield/geometry.hpp"
#include "wmfield/kernels.hpp"

namespace wmf {

// Cholesky breakdown; pivot is the 0-based index whose pivot was not
// positive. The estimator records these and skips the grid point.
struct NearSingularError : std::runtime_error {
  explicit NearSingularError(int pivot_index);
  int pivot = -1;
};

// Lower-triangular factor of a positive definite Gram matrix.
class CholeskyFactor {
 public:
  explicit CholeskyFactor(Eigen::MatrixXd gram);

  int order() const { return static_cast<int>(l_.rows()); }
  double logdet() const;
  double min_diag() const { return min_diag_; }
  double max_diag() const { return max_diag_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;       // K^{-1} rhs
  Eigen::MatrixXd half_solve(Eigen::MatrixXd rhs) const;         // L^{-1} rhs

 private:
  Eigen::MatrixXd l_;
  double min_diag_ = 0.0;
  double max_diag_ = 0.0;
};

struct LikelihoodEval {
  double loglik = 0.0;
  double logdet = 0.0;
  double quadform = 0.0;  // u^T K^{-1} u
  double min_chol_diag = 0.0;
  double max_chol_diag = 0.0;
};

// -(n/2) log(2 pi) - logdet/2 - quadform/2, quadform by triangular solves.
LikelihoodEval log_likelihood_from_gram(Eigen::MatrixXd gram, std::span<const double> u);
LikelihoodEval log_likelihood(const KernelModel& model, const PointSet& ps,
                              std::span<const double> u, double nugget = 0.0);

struct InterpolantRep {
  Eigen::VectorXd coefficients;  // c = K(x)^{-1} u(x)
  KernelModel model;
  PointSet points;
  double squared_norm = 0.0;  // u(x)^T c, the likelihood quadratic form
};

InterpolantRep min_norm_interpolant(const KernelModel& model, const PointSet& ps,
                                    std::span<const double> u);

// m(y) = sum_i c_i K(y, x_i).
double interpolant_predict(const InterpolantRep& rep, const Vec3& y);

// V(y|x) = K(y,y) - K(y,x) K(x)^{-1} K(x,y), clamped at 0; the unconditional
// K(y,y) for an empty design.
double conditional_variance(const KernelModel& model, const PointSet& ps, const Vec3& y);
Eigen::VectorXd conditional_variances(const KernelModel& model, const PointSet& ps,
                                      const PointSet& candidates);

// Sequential-conditioning log-determinant; validation path, O(n^4), n <= 200.
double logdet_by_conditioning(const KernelModel& model, const PointSet& ps);

}  // namespace wmf
