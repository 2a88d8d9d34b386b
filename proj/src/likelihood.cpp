#include "wmfield/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace wmf {

namespace {

constexpr double kLog2Pi = 1.8378770664093455;

// Locate the first non-positive (or non-finite) pivot of an unblocked
// factorization; called only after the fast path has failed.
int find_failing_pivot(const Eigen::MatrixXd& gram) {
  const int n = static_cast<int>(gram.rows());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    double d = gram(j, j);
    for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) return j;
    l(j, j) = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double v = gram(i, j);
      for (int k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / l(j, j);
    }
  }
  return n - 1;
}

double clamped_quadform(const Eigen::VectorXd& u, const Eigen::VectorXd& c) {
  return std::max(u.dot(c), 0.0);
}

Eigen::VectorXd to_vector(std::span<const double> u) {
  return Eigen::Map<const Eigen::VectorXd>(u.data(), static_cast<int>(u.size()));
}

}  // namespace

NearSingularError::NearSingularError(int pivot_index)
    : std::runtime_error("cholesky breakdown at pivot " + std::to_string(pivot_index)),
      pivot(pivot_index) {}

CholeskyFactor::CholeskyFactor(Eigen::MatrixXd gram) {
  const Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) throw NearSingularError(find_failing_pivot(gram));
  l_ = llt.matrixL();
  min_diag_ = l_.diagonal().minCoeff();
  max_diag_ = l_.diagonal().maxCoeff();
  if (!(min_diag_ > 0.0) || !std::isfinite(max_diag_))
    throw NearSingularError(find_failing_pivot(gram));
}

double CholeskyFactor::logdet() const {
  return 2.0 * l_.diagonal().array().log().sum();
}

Eigen::VectorXd CholeskyFactor::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd y = l_.triangularView<Eigen::Lower>().solve(rhs);
  return l_.triangularView<Eigen::Lower>().transpose().solve(y);
}

Eigen::MatrixXd CholeskyFactor::half_solve(Eigen::MatrixXd rhs) const {
  l_.triangularView<Eigen::Lower>().solveInPlace(rhs);
  return rhs;
}

LikelihoodEval log_likelihood_from_gram(Eigen::MatrixXd gram, std::span<const double> u) {
  if (static_cast<int>(u.size()) != gram.rows())
    throw std::invalid_argument("log_likelihood: value/design size mismatch");
  const CholeskyFactor chol(std::move(gram));
  const Eigen::VectorXd uv = to_vector(u);
  LikelihoodEval out;
  out.logdet = chol.logdet();
  out.quadform = clamped_quadform(uv, chol.solve(uv));
  out.min_chol_diag = chol.min_diag();
  out.max_chol_diag = chol.max_diag();
  out.loglik = -0.5 * static_cast<double>(u.size()) * kLog2Pi - 0.5 * out.logdet -
               0.5 * out.quadform;
  return out;
}

LikelihoodEval log_likelihood(const KernelModel& model, const PointSet& ps,
                              std::span<const double> u, double nugget) {
  Eigen::MatrixXd gram = gram_matrix(model, ps);
  if (nugget != 0.0)
    gram.diagonal().array() += nugget;
  return log_likelihood_from_gram(std::move(gram), u);
}

InterpolantRep min_norm_interpolant(const KernelModel& model, const PointSet& ps,
                                    std::span<const double> u) {
  if (u.size() != ps.size())
    throw std::invalid_argument("min_norm_interpolant: value/design size mismatch");
  const CholeskyFactor chol(gram_matrix(model, ps));
  const Eigen::VectorXd uv = to_vector(u);
  InterpolantRep rep;
  rep.coefficients = chol.solve(uv);
  rep.model = model;
  rep.points = ps;
  rep.squared_norm = clamped_quadform(uv, rep.coefficients);
  return rep;
}

double interpolant_predict(const InterpolantRep& rep, const Vec3& y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rep.points.size(); ++i)
    acc += rep.coefficients(static_cast<int>(i)) *
           kernel_eval(rep.model, rep.points.domain, y, rep.points.points[i]);
  return acc;
}

double conditional_variance(const KernelModel& model, const PointSet& ps, const Vec3& y) {
  PointSet candidates{ps.domain, {y}};
  return conditional_variances(model, ps, candidates)(0);
}

Eigen::VectorXd conditional_variances(const KernelModel& model, const PointSet& ps,
                                      const PointSet& candidates) {
  if (candidates.domain != ps.domain)
    throw std::invalid_argument("conditional_variances: domain mismatch");
  const int m = static_cast<int>(candidates.size());
  Eigen::VectorXd out(m);
  for (int j = 0; j < m; ++j)
    out(j) = kernel_eval(model, ps.domain, candidates.points[j], candidates.points[j]);
  if (ps.size() == 0) return out;

  const int n = static_cast<int>(ps.size());
  const CholeskyFactor chol(gram_matrix(model, ps));
  Eigen::MatrixXd cross(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      cross(i, j) = kernel_eval(model, ps.domain, ps.points[i], candidates.points[j]);
  const Eigen::MatrixXd w = chol.half_solve(std::move(cross));
  for (int j = 0; j < m; ++j)
    out(j) = std::max(out(j) - w.col(j).squaredNorm(), 0.0);
  return out;
}

double logdet_by_conditioning(const KernelModel& model, const PointSet& ps) {
  const int n = static_cast<int>(ps.size());
  if (n < 1) throw std::invalid_argument("logdet_by_conditioning: empty design");
  if (n > 200)
    throw std::invalid_argument("logdet_by_conditioning: validation path capped at n=200");
  PointSet prefix{ps.domain, {}};
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = conditional_variance(model, prefix, ps.points[i]);
    if (!(v > 0.0))
      throw NearSingularError(i);
    acc += std::log(v);
    prefix.points.push_back(ps.points[i]);
  }
  return acc;
}

}  // namespace wmf
