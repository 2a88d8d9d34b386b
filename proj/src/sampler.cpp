#include "wmfield/sampler.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "wmfield/spectral.hpp"

namespace wmf {

namespace {

void validate_law(const CoefficientLaw& law) {
  if (law.kind == LawKind::scaled_student_t && !(law.df > 2.0))
    throw std::invalid_argument("coefficient law: student t needs df > 2");
}

// Marsaglia-Tsang gamma draw, shape alpha >= 1, unit scale.
double gamma_draw(double alpha, SubStream& stream) {
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = stream.next_normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = stream.next_unit();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

}  // namespace

double standardized_draw(const CoefficientLaw& law, SubStream& stream) {
  validate_law(law);
  switch (law.kind) {
    case LawKind::gaussian:
      return stream.next_normal();
    case LawKind::rademacher:
      return stream.next_unit() < 0.5 ? -1.0 : 1.0;
    case LawKind::centered_exponential:
      return -std::log(stream.next_unit()) - 1.0;
    case LawKind::scaled_student_t: {
      // sqrt((df-2)/df) * Z / sqrt(V/df) with V ~ chi^2_df
      const double z = stream.next_normal();
      const double chi2 = 2.0 * gamma_draw(0.5 * law.df, stream);
      return z * std::sqrt((law.df - 2.0) / chi2);
    }
  }
  throw std::invalid_argument("coefficient law: unknown kind");
}

FieldSample sample_kl(const SpectralParams& params, int truncation,
                      const CoefficientLaw& law, const PointSet& ps,
                      std::uint64_t seed) {
  validate_law(law);
  if (truncation < 0)
    throw std::invalid_argument("sample_kl: truncation must be >= 0");
  const double v = normalization_value(params, ps.domain, truncation);
  const double amp = std::sqrt(params.sigma2 * v);

  FieldSample out;
  out.points = ps;
  out.law = law;
  out.seed = seed;
  out.truncation = truncation;
  out.truth = params;
  const int n = static_cast<int>(ps.size());
  out.values.assign(n, 0.0);

  const int dim = ps.domain == Domain::sphere
                      ? (truncation + 1) * (truncation + 1)
                      : truncation;
  std::vector<double> coeff(dim);
  for (int i = 1; i <= dim; ++i) {
    SubStream stream(seed, static_cast<std::uint64_t>(i));
    double lambda;
    if (ps.domain == Domain::sphere) {
      const int l = sphere_index_lm(i).l;
      lambda = l * (l + 1.0);
    } else {
      lambda = static_cast<double>(i) * i;
    }
    coeff[i - 1] = amp * std::pow(params.tau + lambda, -0.5 * params.s) *
                   standardized_draw(law, stream);
  }

  std::vector<double> row(dim);
  for (int j = 0; j < n; ++j) {
    if (ps.domain == Domain::sphere)
      sphere_basis_row(truncation, ps.points[j], row);
    else
      interval_basis_row(truncation, ps.points[j][0], row);
    double acc = 0.0;
    for (int i = 0; i < dim; ++i) acc += row[i] * coeff[i];
    out.values[j] = acc;
  }
  return out;
}

FieldSample sample_gaussian_direct(const KernelModel& model, const PointSet& ps,
                                   std::uint64_t seed) {
  const Eigen::MatrixXd gram = gram_matrix(model, ps);
  const Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(
        "sample_gaussian_direct: Cholesky failed on a near-singular design");
  const int n = static_cast<int>(ps.size());
  Eigen::VectorXd z(n);
  for (int j = 0; j < n; ++j) {
    SubStream stream(seed, static_cast<std::uint64_t>(j) + 1);
    z(j) = stream.next_normal();
  }
  const Eigen::VectorXd u = llt.matrixL() * z;

  FieldSample out;
  out.points = ps;
  out.law = CoefficientLaw{LawKind::gaussian};
  out.seed = seed;
  if (const auto* ts = std::get_if<TruncatedSpectral>(&model)) {
    out.truth = ts->params;
    out.truncation = ts->truncation;
  }
  out.values.assign(u.data(), u.data() + n);
  return out;
}

}  // namespace wmf
