#pragma once

#include <cstdint>
#include <vector>

#include "wmfield/geometry.hpp"
#include "wmfield/kernels.hpp"
#include "wmfield/rng.hpp"

namespace wmf {

enum class LawKind { gaussian, rademacher, centered_exponential, scaled_student_t };

// Mean-0 variance-1 coefficient laws.
struct CoefficientLaw {
  LawKind kind = LawKind::gaussian;
  double df = 4.0;  // scaled_student_t only; needs df > 2
};

// One standardized draw; heavy consumers (the t draw) may take several
// underlying variates, which per-index substreams make harmless.
double standardized_draw(const CoefficientLaw& law, SubStream& stream);

struct FieldSample {
  PointSet points;
  std::vector<double> values;
  CoefficientLaw law;
  std::uint64_t seed = 0;
  int truncation = 0;
  SpectralParams truth;
};

// u(x) = sigma0 sqrt(v(theta0)) sum_i (tau0 + lambda_i)^{-s0/2} xi_i e_i(x),
// coefficients keyed by (seed, basis index) so shared indices coincide across
// truncation levels.
FieldSample sample_kl(const SpectralParams& params, int truncation,
                      const CoefficientLaw& law, const PointSet& ps,
                      std::uint64_t seed);

// Exact finite-dimensional Gaussian sampling through the Cholesky factor of
// the Gram matrix; oracle for sample_kl in the Gaussian case.
FieldSample sample_gaussian_direct(const KernelModel& model, const PointSet& ps,
                                   std::uint64_t seed);

}  // namespace wmf
