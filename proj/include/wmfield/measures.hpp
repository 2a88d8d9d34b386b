#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wmfield/kernels.hpp"
#include "wmfield/sampler.hpp"
#include "wmfield/spectral.hpp"

namespace wmf {

// rho(P_a, P_1) for the law's scale family; singular marks mutually singular
// scaled pairs (Rademacher at a != 1), where the value is 0.
struct Affinity {
  double value = 1.0;
  bool singular = false;
};

Affinity hellinger_affinity(const CoefficientLaw& law, double a);

// Numerical integral of sqrt(f(x) f(x/a)) a^{-1/2} dx on the law's support;
// verification path for the closed forms and the evaluation path for the
// Student-t law. Throws for laws without a density.
double hellinger_affinity_quadrature(const CoefficientLaw& law, double a);

// -log phi(a), in cancellation-free form where a closed form exists.
double neg_log_affinity(const CoefficientLaw& law, double a);

// v(theta) computed from an eigenvalue sequence: power tau^(-s + d/2) with
// d = es.dimension, unit_diagonal from the (tau + lambda_i)^-s sum over the
// listed eigenvalues, none = 1.
double normalization_from_eigensystem(const SpectralParams& p, const EigenSystem& es);

// a_i = sigma1 sqrt(v1) (tau1 + lambda_i)^(-s1/2) / (sigma2 sqrt(v2) (tau2 +
// lambda_i)^(-s2/2)), evaluated in logs.
std::vector<double> eigenvalue_ratio_sequence(const SpectralParams& p1,
                                              const SpectralParams& p2,
                                              const EigenSystem& es, int count);

enum class Verdict { equivalent, orthogonal, undecided };
const char* verdict_name(Verdict v);

struct KakutaniReport {
  SpectralParams p1;
  SpectralParams p2;
  int dimension = 0;
  std::vector<double> terms;         // -log phi(a_i), nonnegative
  std::vector<double> partial_sums;  // running, nondecreasing
  Verdict verdict = Verdict::undecided;
  std::string rule;  // the empirical rule that fired
  Verdict analytic_verdict = Verdict::undecided;
  double tail_slope = 0.0;     // log-log fit over [N/10, N]; 0 when not fitted
  double tail_estimate = 0.0;  // extrapolated remainder beyond N
};

// Classifies the product measures induced by the two parameter sets as
// equivalent or orthogonal from the finite sum of -log phi(a_i). The
// empirical verdict extrapolates the tail (UNDECIDED near the threshold);
// the analytic rule — smoothness equality, microergodic-value equality, and
// the d <= 3 cutoff — is reported alongside.
KakutaniReport kakutani_classify(const SpectralParams& p1, const SpectralParams& p2,
                                 const CoefficientLaw& law, const EigenSystem& es,
                                 int count, int dimension);

// Empirical bracketing constants (min, max) of -log phi(a) / (a-1)^2 over a
// grid in [0.5, 2] excluding 1.
std::pair<double, double> taylor_window_check(const CoefficientLaw& law,
                                              std::span<const double> grid);

}  // namespace wmf
