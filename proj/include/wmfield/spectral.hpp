#pragma once

#include <span>
#include <vector>

#include "wmfield/geometry.hpp"

namespace wmf {

// Laplacian eigenvalues in nondecreasing order with multiplicity; lambda[i-1]
// is the i-th eigenvalue.
struct EigenSystem {
  int dimension = 2;
  std::vector<double> lambda;
};

// lambda = l(l+1), each repeated 2l+1 times, degrees 0..max_degree; the total
// count is (max_degree+1)^2.
EigenSystem sphere_eigensystem(int max_degree);

// Dirichlet sines on (0, pi): lambda_i = i^2, i = 1..max_mode.
EigenSystem interval_eigensystem(int max_mode);

// lambda_i = i^(2/d); stand-in spectrum matching the Weyl growth for
// dimensions without a concrete domain here (d >= 3).
EigenSystem synthetic_weyl_eigensystem(int dimension, int count);

// 1-based index -> (degree l, order m) in the fixed basis order: l ascending,
// m = -l..l within a degree.
struct SphereIndex { int l; int m; };
SphereIndex sphere_index_lm(int i);

double legendre_p(int l, double t);

// P_0(t) .. P_max_degree(t) in one recurrence pass; out has max_degree+1
// slots.
void legendre_p_row(int max_degree, double t, std::span<double> out);

// Orthonormal associated Legendre Lambda_l^m(t) = sqrt((2l+1)/(4pi) *
// (l-m)!/(l+m)!) P_l^m(t) for l = m..max_degree, no Condon-Shortley phase.
// The normalized forward recurrence stays bounded where the raw
// factorial-quotient form overflows past l ~ 30.
void normalized_assoc_legendre(int max_degree, int m, double t, std::span<double> out);

double real_sphere_harmonic(int l, int m, const Vec3& p);

// All (max_degree+1)^2 basis values at p, in sphere_index_lm order.
void sphere_basis_row(int max_degree, const Vec3& p, std::span<double> out);

double interval_eigenfunction(int i, double x);  // sqrt(2/pi) sin(i x)
void interval_basis_row(int max_mode, double x, std::span<double> out);

// Empirical min/max of (1 + lambda_i)/i^(2/d) over 2 <= i <= n (from i = 1
// when lambda_1 > 0).
struct WeylBounds { double lower; double upper; };
WeylBounds weyl_ratio_bounds(const EigenSystem& es, int n);

}  // namespace wmf
