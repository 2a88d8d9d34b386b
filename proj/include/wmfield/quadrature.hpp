#pragma once

#include <functional>
#include <vector>

namespace wmf {

struct GaussLegendreRule {
  std::vector<double> nodes;    // on [-1, 1], ascending
  std::vector<double> weights;
};

// Nodes by Newton iteration on P_n; cached per order.
const GaussLegendreRule& gauss_legendre(int order);

double fixed_gauss_legendre(const std::function<double(double)>& f, double a,
                            double b, int order);

// Bisection-adaptive composite 15-point rule with an absolute tolerance.
double adaptive_gauss_legendre(const std::function<double(double)>& f, double a,
                               double b, double abs_tol);

}  // namespace wmf
