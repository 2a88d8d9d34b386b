#include "wmfield/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace wmf {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kEpsilon = 2.220446049250313e-16;

GaussLegendreRule build_rule(int order) {
  GaussLegendreRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (order + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= order; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * x * p2 - (j - 1.0) * p3) / j;
      }
      pp = order * (x * p1 - p2) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[order - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    rule.weights[i] = w;
    rule.weights[order - 1 - i] = w;
  }
  return rule;
}

double panel(const std::function<double(double)>& f, double a, double b,
             const GaussLegendreRule& rule) {
  const double mid = 0.5 * (a + b);
  const double hw = 0.5 * (b - a);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    sum += rule.weights[i] * f(mid + hw * rule.nodes[i]);
  return hw * sum;
}

double adapt(const std::function<double(double)>& f, double a, double b,
             double whole, double tol, int depth, const GaussLegendreRule& rule) {
  const double mid = 0.5 * (a + b);
  const double left = panel(f, a, mid, rule);
  const double right = panel(f, mid, b, rule);
  const double refined = left + right;
  // Roundoff floor: an absolute tolerance below the representable resolution
  // of the panel value cannot be met by further splitting.
  const double floor_tol = 32.0 * kEpsilon * std::fabs(refined);
  if (depth >= 28 || std::fabs(refined - whole) <= std::max(tol, floor_tol))
    return refined;
  return adapt(f, a, mid, left, 0.5 * tol, depth + 1, rule) +
         adapt(f, mid, b, right, 0.5 * tol, depth + 1, rule);
}

}  // namespace

const GaussLegendreRule& gauss_legendre(int order) {
  if (order < 1) throw std::invalid_argument("gauss_legendre: order must be positive");
  static std::map<int, GaussLegendreRule> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, build_rule(order)).first;
  return it->second;
}

double fixed_gauss_legendre(const std::function<double(double)>& f, double a,
                            double b, int order) {
  return panel(f, a, b, gauss_legendre(order));
}

double adaptive_gauss_legendre(const std::function<double(double)>& f, double a,
                               double b, double abs_tol) {
  if (!(abs_tol > 0.0)) throw std::invalid_argument("adaptive_gauss_legendre: tolerance must be positive");
  if (a == b) return 0.0;
  const GaussLegendreRule& rule = gauss_legendre(15);
  const double whole = panel(f, a, b, rule);
  return adapt(f, a, b, whole, abs_tol, 0, rule);
}

}  // namespace wmf
