#include "wmfield/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace wmf {

namespace {

constexpr double kPi = 3.14159265358979323846;

double round_half_up(double x) { return std::floor(x + 0.5); }

double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

}  // namespace

PointSet deserno_sphere(int n_requested) {
  if (n_requested < 1)
    throw std::invalid_argument("deserno_sphere: n_requested must be >= 1");
  PointSet ps;
  ps.domain = Domain::sphere;
  if (n_requested == 1) {
    ps.points.push_back({0.0, 0.0, 1.0});
    return ps;
  }
  const double area = 4.0 * kPi / n_requested;
  const double d = std::sqrt(area);
  const int bands = std::max(1, static_cast<int>(round_half_up(kPi / d)));
  const double d_theta = kPi / bands;
  const double d_phi = area / d_theta;
  for (int b = 0; b < bands; ++b) {
    const double theta = kPi * (b + 0.5) / bands;
    const int in_band = std::max(
        1, static_cast<int>(round_half_up(2.0 * kPi * std::sin(theta) / d_phi)));
    for (int k = 0; k < in_band; ++k) {
      const double phi = 2.0 * kPi * k / in_band;
      ps.points.push_back({std::sin(theta) * std::cos(phi),
                           std::sin(theta) * std::sin(phi), std::cos(theta)});
    }
  }
  return ps;
}

PointSet uniform_grid_interval(int n) {
  if (n < 1) throw std::invalid_argument("uniform_grid_interval: n must be >= 1");
  PointSet ps;
  ps.domain = Domain::interval;
  ps.points.reserve(n);
  for (int i = 1; i <= n; ++i) ps.points.push_back(interval_point(kPi * i / (n + 1)));
  return ps;
}

double geodesic_distance(Domain domain, const Vec3& a, const Vec3& b) {
  if (domain == Domain::interval) return std::fabs(a[0] - b[0]);
  const double t = std::clamp(dot(a, b), -1.0, 1.0);
  return std::acos(t);
}

double chordal_distance(Domain domain, const Vec3& a, const Vec3& b) {
  if (domain == Domain::interval) return std::fabs(a[0] - b[0]);
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

DesignDiagnostics design_diagnostics(const PointSet& ps, int candidate_resolution) {
  const std::size_t n = ps.size();
  if (n < 2)
    throw std::invalid_argument("design_diagnostics: degenerate design, need >= 2 points");
  if (candidate_resolution < static_cast<int>(10 * n))
    throw std::invalid_argument("design_diagnostics: candidate_resolution must be >= 10 * design size");

  double min_pair = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      min_pair = std::min(min_pair,
                          geodesic_distance(ps.domain, ps.points[i], ps.points[j]));
  if (!(min_pair > 0.0))
    throw std::invalid_argument("design_diagnostics: points must be pairwise distinct");

  double separation = 0.5 * min_pair;
  if (ps.domain == Domain::interval) {
    for (const Vec3& p : ps.points)
      separation = std::min(separation,
                            0.5 * std::min(p[0], kPi - p[0]));
  }

  PointSet candidates = ps.domain == Domain::sphere
                            ? deserno_sphere(candidate_resolution)
                            : uniform_grid_interval(candidate_resolution);
  if (ps.domain == Domain::interval) {
    // The fill supremum over the open interval is attained at the closure.
    candidates.points.push_back(interval_point(0.0));
    candidates.points.push_back(interval_point(kPi));
  }
  double fill = 0.0;
  for (const Vec3& c : candidates.points) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const Vec3& p : ps.points)
      nearest = std::min(nearest, geodesic_distance(ps.domain, c, p));
    fill = std::max(fill, nearest);
  }

  return DesignDiagnostics{fill, separation, fill / separation};
}

}  // namespace wmf
