#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace wmf {

enum class Domain { sphere, interval };

using Vec3 = std::array<double, 3>;

// Points on the unit sphere are unit 3-vectors; points of the open interval
// (0, pi) store the coordinate in [0] and zeros elsewhere.
struct PointSet {
  Domain domain = Domain::sphere;
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
};

inline Vec3 interval_point(double x) { return {x, 0.0, 0.0}; }

struct DesignDiagnostics {
  double fill = 0.0;        // sup over the domain of the distance to the design
  double separation = 0.0;  // half the minimal pairwise distance; on the
                            // interval also capped by half the boundary distance
  double mesh_ratio = 0.0;  // fill / separation
};

// Equal-area latitude-band placement (Deserno 2004); deterministic, returns
// the construction's natural count (within 10% of the request for n >= 100).
PointSet deserno_sphere(int n_requested);

// x_i = pi i/(n+1), i = 1..n.
PointSet uniform_grid_interval(int n);

double geodesic_distance(Domain domain, const Vec3& a, const Vec3& b);
double chordal_distance(Domain domain, const Vec3& a, const Vec3& b);

// Separation is exact; fill is approximated from below over a candidate set of
// about candidate_resolution points (a finer design of the same kind, plus the
// boundary on the interval), so it converges from below as the resolution
// grows.
DesignDiagnostics design_diagnostics(const PointSet& ps, int candidate_resolution);

}  // namespace wmf
