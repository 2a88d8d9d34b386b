#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "wmfield/geometry.hpp"
#include "wmfield/kernels.hpp"

namespace wmf {

struct EstimationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Kernel family indexed by smoothness. When profile_magnitude is set, gram(s)
// must be the unit-magnitude Gram and sigma2 is profiled in closed form;
// otherwise gram(s) carries the fixed magnitude and fixed_sigma2 reports it.
struct SmoothnessFamily {
  std::function<Eigen::MatrixXd(double s)> gram;
  std::function<double(double s)> normalization;  // v(theta); may be empty
  bool profile_magnitude = true;
  double fixed_sigma2 = 1.0;
  double s_floor = 1.0;  // d/2 of the family's domain
};

// Family over the range parameter at fixed smoothness; sigma2 always profiled.
struct RangeFamily {
  std::function<Eigen::MatrixXd(double tau)> gram;
  std::function<double(double tau)> normalization;
  double s = 0.0;  // the fixed smoothness, reported back in results
};

SmoothnessFamily spectral_smoothness_family(const PointSet& ps, int truncation,
                                            double tau, NormalizationKind norm,
                                            std::optional<double> fixed_sigma2 = {});
RangeFamily spectral_range_family(const PointSet& ps, int truncation, double s,
                                  NormalizationKind norm);

struct TracePoint {
  double x = 0.0;       // evaluated s (or tau)
  double loglik = 0.0;  // profiled when applicable; meaningless when flagged
  bool singular = false;
  bool invalid = false;
  int pivot = -1;
};

struct EstimationResult {
  double s_hat = 0.0;
  double sigma2_hat = 0.0;
  std::optional<double> tau_hat;
  double microergodic = 0.0;  // sigma2_hat * v(theta_hat); 0 when v unknown
  double loglik = 0.0;
  bool boundary = false;
  std::vector<TracePoint> trace;          // evaluation order: grid, then refinement
  std::vector<double> bracket_widths;     // refinement phase, nonincreasing
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double tolerance = 0.0;  // final bracket width
  double ms_elapsed = 0.0;
};

struct SearchOptions {
  double grid_step = 0.25;
  double refine_tol = 1e-4;
  double nugget = 0.0;  // explicit diagonal addition, recorded by the caller
};

// Coarse grid + golden-section maximization of the (profiled) log-likelihood
// over [s_min, s_max]; singular grid points recorded and skipped; ties toward
// the smaller s; the reported maximizer is the best point ever evaluated.
EstimationResult estimate_smoothness(const SmoothnessFamily& family,
                                     std::span<const double> u, double s_min,
                                     double s_max, const SearchOptions& opts = {});

// quadform / n at a fixed model.
double estimate_magnitude(const KernelModel& model, const PointSet& ps,
                          std::span<const double> u);

EstimationResult estimate_range_and_magnitude(const RangeFamily& family,
                                              std::span<const double> u,
                                              double tau_lo, double tau_hi,
                                              const SearchOptions& opts = {});

struct ProfileRow {
  double s = 0.0;
  double loglik = 0.0;
  bool singular = false;
  bool invalid = false;
  int pivot = -1;
};

// Objective surface export; per-point failures are marked inline.
std::vector<ProfileRow> likelihood_profile(const SmoothnessFamily& family,
                                           std::span<const double> u,
                                           std::span<const double> grid,
                                           const SearchOptions& opts = {});

}  // namespace wmf
