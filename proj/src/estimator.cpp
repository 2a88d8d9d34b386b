#include "wmfield/estimator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <utility>

#include "wmfield/likelihood.hpp"

namespace wmf {

namespace {

constexpr double kLog2Pi = 1.8378770664093455;
constexpr double kInvPhi = 0.6180339887498949;   // (sqrt(5) - 1) / 2
constexpr double kInvPhi2 = 0.3819660112501051;  // (3 - sqrt(5)) / 2

struct EvalRecord {
  double value = -std::numeric_limits<double>::infinity();
  double sigma2 = 0.0;
  bool ok = false;
  bool singular = false;
  bool invalid = false;
  int pivot = -1;
};

struct SearchState {
  double x_best = 0.0;
  EvalRecord best;
  std::vector<TracePoint> trace;
  std::vector<double> widths;
  double lo = 0.0;
  double hi = 0.0;
};

// strictly better, ties toward the smaller abscissa
bool improves(const EvalRecord& rec, double x, const EvalRecord& best, double x_best) {
  if (!rec.ok) return false;
  if (!best.ok) return true;
  return rec.value > best.value || (rec.value == best.value && x < x_best);
}

template <typename F>
EvalRecord record_eval(F& objective, double x, SearchState& st) {
  EvalRecord rec = objective(x);
  st.trace.push_back({x, rec.value, rec.singular, rec.invalid, rec.pivot});
  if (improves(rec, x, st.best, st.x_best)) {
    st.best = rec;
    st.x_best = x;
  }
  return rec;
}

// Coarse ascending grid over [lo, hi] (endpoint always included), then
// golden-section refinement of the bracket around the best grid point.  Failed
// evaluations stay in the trace and compare as -inf.  The returned maximizer is
// the best point ever evaluated, so refinement cannot lose to the grid.
template <typename F>
SearchState search_1d(F&& objective, double lo, double hi, const SearchOptions& opts) {
  SearchState st;

  std::vector<double> grid;
  if (hi <= lo) {
    grid.push_back(lo);
  } else {
    int k = 0;
    while (true) {
      const double x = lo + k * opts.grid_step;
      if (x >= hi - 1e-9 * opts.grid_step) break;
      grid.push_back(x);
      ++k;
    }
    grid.push_back(hi);
  }
  for (double x : grid) record_eval(objective, x, st);
  if (!st.best.ok) throw EstimationError("all grid evaluations singular or invalid");

  double a = std::max(lo, st.x_best - opts.grid_step);
  double b = std::min(hi, st.x_best + opts.grid_step);
  st.lo = a;
  st.hi = b;
  if (b - a > opts.refine_tol) {
    double x1 = a + kInvPhi2 * (b - a);
    double x2 = a + kInvPhi * (b - a);
    EvalRecord f1 = record_eval(objective, x1, st);
    EvalRecord f2 = record_eval(objective, x2, st);
    while (b - a > opts.refine_tol) {
      st.widths.push_back(b - a);
      const bool keep_left = !f2.ok || (f1.ok && f1.value >= f2.value);
      if (keep_left) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = a + kInvPhi2 * (b - a);
        f1 = record_eval(objective, x1, st);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + kInvPhi * (b - a);
        f2 = record_eval(objective, x2, st);
      }
    }
    st.widths.push_back(b - a);
    st.lo = a;
    st.hi = b;
  }
  return st;
}

// Shared evaluation: Gram -> Cholesky -> (profiled) log-likelihood.
EvalRecord evaluate_point(const std::function<Eigen::MatrixXd(double)>& gram_fn, double x,
                          std::span<const double> u, bool profile, double fixed_sigma2,
                          double nugget) {
  EvalRecord rec;
  Eigen::MatrixXd gram;
  try {
    gram = gram_fn(x);
  } catch (const std::invalid_argument&) {
    rec.invalid = true;
    return rec;
  }
  if (nugget > 0.0) gram.diagonal().array() += nugget;
  LikelihoodEval ev;
  try {
    ev = log_likelihood_from_gram(std::move(gram), u);
  } catch (const NearSingularError& err) {
    rec.singular = true;
    rec.pivot = err.pivot;
    return rec;
  }
  const double n = static_cast<double>(u.size());
  if (profile) {
    const double s2 = ev.quadform / n;
    if (!(s2 > 0.0)) {
      rec.invalid = true;  // degenerate profiled magnitude
      return rec;
    }
    rec.sigma2 = s2;
    rec.value = -0.5 * n * (kLog2Pi + 1.0) - 0.5 * ev.logdet - 0.5 * n * std::log(s2);
  } else {
    rec.sigma2 = fixed_sigma2;
    rec.value = ev.loglik;
  }
  rec.ok = std::isfinite(rec.value);
  return rec;
}

void validate_options(const SearchOptions& opts) {
  if (!(opts.grid_step > 0.0)) throw std::invalid_argument("grid step must be positive");
  if (!(opts.refine_tol > 0.0)) throw std::invalid_argument("refinement tolerance must be positive");
  if (opts.nugget < 0.0) throw std::invalid_argument("nugget must be nonnegative");
}

bool all_zero(std::span<const double> u) {
  for (double v : u) {
    if (v != 0.0) return false;
  }
  return true;
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  const auto dt = std::chrono::steady_clock::now() - t0;
  return std::chrono::duration<double, std::milli>(dt).count();
}

}  // namespace

SmoothnessFamily spectral_smoothness_family(const PointSet& ps, int truncation, double tau,
                                            NormalizationKind norm,
                                            std::optional<double> fixed_sigma2) {
  auto builder = std::make_shared<SpectralGramBuilder>(ps, truncation);
  const Domain domain = ps.domain;
  SmoothnessFamily fam;
  fam.profile_magnitude = !fixed_sigma2.has_value();
  fam.fixed_sigma2 = fixed_sigma2.value_or(1.0);
  fam.s_floor = domain == Domain::sphere ? 1.0 : 0.5;
  const double sigma2 = fam.fixed_sigma2;  // 1 when profiled
  fam.gram = [builder, tau, sigma2, norm](double s) {
    return builder->build({s, tau, sigma2, norm});
  };
  fam.normalization = [domain, tau, norm, truncation](double s) {
    return normalization_value({s, tau, 1.0, norm}, domain, truncation);
  };
  return fam;
}

RangeFamily spectral_range_family(const PointSet& ps, int truncation, double s,
                                  NormalizationKind norm) {
  auto builder = std::make_shared<SpectralGramBuilder>(ps, truncation);
  const Domain domain = ps.domain;
  RangeFamily fam;
  fam.s = s;
  fam.gram = [builder, s, norm](double tau) { return builder->build({s, tau, 1.0, norm}); };
  fam.normalization = [domain, s, norm, truncation](double tau) {
    return normalization_value({s, tau, 1.0, norm}, domain, truncation);
  };
  return fam;
}

EstimationResult estimate_smoothness(const SmoothnessFamily& family, std::span<const double> u,
                                     double s_min, double s_max, const SearchOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!family.gram) throw std::invalid_argument("smoothness family has no gram callback");
  if (u.empty()) throw std::invalid_argument("empty sample");
  if (!(s_min > family.s_floor)) throw std::invalid_argument("s_min must exceed d/2");
  if (!(s_max >= s_min)) throw std::invalid_argument("empty search interval");
  validate_options(opts);
  if (family.profile_magnitude && all_zero(u))
    throw EstimationError("degenerate sample: profiled magnitude is zero");

  auto objective = [&family, u, &opts](double s) {
    return evaluate_point(family.gram, s, u, family.profile_magnitude, family.fixed_sigma2,
                          opts.nugget);
  };
  SearchState st = search_1d(objective, s_min, s_max, opts);

  EstimationResult r;
  r.s_hat = st.x_best;
  r.loglik = st.best.value;
  r.sigma2_hat = st.best.sigma2;
  r.boundary = st.x_best == s_min || st.x_best == s_max;
  if (family.normalization) r.microergodic = r.sigma2_hat * family.normalization(r.s_hat);
  r.trace = std::move(st.trace);
  r.bracket_widths = std::move(st.widths);
  r.bracket_lo = st.lo;
  r.bracket_hi = st.hi;
  r.tolerance = st.hi - st.lo;
  r.ms_elapsed = elapsed_ms(t0);
  return r;
}

double estimate_magnitude(const KernelModel& model, const PointSet& ps,
                          std::span<const double> u) {
  if (u.size() != ps.size()) throw std::invalid_argument("sample/design size mismatch");
  if (u.empty()) throw std::invalid_argument("empty sample");
  return log_likelihood(model, ps, u).quadform / static_cast<double>(u.size());
}

EstimationResult estimate_range_and_magnitude(const RangeFamily& family,
                                              std::span<const double> u, double tau_lo,
                                              double tau_hi, const SearchOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!family.gram) throw std::invalid_argument("range family has no gram callback");
  if (u.empty()) throw std::invalid_argument("empty sample");
  if (!(tau_lo >= 1.0)) throw std::invalid_argument("tau lower bound must be >= 1");
  if (!(tau_hi >= tau_lo)) throw std::invalid_argument("empty tau interval");
  validate_options(opts);
  if (all_zero(u)) throw EstimationError("degenerate sample: profiled magnitude is zero");

  auto objective = [&family, u, &opts](double tau) {
    return evaluate_point(family.gram, tau, u, /*profile=*/true, 1.0, opts.nugget);
  };
  SearchState st = search_1d(objective, tau_lo, tau_hi, opts);

  EstimationResult r;
  r.s_hat = family.s;
  r.tau_hat = st.x_best;
  r.loglik = st.best.value;
  r.sigma2_hat = st.best.sigma2;
  r.boundary = st.x_best == tau_lo || st.x_best == tau_hi;
  if (family.normalization) r.microergodic = r.sigma2_hat * family.normalization(st.x_best);
  r.trace = std::move(st.trace);
  r.bracket_widths = std::move(st.widths);
  r.bracket_lo = st.lo;
  r.bracket_hi = st.hi;
  r.tolerance = st.hi - st.lo;
  r.ms_elapsed = elapsed_ms(t0);
  return r;
}

std::vector<ProfileRow> likelihood_profile(const SmoothnessFamily& family,
                                           std::span<const double> u,
                                           std::span<const double> grid,
                                           const SearchOptions& opts) {
  if (!family.gram) throw std::invalid_argument("smoothness family has no gram callback");
  if (u.empty()) throw std::invalid_argument("empty sample");
  validate_options(opts);
  std::vector<ProfileRow> rows;
  rows.reserve(grid.size());
  for (double s : grid) {
    ProfileRow row;
    row.s = s;
    if (!(s > family.s_floor)) {
      row.invalid = true;
      rows.push_back(row);
      continue;
    }
    EvalRecord rec = evaluate_point(family.gram, s, u, family.profile_magnitude,
                                    family.fixed_sigma2, opts.nugget);
    row.loglik = rec.value;
    row.singular = rec.singular;
    row.invalid = rec.invalid;
    row.pivot = rec.pivot;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace wmf
