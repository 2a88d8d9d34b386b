#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wmfield/estimator.hpp"
#include "wmfield/sampler.hpp"

namespace wmf {

enum class ScenarioKind {
  correct,              // data and candidate family coincide, sigma2 known
  misspecified_tau,     // candidate range scale wrong on purpose, sigma2 profiled
  misspecified_law,     // non-Gaussian coefficients, Gaussian likelihood
  misspecified_kernel,  // Euclidean-kernel data, spectral candidate family
  microergodic_clt,     // smoothness known, (tau, sigma2) estimated jointly
  kakutani_table,       // equivalence/orthogonality matrix, no replications
};

std::string scenario_name(ScenarioKind kind);

// Rejected configuration; `keys` lists every offending key so one round of
// edits fixes the file.
struct ConfigError : std::runtime_error {
  ConfigError(std::vector<std::string> offending, const std::string& detail);
  std::vector<std::string> keys;
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::correct;

  // Truth.
  Domain domain = Domain::sphere;
  double s0 = 5.0;
  double tau0 = 20.0;
  double sigma0_sq = 1.0;
  std::vector<CoefficientLaw> laws{CoefficientLaw{}};  // >1 entry: one cell per law
  int truncation = 100;
  NormalizationKind norm = NormalizationKind::unit_diagonal;

  // Candidate family.
  std::vector<double> candidate_tau{};  // empty = tau0; >1 entry: one cell per value
  std::string true_kernel = "matern";   // misspecified_kernel: matern | wendland
  EuclideanMatern matern{1.5, 25.0, 1.0};
  GeneralizedWendland wendland{1.0, 4.0, 1.5, 1.0};
  double kernel_fit_s = 2.0;  // reference smoothness for the auxiliary fit

  // Replication design.
  std::vector<int> sizes{200, 500};
  int replications = 20;
  double search_lo = 1.0 + 1e-7;
  double search_hi = 30.0;
  double grid_step = 0.25;
  double refine_tol = 1e-4;
  double tau_lo = 1.0;  // microergodic_clt bounds
  double tau_hi = 30.0;
  double tau_grid_step = 1.0;
  std::uint64_t master_seed = 1;
  std::string out_dir = ".";
  int workers = 0;  // 0 = WMFIELD_WORKERS env var, else 1
  bool timing = false;
  int kakutani_terms = 100000;
};

// Flat `key = value` lines; '#' starts a comment; commas separate list items.
// Duplicate keys and lines without '=' are config errors.
std::map<std::string, std::string> parse_config_text(const std::string& text);

// Builds and validates a config; unknown keys, unparsable values, and
// violated invariants are all collected into one ConfigError.
ScenarioConfig scenario_config_from_map(const std::map<std::string, std::string>& kv);

ScenarioConfig load_scenario_config(const std::string& path);

void validate_scenario_config(const ScenarioConfig& cfg);

// One estimation cell entry. A failed replication keeps its row with NaN
// estimates so the summary can count it.
struct ReplicationRecord {
  std::string scenario;  // cell id, e.g. "MISSPECIFIED_TAU[tau=1]"
  int n = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  double s_hat = 0.0;
  double sigma2_hat = 0.0;
  bool boundary = false;
  double cond_min = 0.0;  // Cholesky pivot range at the accepted model
  double cond_max = 0.0;
  double ms_elapsed = 0.0;  // 0 unless the config enables timing
};

// Hash chain over (master, scenario, cell, n, rep); all records of a run get
// distinct seeds.
std::uint64_t replication_seed(std::uint64_t master, ScenarioKind kind, int variant, int n,
                               int rep);

struct SummaryCell {
  std::string scenario;
  int n = 0;
  int count = 0;     // finite estimates
  int failures = 0;  // NaN rows
  double median_s = 0.0;
  double mean_s = 0.0;
  double iqr_s = 0.0;
  double bias_s = 0.0;
  double mean_sigma2 = 0.0;
};

// Per-(scenario, n) statistics of the finite rows; depends only on the
// records and s0, so it reproduces exactly from an emitted CSV.
std::vector<SummaryCell> summarize(std::span<const ReplicationRecord> records, double s0);

std::string summary_text(std::span<const SummaryCell> cells);

struct ScenarioResult {
  ScenarioConfig config;
  std::vector<ReplicationRecord> records;  // sorted by (scenario, n, rep)
  std::vector<SummaryCell> cells;
  std::optional<AuxiliaryFit> auxiliary;  // misspecified_kernel only
  std::string kakutani_table;             // kakutani_table only
};

ScenarioResult run_scenario(const ScenarioConfig& cfg);

// Exact emission schema; 17 significant digits so parsing back is bit-exact.
inline constexpr const char* kRecordCsvHeader =
    "scenario,n,rep,seed,s_hat,sigma2_hat,boundary,cond_min,cond_max,ms_elapsed";

std::string csv_from_records(std::span<const ReplicationRecord> records);
std::vector<ReplicationRecord> records_from_csv(const std::string& text);

// One vertical violin per design size, smoothed with a Gaussian kernel at the
// Silverman bandwidth, plus a dashed horizontal reference line. Groups of
// identical values degrade to a tick mark. Throws std::runtime_error when a
// group has fewer than five finite estimates.
std::string violin_svg(std::span<const ReplicationRecord> records, double reference);

// Writes records.csv, summary.txt, one violin SVG per cell id (groups with
// too few records are noted in the summary instead), and the Kakutani table
// when present. Creates the output directory if needed.
void write_scenario_outputs(const ScenarioResult& result);

}  // namespace wmf
