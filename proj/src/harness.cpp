#include "wmfield/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "wmfield/likelihood.hpp"
#include "wmfield/measures.hpp"
#include "wmfield/rng.hpp"
#include "wmfield/spectral.hpp"

namespace wmf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view sv) {
  size_t b = 0, e = sv.size();
  while (b < e && std::isspace(static_cast<unsigned char>(sv[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(sv[e - 1]))) --e;
  return std::string(sv.substr(b, e - b));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  size_t pos = 0;
  while (pos <= value.size()) {
    size_t comma = value.find(',', pos);
    if (comma == std::string::npos) comma = value.size();
    items.push_back(trim(std::string_view(value).substr(pos, comma - pos)));
    pos = comma + 1;
  }
  return items;
}

// Collects offending keys while the whole map is checked, so one error names
// everything at once.
struct Collector {
  const std::map<std::string, std::string>* kv = nullptr;
  std::vector<std::string> bad;
  std::set<std::string> seen;

  bool has(const std::string& key) {
    seen.insert(key);
    return kv->count(key) != 0;
  }
  const std::string& raw(const std::string& key) { return kv->at(key); }
  void fail(const std::string& key) {
    if (std::find(bad.begin(), bad.end(), key) == bad.end()) bad.push_back(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    char* end = nullptr;
    const std::string& v = kv->at(key);
    double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0' || !std::isfinite(x)) {
      fail(key);
      return fallback;
    }
    return x;
  }

  long long integer(const std::string& key, long long fallback) {
    if (!has(key)) return fallback;
    const std::string& v = kv->at(key);
    char* end = nullptr;
    long long x = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0') {
      fail(key);
      return fallback;
    }
    return x;
  }

  std::uint64_t unsigned64(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const std::string& v = kv->at(key);
    if (v.empty() || v[0] == '-') {
      fail(key);
      return fallback;
    }
    char* end = nullptr;
    std::uint64_t x = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0') {
      fail(key);
      return fallback;
    }
    return x;
  }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const std::string& v = kv->at(key);
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    fail(key);
    return fallback;
  }
};

std::optional<ScenarioKind> parse_kind(const std::string& v) {
  if (v == "CORRECT") return ScenarioKind::correct;
  if (v == "MISSPECIFIED_TAU") return ScenarioKind::misspecified_tau;
  if (v == "MISSPECIFIED_LAW") return ScenarioKind::misspecified_law;
  if (v == "MISSPECIFIED_KERNEL") return ScenarioKind::misspecified_kernel;
  if (v == "MICROERGODIC_CLT") return ScenarioKind::microergodic_clt;
  if (v == "KAKUTANI_TABLE") return ScenarioKind::kakutani_table;
  return std::nullopt;
}

std::optional<LawKind> parse_law(const std::string& v) {
  if (v == "gaussian") return LawKind::gaussian;
  if (v == "rademacher") return LawKind::rademacher;
  if (v == "centered_exponential") return LawKind::centered_exponential;
  if (v == "scaled_student_t") return LawKind::scaled_student_t;
  return std::nullopt;
}

double domain_floor(Domain domain) { return domain == Domain::sphere ? 1.0 : 0.5; }

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_short(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// Cell label suffix: compact, filename-friendly after sanitizing.
std::string tau_label(double tau) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", tau);
  return buf;
}

const char* law_name(LawKind kind) {
  switch (kind) {
    case LawKind::gaussian: return "gaussian";
    case LawKind::rademacher: return "rademacher";
    case LawKind::centered_exponential: return "centered_exponential";
    case LawKind::scaled_student_t: return "scaled_student_t";
  }
  return "?";
}

// R-7 quantile (linear interpolation) on a sorted vector.
double quantile_sorted(const std::vector<double>& v, double p) {
  if (v.empty()) return kNaN;
  if (v.size() == 1) return v[0];
  double h = (static_cast<double>(v.size()) - 1.0) * p;
  size_t lo = static_cast<size_t>(std::floor(h));
  size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct Cell {
  std::string id;
  CoefficientLaw law;
  double candidate_tau = 0.0;
};

struct Job {
  int cell = 0;
  int size_index = 0;
  int rep = 0;
};

int resolve_workers(int configured) {
  if (configured > 0) return configured;
  if (const char* env = std::getenv("WMFIELD_WORKERS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return 1;
}

EigenSystem table_eigensystem(int dimension, int terms) {
  switch (dimension) {
    case 1: return interval_eigensystem(terms);
    case 2: {
      int degree = 0;
      while ((degree + 1) * (degree + 1) < terms) ++degree;
      return sphere_eigensystem(degree);
    }
    default: return synthetic_weyl_eigensystem(dimension, terms);
  }
}

std::string sanitize_filename(const std::string& id) {
  std::string out;
  for (char c : id) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      out.push_back(c);
    else if (!out.empty() && out.back() != '_')
      out.push_back('_');
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << content;
}

}  // namespace

std::string scenario_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::correct: return "CORRECT";
    case ScenarioKind::misspecified_tau: return "MISSPECIFIED_TAU";
    case ScenarioKind::misspecified_law: return "MISSPECIFIED_LAW";
    case ScenarioKind::misspecified_kernel: return "MISSPECIFIED_KERNEL";
    case ScenarioKind::microergodic_clt: return "MICROERGODIC_CLT";
    case ScenarioKind::kakutani_table: return "KAKUTANI_TABLE";
  }
  return "?";
}

ConfigError::ConfigError(std::vector<std::string> offending, const std::string& detail)
    : std::runtime_error([&] {
        std::string msg = "invalid configuration";
        if (!detail.empty()) msg += " (" + detail + ")";
        msg += "; offending keys:";
        for (const auto& k : offending) msg += " " + k;
        return msg;
      }()),
      keys(std::move(offending)) {}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::vector<std::string> bad;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (size_t hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string stripped = trim(line);
    if (stripped.empty()) continue;
    size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      bad.push_back("line " + std::to_string(lineno));
      continue;
    }
    std::string key = trim(std::string_view(stripped).substr(0, eq));
    std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (key.empty()) {
      bad.push_back("line " + std::to_string(lineno));
      continue;
    }
    if (!kv.emplace(key, value).second) bad.push_back(key);
  }
  if (!bad.empty()) throw ConfigError(std::move(bad), "malformed or duplicate lines");
  return kv;
}

ScenarioConfig scenario_config_from_map(const std::map<std::string, std::string>& kv) {
  Collector c;
  c.kv = &kv;
  ScenarioConfig cfg;

  if (c.has("scenario")) {
    if (auto kind = parse_kind(c.raw("scenario")))
      cfg.kind = *kind;
    else
      c.fail("scenario");
  } else {
    c.fail("scenario");
  }

  if (c.has("domain")) {
    const std::string& v = c.raw("domain");
    if (v == "sphere")
      cfg.domain = Domain::sphere;
    else if (v == "interval")
      cfg.domain = Domain::interval;
    else
      c.fail("domain");
  }

  // Profile first: it moves the replication defaults, explicit keys still win.
  if (c.has("profile")) {
    const std::string& v = c.raw("profile");
    if (v == "desk") {
      // defaults already hold
    } else if (v == "paper") {
      cfg.sizes = {500, 1000, 2000};
      cfg.replications = 100;
    } else {
      c.fail("profile");
    }
  }

  cfg.s0 = c.number("s0", cfg.s0);
  cfg.tau0 = c.number("tau0", cfg.tau0);
  cfg.sigma0_sq = c.number("sigma0_sq", cfg.sigma0_sq);
  cfg.truncation = static_cast<int>(c.integer("truncation", cfg.truncation));

  double df = c.number("df", 4.0);
  if (c.has("law")) {
    cfg.laws.clear();
    for (const auto& item : split_list(c.raw("law"))) {
      if (auto kind = parse_law(item))
        cfg.laws.push_back({*kind, df});
      else
        c.fail("law");
    }
    if (cfg.laws.empty()) c.fail("law");
  } else {
    cfg.laws = {CoefficientLaw{LawKind::gaussian, df}};
  }

  if (c.has("normalization")) {
    const std::string& v = c.raw("normalization");
    if (v == "power")
      cfg.norm = NormalizationKind::power;
    else if (v == "unit_diagonal")
      cfg.norm = NormalizationKind::unit_diagonal;
    else if (v == "none")
      cfg.norm = NormalizationKind::none;
    else
      c.fail("normalization");
  }

  if (c.has("candidate_tau")) {
    cfg.candidate_tau.clear();
    for (const auto& item : split_list(c.raw("candidate_tau"))) {
      char* end = nullptr;
      double x = std::strtod(item.c_str(), &end);
      if (end == item.c_str() || *end != '\0' || !std::isfinite(x)) {
        c.fail("candidate_tau");
        break;
      }
      cfg.candidate_tau.push_back(x);
    }
  }

  cfg.true_kernel = c.has("true_kernel") ? c.raw("true_kernel") : cfg.true_kernel;
  c.seen.insert("true_kernel");
  cfg.matern.nu = c.number("matern_nu", cfg.matern.nu);
  cfg.matern.tau = c.number("matern_tau", cfg.matern.tau);
  cfg.matern.sigma2 = c.number("matern_sigma_sq", cfg.matern.sigma2);
  cfg.wendland.kappa = c.number("wendland_kappa", cfg.wendland.kappa);
  cfg.wendland.mu = c.number("wendland_mu", cfg.wendland.mu);
  cfg.wendland.beta = c.number("wendland_beta", cfg.wendland.beta);
  cfg.wendland.sigma2 = c.number("wendland_sigma_sq", cfg.wendland.sigma2);
  cfg.kernel_fit_s = c.number("kernel_fit_s", cfg.kernel_fit_s);

  if (c.has("sizes")) {
    cfg.sizes.clear();
    for (const auto& item : split_list(c.raw("sizes"))) {
      char* end = nullptr;
      long v = std::strtol(item.c_str(), &end, 10);
      if (end == item.c_str() || *end != '\0') {
        c.fail("sizes");
        break;
      }
      cfg.sizes.push_back(static_cast<int>(v));
    }
  }
  cfg.replications = static_cast<int>(c.integer("replications", cfg.replications));

  if (c.has("search_interval")) {
    auto parts = split_list(c.raw("search_interval"));
    bool ok = parts.size() == 2;
    if (ok) {
      char* e1 = nullptr;
      char* e2 = nullptr;
      cfg.search_lo = std::strtod(parts[0].c_str(), &e1);
      cfg.search_hi = std::strtod(parts[1].c_str(), &e2);
      ok = e1 != parts[0].c_str() && *e1 == '\0' && e2 != parts[1].c_str() && *e2 == '\0';
    }
    if (!ok) c.fail("search_interval");
  }

  if (c.has("tau_bounds")) {
    auto parts = split_list(c.raw("tau_bounds"));
    bool ok = parts.size() == 2;
    if (ok) {
      char* e1 = nullptr;
      char* e2 = nullptr;
      cfg.tau_lo = std::strtod(parts[0].c_str(), &e1);
      cfg.tau_hi = std::strtod(parts[1].c_str(), &e2);
      ok = e1 != parts[0].c_str() && *e1 == '\0' && e2 != parts[1].c_str() && *e2 == '\0';
    }
    if (!ok) c.fail("tau_bounds");
  }

  cfg.grid_step = c.number("grid_step", cfg.grid_step);
  cfg.refine_tol = c.number("refine_tol", cfg.refine_tol);
  cfg.tau_grid_step = c.number("tau_grid_step", cfg.tau_grid_step);
  cfg.master_seed = c.unsigned64("master_seed", cfg.master_seed);
  if (c.has("out_dir")) cfg.out_dir = c.raw("out_dir");
  c.seen.insert("out_dir");
  cfg.workers = static_cast<int>(c.integer("workers", cfg.workers));
  cfg.timing = c.flag("timing", cfg.timing);
  cfg.kakutani_terms = static_cast<int>(c.integer("kakutani_terms", cfg.kakutani_terms));

  for (const auto& [key, value] : kv)
    if (!c.seen.count(key)) c.fail(key);

  if (!c.bad.empty()) throw ConfigError(std::move(c.bad), "unknown keys or unparsable values");

  validate_scenario_config(cfg);
  return cfg;
}

ScenarioConfig load_scenario_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError({"config"}, "cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return scenario_config_from_map(parse_config_text(buf.str()));
}

void validate_scenario_config(const ScenarioConfig& cfg) {
  std::vector<std::string> bad;
  auto fail = [&bad](const char* key) {
    if (std::find(bad.begin(), bad.end(), key) == bad.end()) bad.push_back(key);
  };

  const double floor = domain_floor(cfg.domain);
  if (!(cfg.s0 > floor)) fail("s0");
  if (!(cfg.tau0 > 0.0)) fail("tau0");
  if (!(cfg.sigma0_sq > 0.0)) fail("sigma0_sq");
  if (cfg.truncation < 1) fail("truncation");
  if (cfg.laws.empty()) fail("law");
  for (const auto& law : cfg.laws)
    if (law.kind == LawKind::scaled_student_t && !(law.df > 2.0)) fail("df");
  if (cfg.laws.size() > 1 && cfg.kind != ScenarioKind::misspecified_law) fail("law");
  for (double t : cfg.candidate_tau)
    if (!(t > 0.0)) fail("candidate_tau");
  if (cfg.candidate_tau.size() > 1 && cfg.kind != ScenarioKind::misspecified_tau)
    fail("candidate_tau");
  if (cfg.kind == ScenarioKind::misspecified_kernel) {
    if (cfg.true_kernel != "matern" && cfg.true_kernel != "wendland") fail("true_kernel");
    if (!(cfg.matern.nu > 0.0)) fail("matern_nu");
    if (!(cfg.matern.tau > 0.0)) fail("matern_tau");
    if (!(cfg.matern.sigma2 > 0.0)) fail("matern_sigma_sq");
    if (!(cfg.wendland.kappa >= 0.0)) fail("wendland_kappa");
    if (!(cfg.wendland.mu > 0.0)) fail("wendland_mu");
    if (!(cfg.wendland.beta > 0.0)) fail("wendland_beta");
    if (!(cfg.wendland.sigma2 > 0.0)) fail("wendland_sigma_sq");
    if (!(cfg.kernel_fit_s > floor)) fail("kernel_fit_s");
  }
  if (cfg.sizes.empty()) fail("sizes");
  for (int n : cfg.sizes)
    if (n < 1) fail("sizes");
  if (cfg.replications < 1) fail("replications");
  if (!(cfg.search_lo > floor)) fail("search_interval");
  if (!(cfg.search_hi >= cfg.search_lo)) fail("search_interval");
  if (!(cfg.tau_lo >= 1.0) || !(cfg.tau_hi >= cfg.tau_lo)) fail("tau_bounds");
  if (!(cfg.grid_step > 0.0)) fail("grid_step");
  if (!(cfg.refine_tol > 0.0)) fail("refine_tol");
  if (!(cfg.tau_grid_step > 0.0)) fail("tau_grid_step");
  if (cfg.workers < 0) fail("workers");
  if (cfg.kakutani_terms < 100) fail("kakutani_terms");

  if (!bad.empty()) throw ConfigError(std::move(bad), "constraint violations");
}

std::uint64_t replication_seed(std::uint64_t master, ScenarioKind kind, int variant, int n,
                               int rep) {
  std::uint64_t tag = (static_cast<std::uint64_t>(kind) << 32) |
                      static_cast<std::uint64_t>(static_cast<std::uint32_t>(variant));
  return derive_seed(master, tag, static_cast<std::uint64_t>(n),
                     static_cast<std::uint64_t>(rep));
}

std::vector<SummaryCell> summarize(std::span<const ReplicationRecord> records, double s0) {
  // Key order = first appearance in the (sorted) record list.
  std::vector<SummaryCell> cells;
  auto find_cell = [&cells](const std::string& id, int n) -> SummaryCell& {
    for (auto& cell : cells)
      if (cell.scenario == id && cell.n == n) return cell;
    cells.push_back(SummaryCell{id, n});
    return cells.back();
  };

  for (const auto& r : records) {
    SummaryCell& cell = find_cell(r.scenario, r.n);
    if (std::isfinite(r.s_hat)) {
      ++cell.count;
      cell.mean_s += r.s_hat;
      cell.mean_sigma2 += r.sigma2_hat;
    } else {
      ++cell.failures;
    }
  }
  for (auto& cell : cells) {
    std::vector<double> values;
    for (const auto& r : records)
      if (r.scenario == cell.scenario && r.n == cell.n && std::isfinite(r.s_hat))
        values.push_back(r.s_hat);
    std::sort(values.begin(), values.end());
    if (!values.empty()) {
      cell.mean_s /= cell.count;
      cell.mean_sigma2 /= cell.count;
      cell.median_s = quantile_sorted(values, 0.5);
      cell.iqr_s = quantile_sorted(values, 0.75) - quantile_sorted(values, 0.25);
      cell.bias_s = cell.mean_s - s0;
    } else {
      cell.median_s = cell.mean_s = cell.iqr_s = cell.bias_s = cell.mean_sigma2 = kNaN;
    }
  }
  return cells;
}

std::string summary_text(std::span<const SummaryCell> cells) {
  std::string out;
  for (const auto& cell : cells) {
    out += cell.scenario + " n=" + std::to_string(cell.n) +
           " count=" + std::to_string(cell.count) +
           " failures=" + std::to_string(cell.failures) +
           " median_s=" + format_short(cell.median_s) + " mean_s=" + format_short(cell.mean_s) +
           " iqr_s=" + format_short(cell.iqr_s) + " bias_s=" + format_short(cell.bias_s) +
           " mean_sigma2=" + format_short(cell.mean_sigma2) + "\n";
  }
  return out;
}

namespace {

std::string kakutani_table_text(const ScenarioConfig& cfg) {
  const CoefficientLaw law = cfg.laws.front();
  std::string out =
      "d,case,verdict,analytic,tail_slope,tail_estimate,rule\n";
  for (int d = 1; d <= 4; ++d) {
    EigenSystem es = table_eigensystem(d, cfg.kakutani_terms);
    int terms = std::min<int>(cfg.kakutani_terms, static_cast<int>(es.lambda.size()));
    SpectralParams p1{2.0 + 0.5 * d, 1.0, 1.0, NormalizationKind::power};
    struct Case {
      const char* name;
      SpectralParams p2;
    };
    // Matched partner keeps sigma2 tau^{-s+d/2} fixed while moving tau.
    SpectralParams matched = p1;
    matched.tau = 2.0;
    matched.sigma2 = p1.sigma2 * std::pow(p1.tau, -p1.s + 0.5 * d) /
                     std::pow(matched.tau, -matched.s + 0.5 * d);
    SpectralParams sigma_off = p1;
    sigma_off.sigma2 = 1.7;
    SpectralParams s_off = p1;
    s_off.s += 0.5;
    const Case cases[] = {{"matched", matched}, {"sigma_mismatch", sigma_off},
                          {"s_mismatch", s_off}};
    for (const auto& cs : cases) {
      KakutaniReport rep = kakutani_classify(p1, cs.p2, law, es, terms, d);
      out += std::to_string(d);
      out += ",";
      out += cs.name;
      out += ",";
      out += verdict_name(rep.verdict);
      out += ",";
      out += verdict_name(rep.analytic_verdict);
      out += ",";
      out += format_short(rep.tail_slope);
      out += ",";
      out += format_short(rep.tail_estimate);
      out += ",";
      std::string rule = rep.rule;
      std::replace(rule.begin(), rule.end(), ',', ';');
      out += rule;
      out += "\n";
    }
  }
  return out;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  validate_scenario_config(cfg);

  ScenarioResult result;
  result.config = cfg;

  if (cfg.kind == ScenarioKind::kakutani_table) {
    result.kakutani_table = kakutani_table_text(cfg);
    return result;
  }

  // Cells: one per candidate tau or per coefficient law; one otherwise.
  std::vector<Cell> cells;
  const std::string base = scenario_name(cfg.kind);
  const double default_tau = cfg.candidate_tau.empty() ? cfg.tau0 : cfg.candidate_tau.front();
  switch (cfg.kind) {
    case ScenarioKind::misspecified_tau:
      for (double t : cfg.candidate_tau.empty() ? std::vector<double>{cfg.tau0}
                                                : cfg.candidate_tau)
        cells.push_back({base + "[tau=" + tau_label(t) + "]", cfg.laws.front(), t});
      break;
    case ScenarioKind::misspecified_law:
      for (const auto& law : cfg.laws)
        cells.push_back({base + "[" + law_name(law.kind) + "]", law, default_tau});
      break;
    default:
      cells.push_back({base, cfg.laws.front(), default_tau});
      break;
  }

  // The design is a fixed function of n; only coefficient seeds vary.
  std::vector<PointSet> designs;
  designs.reserve(cfg.sizes.size());
  for (int n : cfg.sizes)
    designs.push_back(cfg.domain == Domain::sphere ? deserno_sphere(n)
                                                   : uniform_grid_interval(n));

  const SpectralParams truth{cfg.s0, cfg.tau0, cfg.sigma0_sq, cfg.norm};

  KernelModel euclid_truth;
  if (cfg.kind == ScenarioKind::misspecified_kernel) {
    if (cfg.true_kernel == "matern")
      euclid_truth = cfg.matern;
    else
      euclid_truth = cfg.wendland;
    // Range and magnitude of the candidate family are fixed from the target
    // curve once, before any optimization.
    std::vector<double> grid(101);
    for (size_t i = 0; i < grid.size(); ++i)
      grid[i] = 2.0 * static_cast<double>(i) / (grid.size() - 1);
    TruncatedSpectral family{{cfg.kernel_fit_s, cfg.tau0, 1.0, cfg.norm}, cfg.truncation};
    result.auxiliary =
        fit_auxiliary_parameters(euclid_truth, cfg.domain, family, grid);
  }

  // Families are built once per (cell, size) and shared read-only by workers.
  struct CellModels {
    std::vector<SmoothnessFamily> smoothness;  // per size; empty for clt
    std::vector<RangeFamily> range;            // clt only
  };
  std::vector<CellModels> models(cells.size());
  for (size_t ci = 0; ci < cells.size(); ++ci) {
    for (const auto& ps : designs) {
      if (cfg.kind == ScenarioKind::microergodic_clt) {
        models[ci].range.push_back(
            spectral_range_family(ps, cfg.truncation, cfg.s0, cfg.norm));
      } else {
        std::optional<double> fixed;
        double tau = cells[ci].candidate_tau;
        if (cfg.kind == ScenarioKind::correct || cfg.kind == ScenarioKind::misspecified_law)
          fixed = cfg.sigma0_sq;
        if (cfg.kind == ScenarioKind::misspecified_kernel) {
          tau = result.auxiliary->scale;
          fixed = result.auxiliary->sigma2;
        }
        models[ci].smoothness.push_back(
            spectral_smoothness_family(ps, cfg.truncation, tau, cfg.norm, fixed));
      }
    }
  }

  std::vector<Job> jobs;
  for (size_t ci = 0; ci < cells.size(); ++ci)
    for (size_t si = 0; si < designs.size(); ++si)
      for (int rep = 0; rep < cfg.replications; ++rep)
        jobs.push_back({static_cast<int>(ci), static_cast<int>(si), rep});

  result.records.assign(jobs.size(), ReplicationRecord{});

  SearchOptions search;
  search.grid_step = cfg.grid_step;
  search.refine_tol = cfg.refine_tol;
  SearchOptions tau_search;
  tau_search.grid_step = cfg.tau_grid_step;
  tau_search.refine_tol = cfg.refine_tol;

  std::atomic<size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&] {
    for (;;) {
      size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      const Job job = jobs[j];
      const Cell& cell = cells[job.cell];
      const PointSet& ps = designs[job.size_index];
      const int n = static_cast<int>(ps.size());

      ReplicationRecord rec;
      rec.scenario = cell.id;
      rec.n = n;
      rec.rep = job.rep;
      rec.seed = replication_seed(cfg.master_seed, cfg.kind, job.cell, n, job.rep);
      rec.s_hat = kNaN;
      rec.sigma2_hat = kNaN;

      try {
        FieldSample sample =
            cfg.kind == ScenarioKind::misspecified_kernel
                ? sample_gaussian_direct(euclid_truth, ps, rec.seed)
                : sample_kl(truth, cfg.truncation, cell.law, ps, rec.seed);

        const auto t0 = std::chrono::steady_clock::now();
        Eigen::MatrixXd accepted_gram;
        if (cfg.kind == ScenarioKind::microergodic_clt) {
          const RangeFamily& fam = models[job.cell].range[job.size_index];
          EstimationResult est =
              estimate_range_and_magnitude(fam, sample.values, cfg.tau_lo, cfg.tau_hi,
                                           tau_search);
          rec.s_hat = cfg.s0;
          rec.sigma2_hat = est.microergodic;  // the consistently estimable product
          rec.boundary = est.boundary;
          accepted_gram = fam.gram(*est.tau_hat);
        } else {
          const SmoothnessFamily& fam = models[job.cell].smoothness[job.size_index];
          EstimationResult est =
              estimate_smoothness(fam, sample.values, cfg.search_lo, cfg.search_hi, search);
          rec.s_hat = est.s_hat;
          rec.sigma2_hat = est.sigma2_hat;
          rec.boundary = est.boundary;
          accepted_gram = fam.gram(est.s_hat);
        }
        if (cfg.timing) {
          const auto t1 = std::chrono::steady_clock::now();
          rec.ms_elapsed = std::chrono::duration<double, std::milli>(t1 - t0).count();
        }
        try {
          CholeskyFactor chol(std::move(accepted_gram));
          rec.cond_min = chol.min_diag();
          rec.cond_max = chol.max_diag();
        } catch (const NearSingularError&) {
          // keep zeros; the estimate itself already survived
        }
      } catch (const EstimationError&) {
        // recorded as a NaN row
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
      result.records[j] = std::move(rec);
    }
  };

  const int workers = std::min<int>(resolve_workers(cfg.workers),
                                    static_cast<int>(jobs.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::sort(result.records.begin(), result.records.end(),
            [](const ReplicationRecord& a, const ReplicationRecord& b) {
              if (a.scenario != b.scenario) return a.scenario < b.scenario;
              if (a.n != b.n) return a.n < b.n;
              return a.rep < b.rep;
            });
  result.cells = summarize(result.records, cfg.s0);
  return result;
}

std::string csv_from_records(std::span<const ReplicationRecord> records) {
  std::string out = kRecordCsvHeader;
  out += "\n";
  for (const auto& r : records) {
    out += r.scenario;
    out += "," + std::to_string(r.n);
    out += "," + std::to_string(r.rep);
    out += "," + std::to_string(r.seed);
    out += "," + format_double(r.s_hat);
    out += "," + format_double(r.sigma2_hat);
    out += r.boundary ? ",1" : ",0";
    out += "," + format_double(r.cond_min);
    out += "," + format_double(r.cond_max);
    out += "," + format_double(r.ms_elapsed);
    out += "\n";
  }
  return out;
}

std::vector<ReplicationRecord> records_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kRecordCsvHeader)
    throw std::runtime_error("unexpected record CSV header");
  std::vector<ReplicationRecord> out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_list(line);
    if (fields.size() != 10)
      throw std::runtime_error("record CSV line " + std::to_string(lineno) +
                               ": expected 10 fields");
    ReplicationRecord r;
    r.scenario = fields[0];
    r.n = std::stoi(fields[1]);
    r.rep = std::stoi(fields[2]);
    r.seed = std::stoull(fields[3]);
    r.s_hat = std::strtod(fields[4].c_str(), nullptr);
    r.sigma2_hat = std::strtod(fields[5].c_str(), nullptr);
    r.boundary = fields[6] == "1";
    r.cond_min = std::strtod(fields[7].c_str(), nullptr);
    r.cond_max = std::strtod(fields[8].c_str(), nullptr);
    r.ms_elapsed = std::strtod(fields[9].c_str(), nullptr);
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

std::string svg_num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

}  // namespace

std::string violin_svg(std::span<const ReplicationRecord> records, double reference) {
  // Groups keyed by n, in increasing order.
  std::map<int, std::vector<double>> groups;
  for (const auto& r : records)
    if (std::isfinite(r.s_hat)) groups[r.n].push_back(r.s_hat);
  if (groups.empty()) throw std::runtime_error("violin plot: no finite estimates");
  for (auto& [n, v] : groups) {
    if (v.size() < 5)
      throw std::runtime_error("violin plot: group n=" + std::to_string(n) +
                               " has fewer than 5 records");
    std::sort(v.begin(), v.end());
  }

  double lo = reference, hi = reference;
  for (const auto& [n, v] : groups) {
    lo = std::min(lo, v.front());
    hi = std::max(hi, v.back());
  }
  double span = hi - lo;
  if (span <= 0.0) span = std::max(1.0, std::abs(hi));
  lo -= 0.08 * span;
  hi += 0.08 * span;

  const int G = static_cast<int>(groups.size());
  const double cell_w = 140.0, left = 70.0, top = 30.0, plot_h = 420.0;
  const double width = left + cell_w * G + 30.0;
  const double height = top + plot_h + 50.0;
  auto y_of = [&](double value) { return top + (hi - value) / (hi - lo) * plot_h; };

  std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
         svg_num(width) + "\" height=\"" + svg_num(height) + "\" viewBox=\"0 0 " +
         svg_num(width) + " " + svg_num(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // y axis with 5 labeled ticks
  svg += "<line x1=\"" + svg_num(left) + "\" y1=\"" + svg_num(top) + "\" x2=\"" +
         svg_num(left) + "\" y2=\"" + svg_num(top + plot_h) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    double value = lo + (hi - lo) * t / 4.0;
    double y = y_of(value);
    svg += "<line x1=\"" + svg_num(left - 5) + "\" y1=\"" + svg_num(y) + "\" x2=\"" +
           svg_num(left) + "\" y2=\"" + svg_num(y) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + svg_num(left - 10) + "\" y=\"" + svg_num(y + 4) +
           "\" font-size=\"12\" text-anchor=\"end\">" + format_short(value) + "</text>\n";
  }

  int gi = 0;
  for (const auto& [n, v] : groups) {
    const double cx = left + cell_w * (gi + 0.5);
    const size_t m = v.size();
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(m > 1 ? m - 1 : 1);
    const double sd = std::sqrt(var);
    const double iqr = quantile_sorted(v, 0.75) - quantile_sorted(v, 0.25);
    double spread = std::min(sd, iqr / 1.34);
    if (spread <= 0.0) spread = sd;
    const double bw = 0.9 * spread * std::pow(static_cast<double>(m), -0.2);

    if (!(bw > 0.0)) {
      // all values equal: a tick instead of a silhouette
      double y = y_of(v.front());
      svg += "<line class=\"tick\" x1=\"" + svg_num(cx - 25) + "\" y1=\"" + svg_num(y) +
             "\" x2=\"" + svg_num(cx + 25) + "\" y2=\"" + svg_num(y) +
             "\" stroke=\"#335577\" stroke-width=\"3\"/>\n";
    } else {
      const int pts = 81;
      const double klo = std::max(lo, v.front() - 3.0 * bw);
      const double khi = std::min(hi, v.back() + 3.0 * bw);
      std::vector<double> ys(pts), dens(pts);
      double dmax = 0.0;
      for (int i = 0; i < pts; ++i) {
        ys[i] = klo + (khi - klo) * i / (pts - 1);
        double acc = 0.0;
        for (double x : v) {
          double z = (ys[i] - x) / bw;
          acc += std::exp(-0.5 * z * z);
        }
        dens[i] = acc;
        dmax = std::max(dmax, acc);
      }
      const double half_w = 0.42 * cell_w;
      std::string path = "M";
      for (int i = 0; i < pts; ++i) {
        double w = half_w * dens[i] / dmax;
        path += (i ? " L" : "") + std::string(" ") + svg_num(cx + w) + " " +
                svg_num(y_of(ys[i]));
      }
      for (int i = pts - 1; i >= 0; --i) {
        double w = half_w * dens[i] / dmax;
        path += " L " + svg_num(cx - w) + " " + svg_num(y_of(ys[i]));
      }
      path += " Z";
      svg += "<path class=\"violin\" d=\"" + path +
             "\" fill=\"#9db8d2\" stroke=\"#335577\" stroke-width=\"1\"/>\n";
      double ym = y_of(quantile_sorted(v, 0.5));
      svg += "<line x1=\"" + svg_num(cx - 12) + "\" y1=\"" + svg_num(ym) + "\" x2=\"" +
             svg_num(cx + 12) + "\" y2=\"" + svg_num(ym) +
             "\" stroke=\"#102a43\" stroke-width=\"2\"/>\n";
    }
    svg += "<text x=\"" + svg_num(cx) + "\" y=\"" + svg_num(top + plot_h + 22) +
           "\" font-size=\"13\" text-anchor=\"middle\">n=" + std::to_string(n) +
           "</text>\n";
    ++gi;
  }

  double yr = y_of(reference);
  svg += "<line class=\"reference\" x1=\"" + svg_num(left) + "\" y1=\"" + svg_num(yr) +
         "\" x2=\"" + svg_num(left + cell_w * G) + "\" y2=\"" + svg_num(yr) +
         "\" stroke=\"#aa3333\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>\n";
  svg += "</svg>\n";
  return svg;
}

void write_scenario_outputs(const ScenarioResult& result) {
  namespace fs = std::filesystem;
  const fs::path dir = result.config.out_dir;
  fs::create_directories(dir);

  std::string notes;
  if (!result.records.empty())
    write_file(dir / "records.csv", csv_from_records(result.records));
  if (!result.kakutani_table.empty())
    write_file(dir / "kakutani_table.csv", result.kakutani_table);

  // One violin per cell id.
  std::set<std::string> ids;
  for (const auto& r : result.records) ids.insert(r.scenario);
  for (const auto& id : ids) {
    std::vector<ReplicationRecord> subset;
    for (const auto& r : result.records)
      if (r.scenario == id) subset.push_back(r);
    try {
      write_file(dir / ("violin_" + sanitize_filename(id) + ".svg"),
                 violin_svg(subset, result.config.s0));
    } catch (const std::runtime_error& err) {
      notes += std::string("no violin for ") + id + ": " + err.what() + "\n";
    }
  }

  std::string summary = summary_text(result.cells);
  if (result.auxiliary) {
    summary += "auxiliary_fit scale=" + format_short(result.auxiliary->scale) +
               " sigma2=" + format_short(result.auxiliary->sigma2) +
               " residual=" + format_short(result.auxiliary->residual) + "\n";
  }
  summary += notes;
  write_file(dir / "summary.txt", summary);
}

}  // namespace wmf
