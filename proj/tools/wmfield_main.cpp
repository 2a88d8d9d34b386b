#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wmfield/harness.hpp"
#include "wmfield/likelihood.hpp"
#include "wmfield/measures.hpp"
#include "wmfield/spectral.hpp"

namespace {

using namespace wmf;

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Domain parse_domain(const std::string& name) {
  if (name == "sphere") return Domain::sphere;
  if (name == "interval") return Domain::interval;
  throw ConfigError({"domain"}, "expected sphere or interval, got " + name);
}

NormalizationKind parse_norm(const std::string& name) {
  if (name == "power") return NormalizationKind::power;
  if (name == "unit_diagonal") return NormalizationKind::unit_diagonal;
  if (name == "none") return NormalizationKind::none;
  throw ConfigError({"normalization"}, "expected power, unit_diagonal, or none");
}

CoefficientLaw parse_law_flag(const std::string& name, double df) {
  if (name == "gaussian") return {LawKind::gaussian, df};
  if (name == "rademacher") return {LawKind::rademacher, df};
  if (name == "centered_exponential") return {LawKind::centered_exponential, df};
  if (name == "scaled_student_t") return {LawKind::scaled_student_t, df};
  throw ConfigError({"law"}, "unknown coefficient law " + name);
}

PointSet build_design(Domain domain, int n) {
  return domain == Domain::sphere ? deserno_sphere(n) : uniform_grid_interval(n);
}

struct PointData {
  PointSet points;
  std::vector<double> values;
};

// simulate's own output: header x,y,z,value; diagnostics also accepts bare
// x,y,z point lists.
PointData read_points_csv(const std::string& path, Domain domain) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError({"input"}, "cannot open " + path);
  PointData data;
  data.points.domain = domain;
  std::string line;
  if (!std::getline(is, line))
    throw std::runtime_error(path + ": empty input");
  bool with_values = line == "x,y,z,value";
  if (!with_values && line != "x,y,z")
    throw std::runtime_error(path + ": expected header x,y,z,value or x,y,z");
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<double> row;
    while (std::getline(ls, field, ',')) row.push_back(std::strtod(field.c_str(), nullptr));
    if (row.size() != (with_values ? 4u : 3u))
      throw std::runtime_error(path + ": bad field count on line " + std::to_string(lineno));
    data.points.points.push_back({row[0], row[1], row[2]});
    if (with_values) data.values.push_back(row[3]);
  }
  if (data.points.points.empty()) throw std::runtime_error(path + ": no points");
  return data;
}

int run_simulate(int n, std::uint64_t seed, const std::string& out, Domain domain, double s0,
                 double tau0, double sigma0_sq, const CoefficientLaw& law, int truncation,
                 NormalizationKind norm) {
  PointSet ps = build_design(domain, n);
  SpectralParams truth{s0, tau0, sigma0_sq, norm};
  FieldSample sample = sample_kl(truth, truncation, law, ps, seed);
  std::ofstream os(out, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + out);
  os << "x,y,z,value\n";
  for (size_t i = 0; i < ps.size(); ++i) {
    const auto& p = ps.points[i];
    os << fmt(p[0]) << "," << fmt(p[1]) << "," << fmt(p[2]) << "," << fmt(sample.values[i])
       << "\n";
  }
  std::cout << "n=" << ps.size() << " seed=" << seed << " out=" << out << "\n";
  return 0;
}

int run_estimate(const std::string& input, Domain domain, double tau, int truncation,
                 NormalizationKind norm, std::optional<double> fixed_sigma2, double s_min,
                 double s_max, double grid_step, double refine_tol) {
  PointData data = read_points_csv(input, domain);
  if (data.values.empty())
    throw std::runtime_error(input + ": no value column to estimate from");
  SmoothnessFamily family =
      spectral_smoothness_family(data.points, truncation, tau, norm, fixed_sigma2);
  SearchOptions opts;
  opts.grid_step = grid_step;
  opts.refine_tol = refine_tol;
  EstimationResult est = estimate_smoothness(family, data.values, s_min, s_max, opts);
  std::cout << "s_hat=" << fmt(est.s_hat) << "\n"
            << "sigma2_hat=" << fmt(est.sigma2_hat) << "\n"
            << "microergodic=" << fmt(est.microergodic) << "\n"
            << "loglik=" << fmt(est.loglik) << "\n"
            << "boundary=" << (est.boundary ? 1 : 0) << "\n"
            << "evaluations=" << est.trace.size() << "\n";
  return 0;
}

int run_scenario_cmd(const std::string& config_path, int workers,
                     const std::string& out_dir) {
  ScenarioConfig cfg = load_scenario_config(config_path);
  if (workers > 0) cfg.workers = workers;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  ScenarioResult result = run_scenario(cfg);
  write_scenario_outputs(result);
  std::cout << summary_text(result.cells);
  if (result.auxiliary)
    std::cout << "auxiliary_fit scale=" << fmt(result.auxiliary->scale)
              << " sigma2=" << fmt(result.auxiliary->sigma2) << "\n";
  if (!result.kakutani_table.empty()) std::cout << result.kakutani_table;
  std::cout << "records=" << result.records.size() << " out_dir=" << cfg.out_dir << "\n";
  return 0;
}

int run_kakutani(int d, int terms, const CoefficientLaw& law, NormalizationKind norm,
                 double s1, double tau1, double sig1, double s2, double tau2, double sig2) {
  EigenSystem es;
  switch (d) {
    case 1: es = interval_eigensystem(terms); break;
    case 2: {
      int degree = 0;
      while ((degree + 1) * (degree + 1) < terms) ++degree;
      es = sphere_eigensystem(degree);
      break;
    }
    default: es = synthetic_weyl_eigensystem(d, terms); break;
  }
  int count = std::min<int>(terms, static_cast<int>(es.lambda.size()));
  SpectralParams p1{s1, tau1, sig1, norm};
  SpectralParams p2{s2, tau2, sig2, norm};
  KakutaniReport rep = kakutani_classify(p1, p2, law, es, count, d);
  std::cout << "dimension=" << d << "\n"
            << "terms=" << count << "\n"
            << "verdict=" << verdict_name(rep.verdict) << "\n"
            << "analytic=" << verdict_name(rep.analytic_verdict) << "\n"
            << "rule=" << rep.rule << "\n"
            << "tail_slope=" << fmt(rep.tail_slope) << "\n"
            << "tail_estimate=" << fmt(rep.tail_estimate) << "\n"
            << "partial_sum=" << fmt(rep.partial_sums.empty() ? 0.0 : rep.partial_sums.back())
            << "\n";
  return 0;
}

int run_diagnostics(const std::string& input, int n, Domain domain, int resolution) {
  PointSet ps;
  if (!input.empty()) {
    ps = read_points_csv(input, domain).points;
  } else if (n > 0) {
    ps = build_design(domain, n);
  } else {
    throw ConfigError({"input", "n"}, "need --input or --n");
  }
  DesignDiagnostics diag = design_diagnostics(ps, resolution);
  std::cout << "n=" << ps.size() << "\n"
            << "fill=" << fmt(diag.fill) << "\n"
            << "separation=" << fmt(diag.separation) << "\n"
            << "mesh_ratio=" << fmt(diag.mesh_ratio) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Whittle-Matern random fields on the sphere: simulation, smoothness "
               "estimation, and product-measure classification"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "draw one field sample and write point values");
  int sim_n = 100;
  std::uint64_t sim_seed = 1;
  std::string sim_out;
  std::string sim_domain = "sphere", sim_law = "gaussian", sim_norm = "unit_diagonal";
  double sim_s0 = 5.0, sim_tau0 = 20.0, sim_sigma0 = 1.0, sim_df = 4.0;
  int sim_trunc = 100;
  sim->add_option("--n", sim_n, "design size")->required();
  sim->add_option("--seed", sim_seed, "sample seed")->required();
  sim->add_option("--out", sim_out, "output CSV path")->required();
  sim->add_option("--domain", sim_domain, "sphere | interval");
  sim->add_option("--s0", sim_s0, "true smoothness");
  sim->add_option("--tau0", sim_tau0, "true range scale");
  sim->add_option("--sigma0-sq", sim_sigma0, "true magnitude");
  sim->add_option("--law", sim_law, "coefficient law");
  sim->add_option("--df", sim_df, "degrees of freedom for scaled_student_t");
  sim->add_option("--truncation", sim_trunc, "expansion truncation");
  sim->add_option("--normalization", sim_norm, "power | unit_diagonal | none");

  // estimate
  auto* est = app.add_subcommand("estimate", "maximize the likelihood over smoothness");
  std::string est_input, est_domain = "sphere", est_norm = "unit_diagonal";
  double est_tau = 20.0, est_smin = 1.0 + 1e-7, est_smax = 30.0;
  double est_grid = 0.25, est_tol = 1e-4, est_sigma = 0.0;
  bool est_fixed_sigma = false;
  int est_trunc = 100;
  est->add_option("--input", est_input, "CSV with x,y,z,value rows")->required();
  est->add_option("--domain", est_domain, "sphere | interval");
  est->add_option("--tau", est_tau, "candidate range scale");
  est->add_option("--truncation", est_trunc, "expansion truncation");
  est->add_option("--normalization", est_norm, "power | unit_diagonal | none");
  auto* sig_opt =
      est->add_option("--sigma-sq", est_sigma, "fix the magnitude instead of profiling");
  est->add_option("--s-min", est_smin, "search lower end");
  est->add_option("--s-max", est_smax, "search upper end");
  est->add_option("--grid-step", est_grid, "coarse grid step");
  est->add_option("--tol", est_tol, "refinement bracket width");

  // scenario
  auto* sc = app.add_subcommand("scenario", "run a replication study from a config file");
  std::string sc_config, sc_out;
  int sc_workers = 0;
  sc->add_option("--config", sc_config, "flat key = value config file")->required();
  sc->add_option("--workers", sc_workers, "worker threads (overrides config and env)");
  sc->add_option("--out-dir", sc_out, "output directory (overrides config)");

  // kakutani
  auto* kak = app.add_subcommand("kakutani", "classify two parameter sets as "
                                             "equivalent or orthogonal");
  int kak_d = 2, kak_terms = 100000;
  std::string kak_law = "gaussian", kak_norm = "power";
  double kak_df = 4.0;
  double kak_s1 = 3.0, kak_tau1 = 1.0, kak_sig1 = 1.0;
  double kak_s2 = 3.0, kak_tau2 = 2.0, kak_sig2 = 1.0;
  kak->add_option("--d", kak_d, "manifold dimension (1-4)");
  kak->add_option("--terms", kak_terms, "Kakutani sum length");
  kak->add_option("--law", kak_law, "coefficient law");
  kak->add_option("--df", kak_df, "degrees of freedom for scaled_student_t");
  kak->add_option("--normalization", kak_norm, "power | unit_diagonal | none");
  kak->add_option("--s1", kak_s1, "first smoothness");
  kak->add_option("--tau1", kak_tau1, "first range scale");
  kak->add_option("--sigma1-sq", kak_sig1, "first magnitude");
  kak->add_option("--s2", kak_s2, "second smoothness");
  kak->add_option("--tau2", kak_tau2, "second range scale");
  kak->add_option("--sigma2-sq", kak_sig2, "second magnitude");

  // diagnostics
  auto* dg = app.add_subcommand("diagnostics", "fill, separation, and mesh ratio of a design");
  std::string dg_input, dg_domain = "sphere";
  int dg_n = 0, dg_resolution = 20000;
  dg->add_option("--input", dg_input, "CSV of points (x,y,z header)");
  dg->add_option("--n", dg_n, "generate the standard design of this size instead");
  dg->add_option("--domain", dg_domain, "sphere | interval");
  dg->add_option("--resolution", dg_resolution, "candidate count for the fill estimate");

  try {
    app.parse(argc, argv);
    if (sim->parsed())
      return run_simulate(sim_n, sim_seed, sim_out, parse_domain(sim_domain), sim_s0, sim_tau0,
                          sim_sigma0, parse_law_flag(sim_law, sim_df), sim_trunc,
                          parse_norm(sim_norm));
    if (est->parsed()) {
      est_fixed_sigma = sig_opt->count() > 0;
      return run_estimate(est_input, parse_domain(est_domain), est_tau, est_trunc,
                          parse_norm(est_norm),
                          est_fixed_sigma ? std::optional<double>(est_sigma) : std::nullopt,
                          est_smin, est_smax, est_grid, est_tol);
    }
    if (sc->parsed()) return run_scenario_cmd(sc_config, sc_workers, sc_out);
    if (kak->parsed())
      return run_kakutani(kak_d, kak_terms, parse_law_flag(kak_law, kak_df),
                          parse_norm(kak_norm), kak_s1, kak_tau1, kak_sig1, kak_s2, kak_tau2,
                          kak_sig2);
    if (dg->parsed()) return run_diagnostics(dg_input, dg_n, parse_domain(dg_domain),
                                             dg_resolution);
    return 1;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
}
