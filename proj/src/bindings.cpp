#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "wmfield/harness.hpp"
#include "wmfield/likelihood.hpp"
#include "wmfield/measures.hpp"
#include "wmfield/spectral.hpp"

namespace py = pybind11;
using namespace wmf;

namespace {

Domain domain_from(const std::string& name) {
  if (name == "sphere") return Domain::sphere;
  if (name == "interval") return Domain::interval;
  throw std::invalid_argument("domain must be sphere or interval");
}

NormalizationKind norm_from(const std::string& name) {
  if (name == "power") return NormalizationKind::power;
  if (name == "unit_diagonal") return NormalizationKind::unit_diagonal;
  if (name == "none") return NormalizationKind::none;
  throw std::invalid_argument("normalization must be power, unit_diagonal, or none");
}

CoefficientLaw law_from(const std::string& name, double df) {
  if (name == "gaussian") return {LawKind::gaussian, df};
  if (name == "rademacher") return {LawKind::rademacher, df};
  if (name == "centered_exponential") return {LawKind::centered_exponential, df};
  if (name == "scaled_student_t") return {LawKind::scaled_student_t, df};
  throw std::invalid_argument("unknown coefficient law " + name);
}

PointSet design_for(const std::string& domain, int n) {
  Domain d = domain_from(domain);
  return d == Domain::sphere ? deserno_sphere(n) : uniform_grid_interval(n);
}

py::array_t<double> points_array(const PointSet& ps) {
  py::array_t<double> out({static_cast<py::ssize_t>(ps.size()), py::ssize_t(3)});
  auto buf = out.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < buf.shape(0); ++i)
    for (py::ssize_t j = 0; j < 3; ++j) buf(i, j) = ps.points[i][j];
  return out;
}

PointSet points_from_array(const py::array_t<double>& arr, const std::string& domain) {
  auto buf = arr.unchecked<2>();
  if (buf.shape(1) != 3) throw std::invalid_argument("points must be (n, 3)");
  PointSet ps;
  ps.domain = domain_from(domain);
  ps.points.reserve(buf.shape(0));
  for (py::ssize_t i = 0; i < buf.shape(0); ++i)
    ps.points.push_back({buf(i, 0), buf(i, 1), buf(i, 2)});
  return ps;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Whittle-Matern fields on the sphere: sampling, smoothness estimation, "
            "and product-measure classification";

  m.def(
      "design",
      [](int n, const std::string& domain) { return points_array(design_for(domain, n)); },
      py::arg("n"), py::arg("domain") = "sphere",
      "Deterministic design: Deserno placement on the sphere, uniform grid on the "
      "interval. Returns an (n, 3) array.");

  m.def(
      "design_diagnostics",
      [](const py::array_t<double>& points, const std::string& domain, int resolution) {
        DesignDiagnostics d = design_diagnostics(points_from_array(points, domain), resolution);
        return py::dict(py::arg("fill") = d.fill, py::arg("separation") = d.separation,
                        py::arg("mesh_ratio") = d.mesh_ratio);
      },
      py::arg("points"), py::arg("domain") = "sphere", py::arg("resolution") = 20000);

  m.def(
      "simulate",
      [](int n, std::uint64_t seed, double s0, double tau0, double sigma0_sq,
         const std::string& law, double df, int truncation, const std::string& norm,
         const std::string& domain) {
        PointSet ps = design_for(domain, n);
        SpectralParams truth{s0, tau0, sigma0_sq, norm_from(norm)};
        FieldSample sample = sample_kl(truth, truncation, law_from(law, df), ps, seed);
        py::array_t<double> values(static_cast<py::ssize_t>(sample.values.size()));
        std::copy(sample.values.begin(), sample.values.end(), values.mutable_data());
        return py::make_tuple(points_array(ps), values);
      },
      py::arg("n"), py::arg("seed"), py::arg("s0") = 5.0, py::arg("tau0") = 20.0,
      py::arg("sigma0_sq") = 1.0, py::arg("law") = "gaussian", py::arg("df") = 4.0,
      py::arg("truncation") = 100, py::arg("normalization") = "unit_diagonal",
      py::arg("domain") = "sphere",
      "One field sample on the standard design; returns (points, values).");

  m.def(
      "gram",
      [](const py::array_t<double>& points, const std::string& domain, double s, double tau,
         double sigma2, int truncation, const std::string& norm) {
        PointSet ps = points_from_array(points, domain);
        KernelModel model =
            TruncatedSpectral{{s, tau, sigma2, norm_from(norm)}, truncation};
        Eigen::MatrixXd g = gram_matrix(model, ps);
        py::array_t<double> out({static_cast<py::ssize_t>(g.rows()),
                                 static_cast<py::ssize_t>(g.cols())});
        auto buf = out.mutable_unchecked<2>();
        for (py::ssize_t i = 0; i < buf.shape(0); ++i)
          for (py::ssize_t j = 0; j < buf.shape(1); ++j) buf(i, j) = g(i, j);
        return out;
      },
      py::arg("points"), py::arg("domain"), py::arg("s"), py::arg("tau"),
      py::arg("sigma2") = 1.0, py::arg("truncation") = 100,
      py::arg("normalization") = "unit_diagonal");

  m.def(
      "estimate",
      [](const py::array_t<double>& points, const py::array_t<double>& values,
         const std::string& domain, double tau, int truncation, const std::string& norm,
         py::object fixed_sigma2, double s_min, double s_max, double grid_step,
         double refine_tol) {
        PointSet ps = points_from_array(points, domain);
        std::optional<double> fixed;
        if (!fixed_sigma2.is_none()) fixed = fixed_sigma2.cast<double>();
        SmoothnessFamily family =
            spectral_smoothness_family(ps, truncation, tau, norm_from(norm), fixed);
        auto buf = values.unchecked<1>();
        std::vector<double> u(buf.shape(0));
        for (py::ssize_t i = 0; i < buf.shape(0); ++i) u[i] = buf(i);
        SearchOptions opts;
        opts.grid_step = grid_step;
        opts.refine_tol = refine_tol;
        EstimationResult est = estimate_smoothness(family, u, s_min, s_max, opts);
        return py::dict(py::arg("s_hat") = est.s_hat, py::arg("sigma2_hat") = est.sigma2_hat,
                        py::arg("microergodic") = est.microergodic,
                        py::arg("loglik") = est.loglik, py::arg("boundary") = est.boundary,
                        py::arg("evaluations") = est.trace.size());
      },
      py::arg("points"), py::arg("values"), py::arg("domain") = "sphere",
      py::arg("tau") = 20.0, py::arg("truncation") = 100,
      py::arg("normalization") = "unit_diagonal", py::arg("fixed_sigma2") = py::none(),
      py::arg("s_min") = 1.0 + 1e-7, py::arg("s_max") = 30.0, py::arg("grid_step") = 0.25,
      py::arg("refine_tol") = 1e-4,
      "Maximize the (optionally profiled) Gaussian likelihood over smoothness.");

  m.def(
      "kakutani",
      [](int d, int terms, double s1, double tau1, double sigma1_sq, double s2, double tau2,
         double sigma2_sq, const std::string& law, double df, const std::string& norm) {
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
        KakutaniReport rep =
            kakutani_classify({s1, tau1, sigma1_sq, norm_from(norm)},
                              {s2, tau2, sigma2_sq, norm_from(norm)}, law_from(law, df), es,
                              count, d);
        return py::dict(py::arg("verdict") = verdict_name(rep.verdict),
                        py::arg("analytic") = verdict_name(rep.analytic_verdict),
                        py::arg("rule") = rep.rule, py::arg("tail_slope") = rep.tail_slope,
                        py::arg("tail_estimate") = rep.tail_estimate,
                        py::arg("total") = rep.partial_sums.empty()
                            ? 0.0
                            : rep.partial_sums.back());
      },
      py::arg("d"), py::arg("terms") = 100000, py::arg("s1") = 3.0, py::arg("tau1") = 1.0,
      py::arg("sigma1_sq") = 1.0, py::arg("s2") = 3.0, py::arg("tau2") = 2.0,
      py::arg("sigma2_sq") = 1.0, py::arg("law") = "gaussian", py::arg("df") = 4.0,
      py::arg("normalization") = "power",
      "Classify the product measures of two parameter sets.");

  m.def(
      "run_scenario",
      [](const std::string& config_text) {
        ScenarioConfig cfg = scenario_config_from_map(parse_config_text(config_text));
        ScenarioResult result = run_scenario(cfg);
        py::list records;
        for (const auto& r : result.records)
          records.append(py::dict(
              py::arg("scenario") = r.scenario, py::arg("n") = r.n, py::arg("rep") = r.rep,
              py::arg("seed") = r.seed, py::arg("s_hat") = r.s_hat,
              py::arg("sigma2_hat") = r.sigma2_hat, py::arg("boundary") = r.boundary));
        return py::dict(py::arg("records") = records,
                        py::arg("csv") = csv_from_records(result.records),
                        py::arg("summary") = summary_text(result.cells),
                        py::arg("kakutani_table") = result.kakutani_table);
      },
      py::arg("config_text"),
      "Run a replication scenario from flat key = value config text.");

  m.def(
      "violin_svg",
      [](const std::string& csv, double reference) {
        auto records = records_from_csv(csv);
        return violin_svg(records, reference);
      },
      py::arg("csv"), py::arg("reference"),
      "Violin plot (SVG text) of a record CSV, one violin per design size.");

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<EstimationError>(m, "EstimationError");
}
