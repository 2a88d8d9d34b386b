#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "wmfield/harness.hpp"

using namespace wmf;

namespace {

bool bits_equal(double a, double b) {
  if (std::isnan(a) && std::isnan(b)) return true;
  std::uint64_t x, y;
  std::memcpy(&x, &a, sizeof x);
  std::memcpy(&y, &b, sizeof y);
  return x == y;
}

bool same_records(const std::vector<ReplicationRecord>& a,
                  const std::vector<ReplicationRecord>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    const auto& x = a[i];
    const auto& y = b[i];
    if (x.scenario != y.scenario || x.n != y.n || x.rep != y.rep || x.seed != y.seed ||
        x.boundary != y.boundary)
      return false;
    if (!bits_equal(x.s_hat, y.s_hat) || !bits_equal(x.sigma2_hat, y.sigma2_hat) ||
        !bits_equal(x.cond_min, y.cond_min) || !bits_equal(x.cond_max, y.cond_max) ||
        !bits_equal(x.ms_elapsed, y.ms_elapsed))
      return false;
  }
  return true;
}

int count_substr(const std::string& hay, const std::string& needle) {
  int count = 0;
  for (size_t pos = hay.find(needle); pos != std::string::npos;
       pos = hay.find(needle, pos + needle.size()))
    ++count;
  return count;
}

std::vector<ReplicationRecord> synthetic_records() {
  std::vector<ReplicationRecord> recs;
  const int sizes[] = {50, 100, 200};
  int k = 0;
  for (int n : sizes) {
    for (int rep = 0; rep < 8; ++rep) {
      ReplicationRecord r;
      r.scenario = "CORRECT";
      r.n = n;
      r.rep = rep;
      r.seed = 1000 + static_cast<std::uint64_t>(k);
      r.s_hat = 5.0 + 0.3 * std::sin(1.7 * k) + 0.01 * k;
      r.sigma2_hat = 1.0 + 0.05 * std::cos(0.9 * k);
      r.cond_min = 1e-4 + 1e-6 * k;
      r.cond_max = 2.0 + 0.01 * k;
      ++k;
      recs.push_back(r);
    }
  }
  return recs;
}

}  // namespace

TEST_CASE("config text parsing handles comments, blanks, and lists") {
  auto kv = parse_config_text(
      "# scenario harness settings\n"
      "scenario = CORRECT\n"
      "\n"
      "sizes = 100, 200   # two designs\n"
      "  master_seed=9\n");
  CHECK(kv.at("scenario") == "CORRECT");
  CHECK(kv.at("sizes") == "100, 200");
  CHECK(kv.at("master_seed") == "9");
  CHECK(kv.size() == 3);
}

TEST_CASE("malformed and duplicate config lines are reported by key") {
  try {
    parse_config_text("scenario = CORRECT\nnonsense line\nscenario = CORRECT\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& err) {
    REQUIRE(err.keys.size() == 2);
    CHECK(err.keys[0] == "line 2");
    CHECK(err.keys[1] == "scenario");
  }
}

TEST_CASE("config validation lists every offending key at once") {
  std::map<std::string, std::string> kv{
      {"scenario", "NO_SUCH"}, {"replications", "0"},    {"sizes", "100, -5"},
      {"grid_step", "bogus"},  {"mystery_key", "1"},
  };
  try {
    scenario_config_from_map(kv);
    FAIL("expected ConfigError");
  } catch (const ConfigError& err) {
    std::set<std::string> keys(err.keys.begin(), err.keys.end());
    CHECK(keys.count("scenario") == 1);
    CHECK(keys.count("grid_step") == 1);
    CHECK(keys.count("mystery_key") == 1);
  }
  // constraint violations come from the second pass
  std::map<std::string, std::string> kv2{
      {"scenario", "CORRECT"},
      {"replications", "0"},
      {"search_interval", "0.3, 30"},
      {"tau_bounds", "0.5, 30"},
  };
  try {
    scenario_config_from_map(kv2);
    FAIL("expected ConfigError");
  } catch (const ConfigError& err) {
    std::set<std::string> keys(err.keys.begin(), err.keys.end());
    CHECK(keys.count("replications") == 1);
    CHECK(keys.count("search_interval") == 1);
    CHECK(keys.count("tau_bounds") == 1);
  }
}

TEST_CASE("cell-list keys are only free where the scenario varies them") {
  std::map<std::string, std::string> kv{
      {"scenario", "CORRECT"},
      {"candidate_tau", "1, 30"},
  };
  try {
    scenario_config_from_map(kv);
    FAIL("expected ConfigError");
  } catch (const ConfigError& err) {
    CHECK(std::count(err.keys.begin(), err.keys.end(), "candidate_tau") == 1);
  }
  std::map<std::string, std::string> kv2{
      {"scenario", "MISSPECIFIED_TAU"},
      {"candidate_tau", "1, 30"},
      {"law", "rademacher, gaussian"},
  };
  CHECK_THROWS_AS(scenario_config_from_map(kv2), ConfigError);
}

TEST_CASE("paper profile moves the replication defaults, explicit keys win") {
  std::map<std::string, std::string> kv{{"scenario", "CORRECT"}, {"profile", "paper"}};
  ScenarioConfig cfg = scenario_config_from_map(kv);
  CHECK(cfg.sizes == std::vector<int>{500, 1000, 2000});
  CHECK(cfg.replications == 100);
  kv["replications"] = "3";
  CHECK(scenario_config_from_map(kv).replications == 3);

  std::map<std::string, std::string> desk{{"scenario", "CORRECT"}};
  ScenarioConfig d = scenario_config_from_map(desk);
  CHECK(d.sizes == std::vector<int>{200, 500});
  CHECK(d.replications == 20);
  CHECK(d.search_lo == doctest::Approx(1.0 + 1e-7).epsilon(1e-12));
  CHECK(d.search_hi == 30.0);
}

TEST_CASE("missing config file is a config error naming the path") {
  try {
    load_scenario_config("/no/such/place/missing.cfg");
    FAIL("expected ConfigError");
  } catch (const ConfigError& err) {
    CHECK(std::string(err.what()).find("missing.cfg") != std::string::npos);
    REQUIRE(err.keys.size() == 1);
    CHECK(err.keys[0] == "config");
  }
}

TEST_CASE("replication seeds are distinct across cells, sizes, and reps") {
  std::set<std::uint64_t> seen;
  int total = 0;
  for (auto kind : {ScenarioKind::correct, ScenarioKind::misspecified_tau})
    for (int variant : {0, 1})
      for (int n : {100, 200})
        for (int rep = 0; rep < 25; ++rep) {
          seen.insert(replication_seed(7, kind, variant, n, rep));
          ++total;
        }
  CHECK(static_cast<int>(seen.size()) == total);
  CHECK(replication_seed(7, ScenarioKind::correct, 0, 100, 3) ==
        replication_seed(7, ScenarioKind::correct, 0, 100, 3));
  CHECK(replication_seed(7, ScenarioKind::correct, 0, 100, 3) !=
        replication_seed(8, ScenarioKind::correct, 0, 100, 3));
}

TEST_CASE("CSV emission round-trips bit-exactly") {
  auto recs = synthetic_records();
  // a failed replication and awkward values
  ReplicationRecord bad;
  bad.scenario = "MISSPECIFIED_TAU[tau=1]";
  bad.n = 50;
  bad.rep = 8;
  bad.seed = 123456789012345ull;
  bad.s_hat = std::numeric_limits<double>::quiet_NaN();
  bad.sigma2_hat = std::numeric_limits<double>::quiet_NaN();
  bad.boundary = true;
  bad.cond_min = 1.0 / 3.0;
  bad.cond_max = 1e300;
  bad.ms_elapsed = 0.1 + 0.2;
  recs.push_back(bad);

  std::string csv = csv_from_records(recs);
  CHECK(csv.rfind(kRecordCsvHeader, 0) == 0);
  CHECK(csv.back() == '\n');
  auto parsed = records_from_csv(csv);
  REQUIRE(parsed.size() == recs.size());
  CHECK(same_records(parsed, recs));
  CHECK(csv_from_records(parsed) == csv);

  CHECK_THROWS(records_from_csv("not,a,header\n"));
  CHECK_THROWS(records_from_csv(std::string(kRecordCsvHeader) + "\nA,1,2\n"));
}

TEST_CASE("summary statistics recompute exactly from the CSV") {
  auto recs = synthetic_records();
  auto cells = summarize(recs, 5.0);
  REQUIRE(cells.size() == 3);
  auto parsed = records_from_csv(csv_from_records(recs));
  auto cells2 = summarize(parsed, 5.0);
  REQUIRE(cells2.size() == cells.size());
  for (size_t i = 0; i < cells.size(); ++i) {
    CHECK(cells2[i].scenario == cells[i].scenario);
    CHECK(cells2[i].n == cells[i].n);
    CHECK(cells2[i].count == cells[i].count);
    CHECK(cells2[i].failures == cells[i].failures);
    CHECK(bits_equal(cells2[i].median_s, cells[i].median_s));
    CHECK(bits_equal(cells2[i].mean_s, cells[i].mean_s));
    CHECK(bits_equal(cells2[i].iqr_s, cells[i].iqr_s));
    CHECK(bits_equal(cells2[i].bias_s, cells[i].bias_s));
    CHECK(bits_equal(cells2[i].mean_sigma2, cells[i].mean_sigma2));
  }

  // hand check on a 4-value cell
  std::vector<ReplicationRecord> four;
  for (int i = 0; i < 4; ++i) {
    ReplicationRecord r;
    r.scenario = "X";
    r.n = 10;
    r.rep = i;
    r.s_hat = static_cast<double>(i + 1);  // 1 2 3 4
    r.sigma2_hat = 2.0;
    four.push_back(r);
  }
  four.push_back(four.back());
  four.back().rep = 4;
  four.back().s_hat = std::numeric_limits<double>::quiet_NaN();
  auto cell = summarize(four, 2.0);
  REQUIRE(cell.size() == 1);
  CHECK(cell[0].count == 4);
  CHECK(cell[0].failures == 1);
  CHECK(cell[0].median_s == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(cell[0].mean_s == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(cell[0].iqr_s == doctest::Approx(1.5).epsilon(1e-15));  // 3.25 - 1.75
  CHECK(cell[0].bias_s == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("correct scenario: five replications inside the search range") {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::correct;
  cfg.sizes = {200};
  cfg.replications = 5;
  cfg.master_seed = 7;
  auto result = run_scenario(cfg);
  REQUIRE(result.records.size() == 5);
  std::set<std::uint64_t> seeds;
  for (const auto& r : result.records) {
    CHECK(r.scenario == "CORRECT");
    CHECK(r.s_hat >= cfg.search_lo);
    CHECK(r.s_hat <= cfg.search_hi);
    CHECK(r.sigma2_hat == cfg.sigma0_sq);  // magnitude known, not profiled
    CHECK(r.ms_elapsed == 0.0);            // timing off by default
    CHECK(r.cond_min > 0.0);
    CHECK(r.cond_max >= r.cond_min);
    seeds.insert(r.seed);
  }
  CHECK(seeds.size() == 5);
  REQUIRE(result.cells.size() == 1);
  CHECK(result.cells[0].failures == 0);
  CHECK(std::abs(result.cells[0].median_s - cfg.s0) < 1.5);
}

TEST_CASE("scenario runs are byte-deterministic, also across worker counts") {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::correct;
  cfg.sizes = {100};
  cfg.replications = 6;
  cfg.master_seed = 11;
  auto a = run_scenario(cfg);
  auto b = run_scenario(cfg);
  cfg.workers = 3;
  auto c = run_scenario(cfg);
  CHECK(same_records(a.records, b.records));
  CHECK(same_records(a.records, c.records));
  CHECK(csv_from_records(a.records) == csv_from_records(c.records));
  CHECK(violin_svg(a.records, cfg.s0) == violin_svg(c.records, cfg.s0));
}

TEST_CASE("timing flag fills the elapsed column") {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::correct;
  cfg.sizes = {60};
  cfg.replications = 1;
  cfg.timing = true;
  auto result = run_scenario(cfg);
  REQUIRE(result.records.size() == 1);
  CHECK(result.records[0].ms_elapsed > 0.0);
}

TEST_CASE("tau misspecification: estimated smoothness grows with candidate tau") {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::misspecified_tau;
  cfg.candidate_tau = {1.0, 30.0};
  cfg.sizes = {200};
  cfg.replications = 8;
  cfg.master_seed = 3;
  auto result = run_scenario(cfg);
  REQUIRE(result.records.size() == 16);
  REQUIRE(result.cells.size() == 2);
  CHECK(result.cells[0].scenario == "MISSPECIFIED_TAU[tau=1]");
  CHECK(result.cells[1].scenario == "MISSPECIFIED_TAU[tau=30]");
  CHECK(result.cells[0].failures == 0);
  CHECK(result.cells[1].failures == 0);
  CHECK(result.cells[0].mean_s < result.cells[1].mean_s);
}

TEST_CASE("law misspecification keeps one cell per coefficient law") {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::misspecified_law;
  cfg.laws = {{LawKind::rademacher, 4.0}, {LawKind::centered_exponential, 4.0}};
  cfg.sizes = {100};
  cfg.replications = 5;
  cfg.master_seed = 5;
  auto result = run_scenario(cfg);
  REQUIRE(result.records.size() == 10);
  REQUIRE(result.cells.size() == 2);
  CHECK(result.cells[0].scenario == "MISSPECIFIED_LAW[centered_exponential]");
  CHECK(result.cells[1].scenario == "MISSPECIFIED_LAW[rademacher]");
  for (const auto& cell : result.cells) {
    CHECK(cell.failures == 0);
    CHECK(std::abs(cell.median_s - cfg.s0) < 2.5);
  }
}

TEST_CASE("kernel misspecification fits auxiliaries once and still estimates") {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::misspecified_kernel;
  cfg.true_kernel = "matern";
  cfg.sizes = {80};
  cfg.replications = 5;
  cfg.master_seed = 13;
  auto result = run_scenario(cfg);
  REQUIRE(result.auxiliary.has_value());
  CHECK(result.auxiliary->scale > 0.0);
  CHECK(result.auxiliary->sigma2 > 0.0);
  CHECK(result.auxiliary->residual < 1.0);
  REQUIRE(result.records.size() == 5);
  for (const auto& r : result.records) CHECK(std::isfinite(r.s_hat));
}

TEST_CASE("microergodic scenario records the estimable product at fixed smoothness") {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::microergodic_clt;
  cfg.sizes = {100};
  cfg.replications = 5;
  cfg.master_seed = 17;
  cfg.tau_grid_step = 2.0;
  auto result = run_scenario(cfg);
  REQUIRE(result.records.size() == 5);
  for (const auto& r : result.records) {
    CHECK(r.s_hat == cfg.s0);
    CHECK(std::isfinite(r.sigma2_hat));
    CHECK(r.sigma2_hat > 0.0);
    CHECK(r.cond_min > 0.0);
  }
}

TEST_CASE("kakutani table scenario emits the verdict matrix instead of records") {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::kakutani_table;
  cfg.kakutani_terms = 20000;
  auto result = run_scenario(cfg);
  CHECK(result.records.empty());
  REQUIRE(!result.kakutani_table.empty());
  CHECK(count_substr(result.kakutani_table, "\n") == 13);  // header + 12 cases
  CHECK(count_substr(result.kakutani_table, "EQUIVALENT") >= 3);
  CHECK(count_substr(result.kakutani_table, "ORTHOGONAL") >= 3);
  // empirical and analytic verdicts agree case by case: columns 3 and 4 match
  std::istringstream is(result.kakutani_table);
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    std::vector<std::string> fields;
    size_t pos = 0;
    while (pos <= line.size()) {
      size_t comma = line.find(',', pos);
      if (comma == std::string::npos) comma = line.size();
      fields.push_back(line.substr(pos, comma - pos));
      pos = comma + 1;
    }
    REQUIRE(fields.size() >= 4);
    CHECK(fields[2] == fields[3]);
  }
}

TEST_CASE("violin SVG has one silhouette per group and a dashed reference") {
  auto recs = synthetic_records();
  std::string svg = violin_svg(recs, 5.0);
  CHECK(svg.rfind("<?xml version=\"1.0\"", 0) == 0);
  CHECK(svg.find("<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\"") !=
        std::string::npos);
  CHECK(count_substr(svg, "class=\"violin\"") == 3);
  CHECK(count_substr(svg, "class=\"reference\"") == 1);
  CHECK(count_substr(svg, "stroke-dasharray") == 1);
  CHECK(count_substr(svg, "<svg") == count_substr(svg, "</svg>"));
  CHECK(svg.find("n=50") != std::string::npos);
  CHECK(svg.find("n=200") != std::string::npos);

  // all-equal group degrades to a tick
  std::vector<ReplicationRecord> flat;
  for (int i = 0; i < 6; ++i) {
    ReplicationRecord r;
    r.scenario = "X";
    r.n = 30;
    r.rep = i;
    r.s_hat = 4.0;
    flat.push_back(r);
  }
  std::string degenerate = violin_svg(flat, 5.0);
  CHECK(count_substr(degenerate, "class=\"tick\"") == 1);
  CHECK(count_substr(degenerate, "class=\"violin\"") == 0);
  CHECK(count_substr(degenerate, "class=\"reference\"") == 1);

  // too few records in a group
  flat.resize(4);
  CHECK_THROWS(violin_svg(flat, 5.0));
}

TEST_CASE("scenario outputs land in the requested directory") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "wmfield_harness_out";
  fs::remove_all(dir);

  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::correct;
  cfg.sizes = {100};
  cfg.replications = 5;
  cfg.master_seed = 19;
  cfg.out_dir = dir.string();
  auto result = run_scenario(cfg);
  write_scenario_outputs(result);

  REQUIRE(fs::exists(dir / "records.csv"));
  REQUIRE(fs::exists(dir / "summary.txt"));
  REQUIRE(fs::exists(dir / "violin_CORRECT.svg"));

  std::ifstream csv(dir / "records.csv", std::ios::binary);
  std::stringstream buf;
  buf << csv.rdbuf();
  auto parsed = records_from_csv(buf.str());
  CHECK(same_records(parsed, result.records));
  auto cells = summarize(parsed, cfg.s0);
  REQUIRE(cells.size() == result.cells.size());
  CHECK(bits_equal(cells[0].mean_s, result.cells[0].mean_s));
  CHECK(bits_equal(cells[0].median_s, result.cells[0].median_s));

  // kakutani scenario writes its table file
  ScenarioConfig kcfg;
  kcfg.kind = ScenarioKind::kakutani_table;
  kcfg.kakutani_terms = 5000;
  kcfg.out_dir = (dir / "kak").string();
  write_scenario_outputs(run_scenario(kcfg));
  CHECK(fs::exists(dir / "kak" / "kakutani_table.csv"));
  CHECK(!fs::exists(dir / "kak" / "records.csv"));
  fs::remove_all(dir);
}
