#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "panelsmc/commands.hpp"
#include "panelsmc/csv.hpp"
#include "panelsmc/errors.hpp"
#include "panelsmc/gompertz.hpp"

using namespace panelsmc;
using namespace panelsmc::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("panelsmc_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

RunConfig tiny_config() {
  RunConfig cfg;
  cfg.set("U", "3");
  cfg.set("N", "6");
  cfg.set("seed", "42");
  return cfg;
}

}  // namespace

TEST_CASE("config: defaults, presets, overrides, errors") {
  RunConfig cfg;
  CHECK(cfg.run_level() == 1);
  CHECK(cfg.get_int("U") == 50);
  CHECK(cfg.get_double("tau") == 0.1);

  // the preset triples
  for (const auto& [level, pf, nseq, nmif, np, ereps, enp, rreps] :
       {std::tuple{1, 10L, 2L, 2L, 10L, 2L, 10L, 2L},
        std::tuple{2, 200L, 4L, 20L, 500L, 5L, 500L, 4L},
        std::tuple{3, 1000L, 6L, 150L, 1500L, 10L, 2500L, 6L}}) {
    RunConfig c;
    c.set("run_level", std::to_string(level));
    CHECK(c.pf_np() == pf);
    CHECK(c.mif_nseq() == nseq);
    CHECK(c.mif_nmif() == nmif);
    CHECK(c.mif_np() == np);
    CHECK(c.eval_reps() == ereps);
    CHECK(c.eval_np() == enp);
    CHECK(c.refine_reps() == rreps);
  }

  RunConfig over;
  over.set("run_level", "2");
  over.set("pf_np", "333");
  CHECK(over.pf_np() == 333);  // explicit keys beat presets

  CHECK_THROWS_AS(over.set("not_a_key", "1"), ConfigError);
  RunConfig bad;
  bad.set("run_level", "7");
  CHECK_THROWS_AS(bad.run_level(), ConfigError);
  bad.set("run_level", "x");
  CHECK_THROWS_AS(bad.run_level(), ConfigError);
}

TEST_CASE("config file parsing") {
  const fs::path dir = scratch("config");
  {
    std::ofstream out(dir / "run.conf");
    out << "# comment line\n\n"
        << "U = 4\n"
        << "seed=9  # trailing comment\n"
        << "tau = 0.25\n";
  }
  const RunConfig cfg = RunConfig::from_file(dir / "run.conf");
  CHECK(cfg.get_int("U") == 4);
  CHECK(cfg.seed() == 9);
  CHECK(cfg.get_double("tau") == 0.25);

  {
    std::ofstream out(dir / "broken.conf");
    out << "just some words\n";
  }
  CHECK_THROWS_AS(RunConfig::from_file(dir / "broken.conf"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_file(dir / "missing.conf"), ConfigError);
}

TEST_CASE("simulate: row counts, determinism, manifest checksums") {
  const fs::path dir = scratch("simulate");
  RunConfig cfg;  // defaults: U = 50, N = 100
  const RunManifest manifest = cmd_simulate(cfg, dir);

  const CsvTable data = CsvTable::read(dir / "data.csv");
  CHECK(data.n_rows() == 50 * 100);
  CHECK(data.columns() == std::vector<std::string>{"unit", "time", "Y"});
  const CsvTable params = CsvTable::read(dir / "params.csv");
  CHECK(params.n_rows() == 2 + 3 * 50);

  // every artifact is listed with a matching checksum, and nothing was
  // written beyond the listed files plus the manifest itself
  CHECK(manifest.artifacts.size() == 2);
  for (const auto& [name, checksum] : manifest.artifacts)
    CHECK(file_checksum(dir / name) == checksum);
  CHECK(fs::exists(dir / "manifest_simulate.json"));
  std::size_t on_disk = 0;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".csv") ++on_disk;
  CHECK(on_disk == manifest.artifacts.size());

  // a one-observation panel
  const fs::path dir1 = scratch("simulate_one");
  RunConfig one;
  one.set("U", "1");
  one.set("N", "1");
  cmd_simulate(one, dir1);
  CHECK(CsvTable::read(dir1 / "data.csv").n_rows() == 1);

  // same seed, byte-identical outputs
  const fs::path dir2 = scratch("simulate_again");
  cmd_simulate(cfg, dir2);
  CHECK(slurp(dir / "data.csv") == slurp(dir2 / "data.csv"));
  CHECK(slurp(dir / "params.csv") == slurp(dir2 / "params.csv"));
}

TEST_CASE("kalman command matches the library evaluation") {
  const fs::path dir = scratch("kalman");
  RunConfig cfg = tiny_config();
  cmd_simulate(cfg, dir);
  cmd_kalman(cfg, dir);

  const PanelModel model = load_model(cfg, dir);
  const KalmanLoglik expected = gompertz_kalman_loglik(model);
  const CsvTable table = CsvTable::read(dir / "kalman.csv");
  REQUIRE(table.n_rows() == 4);  // 3 units + total
  CHECK(table.cell(3, "unit") == "total");
  CHECK(table.number(3, "loglik") == expected.total);
  CHECK(table.number(0, "loglik") == expected.per_unit[0]);
}

TEST_CASE("load_model round-trips the simulated panel") {
  const fs::path dir = scratch("roundtrip");
  RunConfig cfg = tiny_config();
  cmd_simulate(cfg, dir);
  const PanelModel direct = model_from_config(cfg);
  const PanelModel loaded = load_model(cfg, dir);
  CHECK(loaded.coef() == direct.coef());
  REQUIRE(loaded.n_units() == direct.n_units());
  for (std::size_t u = 0; u < direct.n_units(); ++u) {
    CHECK(loaded.unit(u).times == direct.unit(u).times);
    CHECK(loaded.unit(u).data == direct.unit(u).data);
  }
}

TEST_CASE("pfilter: files, summary semantics, missing input") {
  const fs::path dir = scratch("pfilter");
  RunConfig cfg = tiny_config();
  cfg.set("pf_reps", "4");
  CHECK_THROWS_AS(cmd_pfilter(cfg, dir), FormatError);  // no data yet
  cmd_simulate(cfg, dir);
  cmd_pfilter(cfg, dir);

  const CsvTable logliks = CsvTable::read(dir / "pfilter_logliks.csv");
  CHECK(logliks.columns() == std::vector<std::string>{"replicate", "unit", "loglik"});
  CHECK(logliks.n_rows() == 4 * 3);

  const CsvTable summary = CsvTable::read(dir / "pfilter_summary.csv");
  REQUIRE(summary.n_rows() == 1);
  const double lambda1 = summary.number(0, "lambda1");
  const double lambda2 = summary.number(0, "lambda2");
  CHECK(summary.number(0, "lambda1_se") >= 0.0);
  CHECK(summary.number(0, "lambda2_se") >= 0.0);

  // Jensen: the pooled estimate dominates the mean replicate log likelihood
  double mean = 0.0;
  std::map<std::string, double> totals;
  for (std::size_t r = 0; r < logliks.n_rows(); ++r)
    totals[logliks.cell(r, "replicate")] += logliks.number(r, "loglik");
  for (const auto& [rep, total] : totals) mean += total;
  mean /= static_cast<double>(totals.size());
  CHECK(lambda1 >= mean - 1e-12);
  CHECK(lambda2 >= mean - 1e-12);

  // the exact value is written alongside
  const PanelModel model = load_model(cfg, dir);
  CHECK(summary.number(0, "kalman_loglik") ==
        doctest::Approx(gompertz_kalman_loglik(model).total).epsilon(1e-12));

  // a single replicate leaves the jackknife fields empty
  const fs::path dir1 = scratch("pfilter_one");
  RunConfig one = tiny_config();
  one.set("pf_reps", "1");
  cmd_simulate(one, dir1);
  cmd_pfilter(one, dir1);
  const CsvTable s1 = CsvTable::read(dir1 / "pfilter_summary.csv");
  CHECK(s1.cell(0, "lambda1_se").empty());
  CHECK(s1.cell(0, "lambda2_se").empty());
}

TEST_CASE("pfilter outputs are identical across thread counts") {
  const fs::path dir_a = scratch("threads1");
  const fs::path dir_b = scratch("threads4");
  for (const auto& [dir, threads] : {std::pair{dir_a, "1"}, std::pair{dir_b, "4"}}) {
    RunConfig cfg = tiny_config();
    cfg.set("pf_reps", "4");
    cfg.set("threads", threads);
    cmd_simulate(cfg, dir);
    cmd_pfilter(cfg, dir);
  }
  for (const char* name : {"data.csv", "params.csv", "pfilter_logliks.csv",
                           "pfilter_summary.csv"})
    CHECK(slurp(dir_a / name) == slurp(dir_b / name));
}

TEST_CASE("mif: results table sorted, fixed parameters constant") {
  const fs::path dir = scratch("mif");
  RunConfig cfg = tiny_config();  // run_level 1 presets: nseq 2, Nmif 2, Np 10
  cmd_simulate(cfg, dir);
  cmd_mif(cfg, dir);

  const CsvTable results = CsvTable::read(dir / "mif_results.csv");
  CHECK(results.n_rows() == 2);
  for (std::size_t r = 1; r < results.n_rows(); ++r)
    CHECK(results.number(r - 1, "loglik") >= results.number(r, "loglik"));
  for (std::size_t r = 0; r < results.n_rows(); ++r)
    for (const char* name : {"K[unit1]", "X.0[unit2]", "K[unit3]"})
      CHECK(results.number(r, name) == 1.0);

  const CsvTable traces = CsvTable::read(dir / "mif_traces.csv");
  const PanelModel model = load_model(cfg, dir);
  const std::size_t per_start = (2 + 1) * (model.coef().size() + 1);
  CHECK(traces.n_rows() == 2 * per_start);

  CHECK(fs::exists(dir / "mif_best_params.csv"));
}

TEST_CASE("mif estimates stay below the exact maximum") {
  const fs::path dir = scratch("mif_oracle");
  RunConfig cfg;
  cfg.set("U", "4");
  cfg.set("N", "25");
  cfg.set("seed", "33");
  cfg.set("run_level", "2");
  cfg.set("mif_nseq", "2");
  cfg.set("mif_nmif", "10");
  cfg.set("mif_np", "200");
  cfg.set("eval_np", "200");
  cfg.set("refine_reps", "2");
  cmd_simulate(cfg, dir);
  cmd_mif(cfg, dir);

  const PanelModel model = load_model(cfg, dir);
  std::vector<std::string> free_names = {"r", "sigma"};
  for (const auto& u : model.spec().unit_names) free_names.push_back(make_param_key("tau", u));
  const double oracle = maximize_kalman_loglik(model, model.coef(), free_names).loglik;

  const CsvTable results = CsvTable::read(dir / "mif_results.csv");
  const double best = results.number(0, "loglik");
  const double se = results.number(0, "loglik.se");
  CHECK(best <= oracle + 2.0 * se);
}

TEST_CASE("run levels scale the work") {
  const fs::path dir = scratch("levels");
  RunConfig cfg;
  cfg.set("U", "5");
  cfg.set("N", "50");
  cfg.set("seed", "2");
  cmd_simulate(cfg, dir);

  cfg.set("run_level", "1");
  const double quick = cmd_pfilter(cfg, dir).duration_seconds;
  cfg.set("run_level", "2");
  const double slower = cmd_pfilter(cfg, dir).duration_seconds;
  CHECK(quick < slower);
}

TEST_CASE("profile and mcap run end to end at smoke scale") {
  const fs::path dir = scratch("profile");
  RunConfig cfg = tiny_config();
  cfg.set("profile_points", "6");
  cfg.set("nprof", "2");
  cmd_simulate(cfg, dir);
  cmd_profile(cfg, dir);

  const CsvTable table = CsvTable::read(dir / "profile_table.csv");
  CHECK(table.n_rows() == 12);
  table.column_index("loglik");
  table.column_index("loglik.se");
  // the focal column is the grid, each value nprof times, in order
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    const double expected = 0.05 + (0.2 - 0.05) * static_cast<double>(r / 2) / 5.0;
    CHECK(table.number(r, "r") == doctest::Approx(expected).epsilon(1e-12));
  }

  cmd_mcap(cfg, dir);
  const CsvTable summary = CsvTable::read(dir / "mcap_summary.csv");
  REQUIRE(summary.n_rows() == 1);
  CHECK(summary.number(0, "ci_lo") <= summary.number(0, "mle"));
  CHECK(summary.number(0, "mle") <= summary.number(0, "ci_hi"));
  CHECK(summary.number(0, "delta") >= 1.92);
  const CsvTable curve = CsvTable::read(dir / "mcap_curve.csv");
  CHECK(curve.n_rows() == 1000);
}

TEST_CASE("mcap consumes a synthetic profile table") {
  const fs::path dir = scratch("mcap");
  CsvTable table({"r", "loglik", "loglik.se"});
  for (int i = 0; i < 21; ++i) {
    const double x = -1.0 + 4.0 * i / 20.0;
    table.add_row({format_double(x), format_double(-(x - 1.0) * (x - 1.0)), "0"});
  }
  table.write(dir / "profile_table.csv");

  RunConfig cfg;
  const RunManifest manifest = cmd_mcap(cfg, dir);
  const CsvTable summary = CsvTable::read(dir / "mcap_summary.csv");
  CHECK(summary.number(0, "delta") == doctest::Approx(1.92073).epsilon(1e-3));
  CHECK(summary.number(0, "mle") == doctest::Approx(1.0).epsilon(0.01));
  for (const auto& [name, checksum] : manifest.artifacts)
    CHECK(file_checksum(dir / name) == checksum);

  // fewer than 5 points is refused
  CsvTable small({"r", "loglik", "loglik.se"});
  for (int i = 0; i < 4; ++i) small.add_row({format_double(i), "0", "0"});
  small.write(dir / "profile_table.csv");
  CHECK_THROWS_AS(cmd_mcap(cfg, dir), DomainError);
}

TEST_CASE("malformed data files are rejected") {
  const fs::path dir = scratch("badfiles");
  {
    std::ofstream out(dir / "data.csv");
    out << "unit,when,Y\nunit1,1,1.0\n";  // wrong column name
  }
  {
    std::ofstream out(dir / "params.csv");
    out << "parameter,value\nr,0.1\n";
  }
  RunConfig cfg;
  CHECK_THROWS_AS(load_model(cfg, dir), FormatError);

  {
    std::ofstream out(dir / "data.csv");
    out << "unit,time,Y\nunit1,1,not_a_number\n";
  }
  CHECK_THROWS_AS(load_model(cfg, dir), FormatError);
}
