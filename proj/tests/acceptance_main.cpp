// Acceptance suite: runs every stated criterion at its stated tolerance and
// prints one pass/fail line each. Exit code is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "panelsmc/commands.hpp"
#include "panelsmc/csv.hpp"
#include "panelsmc/design.hpp"
#include "panelsmc/filter.hpp"
#include "panelsmc/gompertz.hpp"
#include "panelsmc/mcap.hpp"
#include "panelsmc/parallel.hpp"
#include "panelsmc/pif.hpp"
#include "panelsmc/stats.hpp"

using namespace panelsmc;
namespace fs = std::filesystem;

namespace {

constexpr unsigned kThreads = 4;

int g_failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", number, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

double sample_variance(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("panelsmc_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RwSd gompertz_rw(double sd, bool with_r) {
  RwSd rw;
  if (with_r) rw.set_shared("r", sd);
  rw.set_shared("sigma", sd);
  rw.set_specific("tau", sd);
  return rw;
}

// ---------------------------------------------------------------------------

void criterion_1_oracle_agreement() {
  const auto start = std::chrono::steady_clock::now();
  const PanelModel model = build_panel_gompertz(10, 50, 101);
  const double exact = gompertz_kalman_loglik(model).total;

  const std::size_t reps = 10, j_count = 2000;
  Matrix unit_logliks(reps, model.n_units());
  parallel_for(reps, kThreads, [&](std::size_t rep) {
    const PanelFilterResult r = panel_particle_filter(
        model, model.coef(), j_count, 2024, Resampler::multinomial, default_filter_tol, 1, rep);
    for (std::size_t u = 0; u < model.n_units(); ++u)
      unit_logliks(rep, u) = r.unit_results[u].loglik;
  });
  const MeanEstimate lambda2 = panel_log_mean_exp(unit_logliks, true);
  const double gap = std::fabs(lambda2.estimate - exact);
  const double elapsed = seconds_since(start);

  const bool pass =
      lambda2.se.has_value() && gap <= 3.0 * *lambda2.se && gap <= 2.0 && elapsed <= 60.0;
  report(1, "panel filter agrees with the exact likelihood", pass,
         fmt("|lambda2 - exact| = %.3f, 3*se = %.3f, cap 2.0, %.1f s <= 60 s", gap,
             3.0 * lambda2.se.value_or(0.0), elapsed));
}

void criterion_2_and_3_estimator_dominance_and_jensen() {
  const PanelModel model = build_panel_gompertz(20, 50, 102);
  const std::size_t n_sets = 100, reps = 5, j_count = 500;

  std::vector<double> lambda1(n_sets), lambda2(n_sets);
  std::vector<double> jensen_slack(n_sets);
  parallel_for(n_sets, kThreads, [&](std::size_t s) {
    Matrix unit_logliks(reps, model.n_units());
    std::vector<double> totals(reps);
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const PanelFilterResult r =
          panel_particle_filter(model, model.coef(), j_count, 5000 + s, Resampler::multinomial,
                                default_filter_tol, 1, rep);
      totals[rep] = r.loglik;
      for (std::size_t u = 0; u < model.n_units(); ++u)
        unit_logliks(rep, u) = r.unit_results[u].loglik;
    }
    lambda1[s] = log_mean_exp(totals).estimate;
    lambda2[s] = panel_log_mean_exp(unit_logliks).estimate;

    double mean = 0.0;
    for (double t : totals) mean += t;
    mean /= static_cast<double>(reps);
    jensen_slack[s] = mean - lambda1[s];  // must stay <= 1e-12
  });

  const double v1 = sample_variance(lambda1), v2 = sample_variance(lambda2);
  report(2, "per-unit averaging dominates pooled averaging", v2 < v1,
         fmt("var(lambda2) = %.4f < var(lambda1) = %.4f, margin %.0f%%", v2, v1,
             100.0 * (1.0 - v2 / v1)));

  double worst = -1e300;
  for (double s : jensen_slack) worst = std::max(worst, s);
  report(3, "Jensen ordering on every replicate set", worst <= 1e-12,
         fmt("max(mean - log_mean_exp) = %.2e over %zu sets", worst, n_sets));
}

void criterion_4_pif_maximization() {
  const auto start_time = std::chrono::steady_clock::now();
  const PanelModel model = build_panel_gompertz(10, 50, 103);

  std::vector<std::string> free_names = {"r", "sigma"};
  for (const auto& u : model.spec().unit_names) free_names.push_back(make_param_key("tau", u));
  const KalmanOptResult oracle = maximize_kalman_loglik(model, model.coef(), free_names);

  const NamedValues lower{{"r", 0.05}, {"sigma", 0.05}, {"tau", 0.05}, {"K", 1.0}, {"X.0", 1.0}};
  const NamedValues upper{{"r", 0.2}, {"sigma", 0.2}, {"tau", 0.2}, {"K", 1.0}, {"X.0", 1.0}};
  const DesignTable starts = runif_panel_design(
      lower, upper, model.spec().specific_names, model.spec().unit_names, 4, 7);

  std::vector<double> exact_at_estimate(starts.rows.size());
  parallel_for(starts.rows.size(), kThreads, [&](std::size_t s) {
    const ParamVector start = conform_to_spec(starts.rows[s], model.spec());
    PifResult fit = run_pif(model, start, 50, 1000, gompertz_rw(0.02, true),
                            CoolingSchedule{0.5}, 1000 + s);
    fit = refine_unit_blocks(model, fit, std::vector<std::string>{"tau"}, 4, 2000 + s);
    exact_at_estimate[s] = gompertz_kalman_loglik(model, fit.point_estimate).total;
  });

  double best = exact_at_estimate.front();
  for (double v : exact_at_estimate) best = std::max(best, v);
  const double elapsed = seconds_since(start_time);
  const bool pass = (oracle.loglik - best) <= 2.0 && elapsed <= 600.0;
  report(4, "iterated filtering reaches the exact maximum", pass,
         fmt("oracle %.2f, search %.2f, gap %.2f <= 2.0, %.0f s <= 600 s", oracle.loglik, best,
             oracle.loglik - best, elapsed));
}

void criterion_5_zero_perturbation() {
  const PanelModel model = build_panel_gompertz(3, 10, 104);
  const PifResult res = run_pif(model, model.coef(), 3, 50, RwSd{}, CoolingSchedule{0.5}, 9);
  bool equal = res.point_estimate.names() == model.coef().names();
  for (std::size_t i = 0; equal && i < res.point_estimate.size(); ++i)
    if (res.point_estimate.value_at(i) != model.coef().value_at(i)) equal = false;
  report(5, "zero perturbation returns the start bit-for-bit", equal,
         equal ? "point estimate identical to start" : "point estimate differs");
}

void criterion_6_cooling_law() {
  const CoolingSchedule cooling{0.5};
  const double base_sd = 0.02;
  const double at_50 = base_sd * cooling.factor(50);
  const double err = std::fabs(at_50 - 0.5 * base_sd) / (0.5 * base_sd);
  report(6, "cooling halves the perturbation after 50 iterations", err <= 1e-12,
         fmt("sd at iteration 50 = %.17g, relative error %.2e", at_50, err));
}

void criterion_7_mcap_analytic() {
  std::vector<double> xs, ys;
  for (int i = 0; i < 21; ++i) {
    const double x = -1.0 + 4.0 * i / 20.0;
    xs.push_back(x);
    ys.push_back(-(x - 1.0) * (x - 1.0));
  }
  const McapResult res = mcap(xs, ys);
  const double half = std::sqrt(1.92073);
  const bool delta_ok = std::fabs(res.delta - 1.92073) <= 1e-3;
  const bool ci_ok = std::fabs(res.ci_lo - (1.0 - half)) <= 0.02 &&
                     std::fabs(res.ci_hi - (1.0 + half)) <= 0.02;

  // shift invariance; adding 1e6 already rounds the inputs at ~1e-10, so
  // equality is asserted to that precision
  std::vector<double> shifted = ys;
  for (double& y : shifted) y += 1e6;
  const McapResult moved = mcap(xs, shifted);
  const bool shift_ok = moved.mle == res.mle && std::fabs(moved.delta - res.delta) <= 1e-8 &&
                        std::fabs(moved.ci_lo - res.ci_lo) <= 1e-8 &&
                        std::fabs(moved.ci_hi - res.ci_hi) <= 1e-8;

  report(7, "adjusted profile on the analytic quadratic", delta_ok && ci_ok && shift_ok,
         fmt("delta = %.5f (err %.1e), ci = [%.4f, %.4f], shift-invariant: %s", res.delta,
             std::fabs(res.delta - 1.92073), res.ci_lo, res.ci_hi, shift_ok ? "yes" : "no"));
}

void criterion_8_profile_coverage() {
  const fs::path dir = scratch_dir("profile");
  cli::RunConfig cfg;
  cfg.set("U", "10");
  cfg.set("N", "50");
  cfg.set("seed", "200");  // fixed seed with an interior exact-likelihood maximizer
  cfg.set("run_level", "2");
  cfg.set("threads", std::to_string(kThreads));
  cfg.set("profile_points", "10");
  cfg.set("nprof", "2");
  cli::cmd_simulate(cfg, dir);
  cli::cmd_profile(cfg, dir);
  cli::cmd_mcap(cfg, dir);

  const PanelModel model = cli::load_model(cfg, dir);
  std::vector<std::string> free_names = {"r", "sigma"};
  for (const auto& u : model.spec().unit_names) free_names.push_back(make_param_key("tau", u));
  const double oracle_r =
      maximize_kalman_loglik(model, model.coef(), free_names).params.get("r");

  const CsvTable summary = CsvTable::read(dir / "mcap_summary.csv");
  const double lo = summary.number(0, "ci_lo"), hi = summary.number(0, "ci_hi");
  const bool pass = lo <= oracle_r && oracle_r <= hi;
  report(8, "MCAP interval covers the exact-likelihood estimate", pass,
         fmt("ci = [%.4f, %.4f], oracle r = %.4f", lo, hi, oracle_r));
}

void criterion_9_format_roundtrips() {
  RngStream rng(55);
  const ParamTransform log_all = ParamTransform::log_for({"p0", "p1", "p2", "p3", "p4", "s0",
                                                          "s1", "s2", "s3", "s4"});
  bool ok = true;
  std::string detail = "100 random specs, vector/list and transform round trips within 1e-12";
  for (int rep = 0; rep < 100 && ok; ++rep) {
    const auto a = static_cast<std::size_t>(rng.uniform01() * 6);
    const auto b = static_cast<std::size_t>(rng.uniform01() * 6);
    const auto u = 1 + static_cast<std::size_t>(rng.uniform01() * 5);
    ParamSpec spec;
    for (std::size_t i = 0; i < a; ++i) spec.shared_names.push_back("s" + std::to_string(i));
    for (std::size_t i = 0; i < b; ++i) spec.specific_names.push_back("p" + std::to_string(i));
    for (std::size_t i = 0; i < u; ++i) spec.unit_names.push_back("unit" + std::to_string(i + 1));
    spec.validate();

    ParamVector v;
    for (const auto& key : spec.full_names()) v.push_back(key, std::exp(rng.normal()));
    if (to_param_vector(to_param_list(v)) != v) {
      ok = false;
      detail = "vector/list round trip failed at rep " + std::to_string(rep);
      break;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string& key = v.name_at(i);
      const double back = log_all.from_est(key, log_all.to_est(key, v.value_at(i)));
      if (std::fabs(back - v.value_at(i)) > 1e-12 * std::fabs(v.value_at(i))) {
        ok = false;
        detail = "transform round trip failed for " + key;
        break;
      }
    }
  }
  report(9, "parameter format and transform round trips", ok, detail);
}

void criterion_10_thread_determinism() {
  const fs::path dir1 = scratch_dir("threads1");
  const fs::path dir4 = scratch_dir("threads4");
  for (const auto& [dir, threads] : {std::pair{dir1, "1"}, std::pair{dir4, "4"}}) {
    cli::RunConfig cfg;
    cfg.set("U", "10");
    cfg.set("N", "50");
    cfg.set("seed", "106");
    cfg.set("run_level", "2");
    cfg.set("threads", threads);
    cli::cmd_simulate(cfg, dir);
    cli::cmd_pfilter(cfg, dir);
  }
  bool identical = true;
  std::string offender;
  for (const char* name :
       {"data.csv", "params.csv", "pfilter_logliks.csv", "pfilter_summary.csv"}) {
    if (slurp(dir1 / name) != slurp(dir4 / name)) {
      identical = false;
      offender = name;
      break;
    }
  }
  report(10, "pfilter outputs are byte-identical across thread counts", identical,
         identical ? "all CSV artifacts match between threads=1 and threads=4"
                   : offender + " differs");
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  criterion_1_oracle_agreement();
  criterion_2_and_3_estimator_dominance_and_jensen();
  criterion_4_pif_maximization();
  criterion_5_zero_perturbation();
  criterion_6_cooling_law();
  criterion_7_mcap_analytic();
  criterion_8_profile_coverage();
  criterion_9_format_roundtrips();
  criterion_10_thread_determinism();
  std::printf("%d of 10 criteria passed in %.0f s\n", 10 - g_failures, seconds_since(start));
  return g_failures;
}
