#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "panelsmc/errors.hpp"
#include "panelsmc/filter.hpp"
#include "panelsmc/gompertz.hpp"

using namespace panelsmc;

TEST_CASE("deterministic latent path gives the exact likelihood at any J") {
  PanelModel m = build_panel_gompertz(1, 25, 4);
  // sigma = 0 with X.0 = K = 1 pins every particle at X = 1
  std::vector<double> theta = m.unit_params(0);
  theta[m.coef().index_of("sigma")] = 0.0;

  GompertzParams p{0.1, 0.0, 1.0, 0.1, 1.0};
  double expected = 0.0;
  for (std::size_t n = 0; n < m.unit(0).n_obs(); ++n)
    expected += gompertz_dmeasure(m.unit(0).data(n, 0), 1.0, p);

  for (std::size_t j : {2u, 17u, 300u}) {
    RngStream rng(9, {j});
    const UnitFilterResult r = unit_particle_filter(m.unit(0), theta, j, rng);
    CHECK(r.loglik == doctest::Approx(expected).epsilon(1e-12));
    CHECK(r.n_particles == j);
    CHECK(r.cond_loglik.size() == 25);
    double sum = 0.0;
    for (double c : r.cond_loglik) sum += c;
    CHECK(r.loglik == sum);
    for (double e : r.ess) {
      CHECK(e >= 1.0);
      CHECK(e <= static_cast<double>(j) * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("unit filter agrees with the exact likelihood within jackknife error") {
  PanelModel m = build_panel_gompertz(1, 50, 31);
  const double exact = gompertz_kalman_loglik(m).total;
  const auto theta = m.unit_params(0);
  std::vector<double> logliks;
  for (int rep = 0; rep < 10; ++rep) {
    RngStream rng(77, {static_cast<std::uint64_t>(rep)});
    logliks.push_back(unit_particle_filter(m.unit(0), theta, 2000, rng).loglik);
  }
  const MeanEstimate est = log_mean_exp(logliks, true);
  REQUIRE(est.se.has_value());
  CHECK(std::fabs(est.estimate - exact) <= 3.0 * *est.se);
}

TEST_CASE("weight degeneracy floors the conditional likelihood and warns") {
  PanelModel m = build_panel_gompertz(1, 5, 6);
  PanelData d = simulate_panel(m, m.coef(), 6);
  d.units[0].obs(2, 0) = 1e300;  // unreachable under tau = 0.1
  PanelModel broken = m.with_data(d);

  RngStream rng(3, {1});
  const UnitFilterResult r = unit_particle_filter(broken.unit(0), broken.unit_params(0), 100, rng);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].time_index == 2);
  CHECK(r.cond_loglik[2] == std::log(default_filter_tol));
  CHECK(r.loglik >= 5.0 * std::log(default_filter_tol));
  CHECK(r.ess[2] == doctest::Approx(100.0));
}

TEST_CASE("resampling produces expected offspring counts") {
  const std::vector<double> weights = {0.1, 0.2, 0.3, 0.15, 0.25};
  const std::size_t j_out = 50;
  const int draws = 10000;
  std::vector<std::size_t> idx(j_out);

  for (const bool systematic : {false, true}) {
    RngStream rng(19, {systematic ? 1u : 0u});
    std::vector<double> counts(weights.size(), 0.0);
    for (int t = 0; t < draws; ++t) {
      if (systematic)
        resample_systematic(weights, idx, rng);
      else
        resample_multinomial(weights, idx, rng);
      for (std::size_t j : idx) counts[j] += 1.0;
    }
    for (std::size_t i = 0; i < weights.size(); ++i) {
      const double expected = draws * static_cast<double>(j_out) * weights[i];
      const double sd =
          std::sqrt(draws * static_cast<double>(j_out) * weights[i] * (1.0 - weights[i]));
      CHECK(std::fabs(counts[i] - expected) <= 3.0 * sd);
    }
  }
}

TEST_CASE("log_mean_exp basics") {
  const std::vector<double> constant = {2.5, 2.5, 2.5};
  const MeanEstimate c = log_mean_exp(constant, true);
  CHECK(c.estimate == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(*c.se == 0.0);

  const std::vector<double> two = {std::log(2.0), std::log(4.0)};
  CHECK(log_mean_exp(two).estimate == doctest::Approx(std::log(3.0)).epsilon(1e-14));

  // shift equivariance
  RngStream rng(5);
  std::vector<double> values(8), shifted(8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = rng.normal();
    shifted[i] = values[i] + 123.25;
  }
  const MeanEstimate base = log_mean_exp(values, true);
  const MeanEstimate moved = log_mean_exp(shifted, true);
  CHECK(moved.estimate - base.estimate == doctest::Approx(123.25).epsilon(1e-12));
  CHECK(*moved.se == doctest::Approx(*base.se).epsilon(1e-9));

  CHECK_THROWS_AS(log_mean_exp({}), DomainError);
  CHECK_FALSE(log_mean_exp(std::vector<double>{1.0}, true).se.has_value());
}

TEST_CASE("panel_log_mean_exp reduces over units") {
  Matrix identical(3, 2);
  for (std::size_t r = 0; r < 3; ++r) {
    identical(r, 0) = 1.5;
    identical(r, 1) = -0.5;
  }
  const MeanEstimate same = panel_log_mean_exp(identical, true);
  CHECK(same.estimate == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(*same.se == 0.0);

  // a single unit reduces to plain log_mean_exp of the column
  RngStream rng(6);
  Matrix one_unit(5, 1);
  std::vector<double> column(5);
  for (std::size_t r = 0; r < 5; ++r) {
    column[r] = rng.normal();
    one_unit(r, 0) = column[r];
  }
  CHECK(panel_log_mean_exp(one_unit, true).estimate ==
        doctest::Approx(log_mean_exp(column, true).estimate).epsilon(1e-14));
}

TEST_CASE("panel estimator dominates the pooled estimator and Jensen holds") {
  PanelModel m = build_panel_gompertz(10, 15, 23);
  const std::size_t n_sets = 40, reps = 4, j_count = 100;

  std::vector<double> lambda1(n_sets), lambda2(n_sets);
  for (std::size_t s = 0; s < n_sets; ++s) {
    Matrix unit_logliks(reps, m.n_units());
    std::vector<double> totals(reps);
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const PanelFilterResult r = panel_particle_filter(
          m, m.coef(), j_count, 1000 + s, Resampler::multinomial, default_filter_tol, 1, rep);
      totals[rep] = r.loglik;
      for (std::size_t u = 0; u < m.n_units(); ++u)
        unit_logliks(rep, u) = r.unit_results[u].loglik;
    }
    lambda1[s] = log_mean_exp(totals).estimate;
    lambda2[s] = panel_log_mean_exp(unit_logliks).estimate;

    // Jensen: the mean of replicate log likelihoods cannot exceed the
    // log of the averaged likelihoods
    double mean = 0.0;
    for (double t : totals) mean += t;
    mean /= static_cast<double>(reps);
    CHECK(mean <= lambda1[s] + 1e-12);
  }

  const auto variance = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(v.size() - 1);
  };
  CHECK(variance(lambda2) < variance(lambda1));
}

TEST_CASE("panel filter: reduction, unit-keyed streams, thread invariance") {
  PanelModel m = build_panel_gompertz(4, 10, 11);

  // single-unit panel matches the unit filter with the same stream
  const std::size_t one[] = {2};
  PanelModel single = m.subset_units(one);
  const PanelFilterResult via_panel =
      panel_particle_filter(single, single.coef(), 64, 99, Resampler::multinomial,
                            default_filter_tol, 1, 5);
  RngStream rng(99, {rng_tag::pfilter, 5, fnv1a64("unit3")});
  const UnitFilterResult direct =
      unit_particle_filter(single.unit(0), single.unit_params(0), 64, rng);
  CHECK(via_panel.loglik == direct.loglik);
  CHECK(via_panel.unit_results[0].cond_loglik == direct.cond_loglik);

  // unit streams are keyed by name: permuting the panel leaves every unit's
  // log likelihood unchanged
  const std::size_t permuted[] = {3, 1, 0, 2};
  PanelModel sub = m.subset_units(permuted);
  const PanelFilterResult shuffled = panel_particle_filter(sub, sub.coef(), 64, 7);
  const PanelFilterResult plain = panel_particle_filter(m, m.coef(), 64, 7);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(shuffled.unit_results[i].loglik == plain.unit_results[permuted[i]].loglik);
  CHECK(shuffled.loglik == doctest::Approx(plain.loglik).epsilon(1e-12));

  // additivity with a fixed summation order
  const PanelFilterResult full = panel_particle_filter(m, m.coef(), 64, 7);
  double sum = 0.0;
  for (const auto& r : full.unit_results) sum += r.loglik;
  CHECK(full.loglik == sum);

  // thread count changes nothing
  const PanelFilterResult threaded =
      panel_particle_filter(m, m.coef(), 64, 7, Resampler::multinomial, default_filter_tol, 4);
  CHECK(threaded.loglik == full.loglik);
  for (std::size_t u = 0; u < m.n_units(); ++u)
    CHECK(threaded.unit_results[u].cond_loglik == full.unit_results[u].cond_loglik);
}

TEST_CASE("panel filter matches the exact panel likelihood") {
  PanelModel m = build_panel_gompertz(10, 50, 37);
  const double exact = gompertz_kalman_loglik(m).total;
  const std::size_t reps = 10;
  Matrix unit_logliks(reps, m.n_units());
  for (std::size_t rep = 0; rep < reps; ++rep) {
    const PanelFilterResult r = panel_particle_filter(m, m.coef(), 500, 15, Resampler::multinomial,
                                                      default_filter_tol, 2, rep);
    for (std::size_t u = 0; u < m.n_units(); ++u)
      unit_logliks(rep, u) = r.unit_results[u].loglik;
  }
  const MeanEstimate est = panel_log_mean_exp(unit_logliks, true);
  REQUIRE(est.se.has_value());
  CHECK(std::fabs(est.estimate - exact) <= 3.0 * *est.se);
}

TEST_CASE("likelihood-scale unbiasedness against the exact value") {
  PanelModel m = build_panel_gompertz(5, 20, 47);
  const double exact = gompertz_kalman_loglik(m).total;
  const std::size_t reps = 200;
  double ratio_sum = 0.0;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    const PanelFilterResult r = panel_particle_filter(m, m.coef(), 1000, 61,
                                                      Resampler::multinomial, default_filter_tol,
                                                      2, rep);
    ratio_sum += std::exp(r.loglik - exact);
  }
  const double mean_ratio = ratio_sum / static_cast<double>(reps);
  CHECK(mean_ratio >= 0.8);
  CHECK(mean_ratio <= 1.25);
}

TEST_CASE("systematic resampling drives a working filter too") {
  PanelModel m = build_panel_gompertz(2, 20, 41);
  const double exact = gompertz_kalman_loglik(m).total;
  std::vector<double> logliks;
  for (int rep = 0; rep < 8; ++rep)
    logliks.push_back(panel_particle_filter(m, m.coef(), 800, 53, Resampler::systematic,
                                            default_filter_tol, 1, rep)
                          .loglik);
  const MeanEstimate est = log_mean_exp(logliks, true);
  CHECK(std::fabs(est.estimate - exact) <= 4.0 * *est.se);
}

TEST_CASE("filter argument validation") {
  PanelModel m = build_panel_gompertz(1, 3, 2);
  RngStream rng(1);
  CHECK_THROWS_AS(unit_particle_filter(m.unit(0), m.unit_params(0), 1, rng), DomainError);
  CHECK_THROWS_AS(
      unit_particle_filter(m.unit(0), m.unit_params(0), 10, rng, Resampler::multinomial, -1.0),
      DomainError);
}
