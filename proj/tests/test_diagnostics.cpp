#include "dpanel/diagnostics.hpp"
#include "dpanel/error.hpp"
#include "dpanel/pipeline.hpp"
#include "dpanel/simulate.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>

using namespace dpanel;

namespace {

simulate::DgpSpec ar_dgp(Index n, Index t_len, double rho, std::uint64_t seed) {
  simulate::DgpSpec dgp;
  dgp.n_entities = n;
  dgp.n_periods = t_len;
  dgp.rho = rho;
  dgp.seed = seed;
  return dgp;
}

EstimationResult gmm_fit(const PanelDataset& data, SpecKind kind, const std::string& instruments,
                         Weighting w = Weighting::two_step()) {
  EstimateOptions o;
  o.spec.dependent = "y";
  for (const auto& v : data.variables())
    if (v != "y") o.spec.exogenous.push_back({v, 0});
  apply_kind(o.spec, kind);
  o.instruments = InstrumentSpec::parse(instruments);
  o.weighting = w;
  o.max_ar_order = 0;
  return estimate(data, o).result;
}

ModelSpec re_spec(std::vector<LaggedTerm> x) {
  ModelSpec s;
  s.dependent = "y";
  s.ar_lags = 0;
  s.exogenous = std::move(x);
  apply_kind(s, SpecKind::re);
  return s;
}

}  // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("chi-square upper tail") {
  CHECK(chi_square_sf(0.0, 3) == 1.0);
  CHECK(chi_square_sf(2.0 * std::log(2.0), 2) == doctest::Approx(0.5).epsilon(1e-12));
  // df = 2 has the closed form exp(-x/2)
  CHECK(chi_square_sf(7.0, 2) == doctest::Approx(std::exp(-3.5)).epsilon(1e-12));
  CHECK(chi_square_sf(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-9));
  const double p = chi_square_sf(29.2175, 29);
  CHECK(p > 0.40);
  CHECK(p < 0.50);
  CHECK(chi_square_sf(10.0, 5) > chi_square_sf(11.0, 5));
  CHECK_THROWS_AS(chi_square_sf(-1.0, 2), InputError);
  CHECK_THROWS_AS(chi_square_sf(1.0, 0), InputError);
  CHECK(normal_two_sided_p(1.959963984540054) == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("J test") {
  const auto data = simulate::generate(ar_dgp(200, 6, 0.5, 31));
  const auto exact = gmm_fit(data, SpecKind::fd, "dyn(y,2,2):collapse");
  const auto je = j_test(exact);
  CHECK(je.df == 0);
  CHECK(je.statistic == 0.0);
  CHECK(je.p_value == 1.0);

  const auto over = gmm_fit(data, SpecKind::od, "dyn(y,2)");
  const auto jo = j_test(over);
  CHECK(jo.df == over.instruments.cols() - 1);
  CHECK(jo.statistic > 0);
  CHECK(jo.p_value == doctest::Approx(chi_square_sf(jo.statistic, jo.df)));
}

TEST_CASE("J p-values are close to uniform under a valid model") {
  const auto dgp = ar_dgp(300, 6, 0.5, 4242);
  std::vector<double> p;
  for (std::uint64_t r = 0; r < 1000; ++r)
    p.push_back(j_test(gmm_fit(simulate::generate(dgp, r), SpecKind::od, "dyn(y,2)")).p_value);
  std::sort(p.begin(), p.end());
  double d = 0;
  const double n = static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    d = std::max({d, (i + 1) / n - p[i], p[i] - i / n});
  CHECK(d < 0.08);
}

TEST_CASE("Arellano-Bond tests on a well specified model") {
  const auto dgp = ar_dgp(200, 6, 0.5, 777);
  const int reps = 500;
  int ar1_negative = 0, ar2_quiet = 0;
  for (int r = 0; r < reps; ++r) {
    const auto fit = gmm_fit(simulate::generate(dgp, static_cast<std::uint64_t>(r)), SpecKind::fd, "dyn(y,2)");
    const auto a1 = ab_serial_correlation(fit, 1);
    const auto a2 = ab_serial_correlation(fit, 2);
    if (a1.statistic < 0 && a1.p_value < 0.05) ++ar1_negative;
    if (a2.p_value >= 0.05) ++ar2_quiet;
  }
  CHECK(ar1_negative >= 0.90 * reps);
  CHECK(ar2_quiet >= 0.90 * reps);
}

TEST_CASE("raw serial correlation test has nominal size on white noise") {
  simulate::Normal rng(99);
  std::vector<AlignedRow> rows;
  for (Index i = 0; i < 100; ++i)
    for (Index t = 0; t < 8; ++t) rows.push_back({i, t});
  int rejected = 0;
  const int reps = 500;
  for (int r = 0; r < reps; ++r) {
    Eigen::VectorXd e(static_cast<Index>(rows.size()));
    for (Index k = 0; k < e.size(); ++k) e(k) = rng();
    if (serial_correlation_raw(rows, e, 2).p_value < 0.05) ++rejected;
  }
  const double rate = static_cast<double>(rejected) / reps;
  CHECK(rate > 0.02);
  CHECK(rate < 0.08);
}

TEST_CASE("AR test needs enough periods") {
  const auto data = simulate::generate(ar_dgp(100, 4, 0.5, 5));
  const auto fit = gmm_fit(data, SpecKind::fd, "dyn(y,2)");
  CHECK_NOTHROW(ab_serial_correlation(fit, 1));
  try {
    ab_serial_correlation(fit, 2);
    FAIL("expected an error");
  } catch (const EstimationError& e) {
    CHECK(std::string(e.what()).find("too few periods") != std::string::npos);
  }
  CHECK_THROWS_AS(ab_serial_correlation(fit, 0), InputError);
}

TEST_CASE("Swamy-Arora components") {
  simulate::DgpSpec dgp = ar_dgp(500, 8, 0.0, 808);
  dgp.exogenous_betas = {1.0};
  dgp.sigma_effect = 2.0;
  dgp.sigma_noise = 1.0;
  const auto data = simulate::generate(dgp);
  const auto spec = re_spec({{"x1", 0}});
  const auto vc = swamy_arora(spec, *align_for(data, spec));
  CHECK(std::abs(vc.rho_u - 0.8) <= 0.05);
  CHECK(vc.rho_u + vc.rho_e == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_FALSE(vc.floored);
  CHECK(vc.theta(8) == doctest::Approx(1.0 - std::sqrt(vc.sigma_e2 / (vc.sigma_e2 + 8 * vc.sigma_u2))));
}

TEST_CASE("negative between variance is floored") {
  simulate::DgpSpec dgp = ar_dgp(60, 8, 0.0, 606);
  dgp.exogenous_betas = {0.5};
  dgp.sigma_effect = 0.0;
  const auto spec = re_spec({{"x1", 0}});
  int floored = 0;
  for (std::uint64_t r = 0; r < 40; ++r) {
    const auto vc = swamy_arora(spec, *align_for(simulate::generate(dgp, r), spec));
    if (vc.floored) {
      ++floored;
      CHECK(vc.sigma_u2 == 0.0);
      CHECK(vc.rho_u == 0.0);
      CHECK(vc.rho_e == 1.0);
      CHECK(vc.theta(8) == 0.0);
    }
  }
  CHECK(floored > 0);
}

TEST_CASE("Hausman statistic") {
  simulate::DgpSpec dgp = ar_dgp(100, 5, 0.0, 1234);
  dgp.exogenous_betas = {1.0};
  const auto data = simulate::generate(dgp);
  ModelSpec fe = re_spec({{"x1", 0}});
  fe.effects = Effects::fixed;
  fe.transform = TransformKind::within;
  const auto fe_fit = fit_fixed_effects(fe, align_for(data, fe));

  // identical coefficients with a smaller covariance: statistic 0
  auto same = fe_fit;
  same.covariance_conventional *= 0.5;
  same.components = VarianceComponents{1.0, 1.0, 0.5, 0.5};
  const auto h0 = hausman(fe_fit, same);
  CHECK(h0.valid);
  CHECK(h0.statistic == doctest::Approx(0.0));
  CHECK(h0.p_value == doctest::Approx(1.0));

  // identical covariances: difference not positive definite
  auto flat = fe_fit;
  flat.components = VarianceComponents{1.0, 1.0, 0.5, 0.5};
  const auto hf = hausman(fe_fit, flat);
  CHECK_FALSE(hf.valid);
  CHECK_FALSE(hf.reason.empty());

  EstimationResult other = fe_fit;
  other.names = {"zz", "intercept"};
  CHECK_THROWS_AS(hausman(fe_fit, other), InputError);
}

TEST_CASE("Hausman rejects when effects are correlated with regressors") {
  simulate::DgpSpec dgp = ar_dgp(100, 5, 0.0, 2468);
  dgp.exogenous_betas = {1.0};
  dgp.exog_effect_loading = 1.0;
  int rejected = 0, reps = 100;
  for (int r = 0; r < reps; ++r) {
    EstimateOptions o;
    o.spec = re_spec({{"x1", 0}});
    const auto est = estimate(simulate::generate(dgp, static_cast<std::uint64_t>(r)), o);
    REQUIRE(est.diagnostics.hausman.has_value());
    if (est.diagnostics.hausman->valid && est.diagnostics.hausman->p_value < 0.05) ++rejected;
  }
  CHECK(rejected >= 0.80 * reps);
}

TEST_CASE("lag selection") {
  simulate::DgpSpec dgp = ar_dgp(60, 10, 0.6, 55);
  dgp.exogenous_betas = {1.0, 0.0};
  dgp.sigma_effect = 0.0;

  LagSearch single{"y", 0, 0, {{"x1", 0}}, true};
  const auto one = lag_selection(simulate::generate(dgp), single);
  CHECK(one.candidates.size() == 1);
  CHECK(one.chosen.size() == 3);

  LagSearch search{"y", 1, 2, {{"x1", 1}, {"x2", 2}}, true};
  const auto full = lag_selection(simulate::generate(dgp), search);
  CHECK(full.candidates.size() == 2 * 2 * 3);
  const Index n = full.candidates.front().observations;
  for (const auto& c : full.candidates) CHECK(c.observations == n);

  int noise_dropped = 0;
  const int reps = 100;
  for (int r = 0; r < reps; ++r) {
    const auto sel = lag_selection(simulate::generate(dgp, static_cast<std::uint64_t>(r)), search);
    if (sel.chosen.at(Criterion::schwarz).exogenous_lags.at(1) == 0) ++noise_dropped;
  }
  CHECK(noise_dropped >= 0.90 * reps);

  // entity order does not matter
  const auto data = simulate::generate(dgp, 3);
  auto names = data.entities();
  std::reverse(names.begin(), names.end());
  const auto a = lag_selection(data, search);
  const auto b = lag_selection(data.select_entities(names), search);
  for (auto c : {Criterion::aic, Criterion::schwarz, Criterion::hannan_quinn}) {
    CHECK(a.chosen.at(c).ar == b.chosen.at(c).ar);
    CHECK(a.chosen.at(c).exogenous_lags == b.chosen.at(c).exogenous_lags);
    CHECK(a.chosen.at(c).value(c) == doctest::Approx(b.chosen.at(c).value(c)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(lag_selection(data, LagSearch{"y", 0, -1, {}, true}), InputError);
}

TEST_CASE("report json") {
  DiagnosticsReport r;
  r.j = JTest{3.0, 2, chi_square_sf(3.0, 2)};
  r.ar_tests.push_back({2, 0.5, normal_two_sided_p(0.5)});
  HausmanResult h;
  h.reason = "degenerate";
  r.hausman = h;
  const auto j = nlohmann::json::parse(to_json(r));
  CHECK(j.at("j_statistic").get<double>() == 3.0);
  CHECK(j.at("j_df").get<int>() == 2);
  CHECK(j.at("ar_tests").size() == 1);
  CHECK(j.at("hausman").at("invalid").get<bool>());
}

}
