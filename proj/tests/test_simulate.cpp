#include "dpanel/error.hpp"
#include "dpanel/simulate.hpp"

#include <doctest.h>

#include <cmath>
#include <json.hpp>

using namespace dpanel;
using namespace dpanel::simulate;

namespace {

McEstimator od_estimator() {
  McEstimator e;
  e.name = "od";
  e.kind = SpecKind::od;
  e.instruments = InstrumentSpec::parse("dyn(y,2)");
  return e;
}

McEstimator fe_estimator() {
  McEstimator e;
  e.name = "fe";
  e.kind = SpecKind::fe;
  return e;
}

DgpSpec small(Index n, Index t_len, std::uint64_t seed) {
  DgpSpec d;
  d.n_entities = n;
  d.n_periods = t_len;
  d.seed = seed;
  return d;
}

}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("noise-free path decays geometrically") {
  DgpSpec d = small(3, 6, 1);
  d.sigma_effect = 0;
  d.sigma_noise = 0;
  d.rho = 0.5;
  d.initial_value = 1.0;
  const auto data = generate(d);
  const auto& y = data.series("y");
  for (Index i = 0; i < 3; ++i)
    for (Index t = 0; t < 6; ++t) CHECK(y.values(i, t) == doctest::Approx(std::pow(0.5, t + 1)).epsilon(1e-15));
  CHECK(data.first_period() == 1);
}

TEST_CASE("same seed gives the same panel") {
  DgpSpec d = small(10, 5, 42);
  d.exogenous_betas = {1.0, -0.5};
  CHECK(to_long_csv(generate(d)) == to_long_csv(generate(d)));
  CHECK(to_long_csv(generate(d, 1)) != to_long_csv(generate(d, 0)));
  DgpSpec other = d;
  other.seed = 43;
  CHECK(to_long_csv(generate(other)) != to_long_csv(generate(d)));
  CHECK(generate(d).variables() == std::vector<std::string>{"x1", "x2", "y"});
  CHECK(stream_seed(1, 2, 3) == stream_seed(1, 2, 3));
  CHECK(stream_seed(1, 2, 3) != stream_seed(1, 3, 2));
}

TEST_CASE("missingness deletes the expected share of cells") {
  DgpSpec d = small(31, 11, 9);
  d.missingness = 0.1;
  double deleted = 0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r)
    deleted += 31.0 * 11.0 - static_cast<double>(generate(d, static_cast<std::uint64_t>(r)).series("y").present_count());
  // 341 cells, 10% deleted
  CHECK(std::abs(deleted / reps - 34.1) < 2.0);

  // deletion does not change surviving values
  DgpSpec full = d;
  full.missingness = 0;
  const auto a = generate(d, 5);
  const auto b = generate(full, 5);
  REQUIRE(a.n_entities() == b.n_entities());
  for (Index i = 0; i < a.n_entities(); ++i)
    for (Index t = 0; t < a.n_periods(); ++t)
      if (a.series("y").has(i, t)) CHECK(a.series("y").values(i, t) == b.series("y").values(i, t));
}

TEST_CASE("validation") {
  DgpSpec d = small(10, 5, 1);
  d.rho = 1.0;
  CHECK_THROWS_AS(generate(d), InputError);
  d = small(10, 5, 1);
  d.missingness = 1.0;
  CHECK_THROWS_AS(generate(d), InputError);
  d = small(0, 5, 1);
  CHECK_THROWS_AS(generate(d), InputError);
  CHECK_THROWS_AS(run_experiment(small(10, 5, 1), {od_estimator()}, 0), InputError);
  CHECK_THROWS_AS(run_experiment(small(10, 5, 1), {}, 1), InputError);
}

TEST_CASE("single replication summary equals that replication") {
  const DgpSpec d = small(100, 6, 77);
  const auto s = run_experiment(d, {od_estimator()}, 1);
  REQUIRE(s.estimators.size() == 1);
  const auto& e = s.estimators[0];
  REQUIRE(e.successes == 1);
  const auto& p = e.parameters.at(0);
  const double b = e.estimates.at(0).at(0);
  CHECK(p.mean == b);
  CHECK(p.bias == doctest::Approx(b - 0.5));
  CHECK(p.rmse == doctest::Approx(std::abs(b - 0.5)));
  CHECK(p.truth == 0.5);
}

TEST_CASE("summaries are reproducible and internally consistent") {
  DgpSpec d = small(60, 6, 88);
  d.exogenous_betas = {1.0};
  McEstimator od = od_estimator();
  od.instruments = InstrumentSpec::parse("dyn(y,2), static(x1,0)");
  const auto a = run_experiment(d, {od, fe_estimator()}, 20);
  const auto b = run_experiment(d, {od, fe_estimator()}, 20);
  CHECK(to_json(a) == to_json(b));
  CHECK(to_csv(a) == to_csv(b));
  CHECK(a.seed_ledger.size() == 20);
  for (const auto& e : a.estimators) {
    CHECK(e.successes + e.failures == 20);
    for (const auto& p : e.parameters) {
      CHECK(p.rmse * p.rmse >= p.bias * p.bias - 1e-15);
      CHECK(p.sd >= 0);
    }
  }
  const auto j = nlohmann::json::parse(to_json(a));
  CHECK(j.at("seed_ledger").size() == 20);
  CHECK(to_csv(a).find("od,") != std::string::npos);
}

TEST_CASE("failed fits are counted") {
  McEstimator fd = od_estimator();
  fd.kind = SpecKind::fd;
  const auto s = run_experiment(small(20, 2, 1), {fd}, 3);
  CHECK(s.estimators[0].failures == 3);
  CHECK(s.estimators[0].successes == 0);
  CHECK_FALSE(s.estimators[0].failure_messages.empty());
}

TEST_CASE("GMM bias shrinks with N and fixed effects shows Nickell bias") {
  const int reps = 100;
  std::vector<double> bias, sd;
  for (Index n : {50, 100, 200}) {
    const auto s = run_experiment(small(n, 6, 1000 + static_cast<std::uint64_t>(n)), {od_estimator()}, reps);
    bias.push_back(std::abs(s.estimators[0].parameters[0].bias));
    sd.push_back(s.estimators[0].parameters[0].sd);
  }
  for (std::size_t k = 1; k < bias.size(); ++k) {
    const double mc = 2.0 * (sd[k] + sd[k - 1]) / std::sqrt(static_cast<double>(reps));
    CHECK(bias[k] <= bias[k - 1] + mc);
  }
  CHECK(bias.back() < 0.05);

  const auto s = run_experiment(small(200, 6, 31337), {fe_estimator(), od_estimator()}, 50);
  const double fe_bias = s.estimators[0].parameters[0].bias;
  const double od_bias = s.estimators[1].parameters[0].bias;
  CHECK(fe_bias < -0.1);
  CHECK(std::abs(od_bias) < std::abs(fe_bias));
}

}
