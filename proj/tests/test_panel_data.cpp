#include "dpanel/error.hpp"
#include "dpanel/panel_data.hpp"
#include "dpanel/ratings.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <functional>

using namespace dpanel;

namespace {

std::vector<std::string> sample_firms() {
  std::ifstream f(testing::data_path("sample_firms.txt"));
  std::vector<std::string> out;
  for (std::string line; std::getline(f, line);)
    if (!line.empty()) out.push_back(line);
  return out;
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("panel_data") {

TEST_CASE("long csv round trip") {
  const std::string text =
      "entity,period,pp,bv\n"
      "a,2005,1.5,10\n"
      "a,2006,2.5,NA\n"
      "b,2005,-,11\n"
      "b,2007,4,12\n";
  const auto d = parse_long_csv(text);
  CHECK(d.n_entities() == 2);
  CHECK(d.n_periods() == 3);
  CHECK(d.first_period() == 2005);
  CHECK(d.series("pp").present_count() == 3);
  CHECK(d.series("bv").present_count() == 3);
  CHECK(d.series("pp").values(0, 1) == 2.5);
  CHECK_FALSE(d.series("pp").has(1, 0));
  CHECK_FALSE(d.series("bv").has(1, 1));

  const auto again = parse_long_csv(to_long_csv(d));
  CHECK(to_long_csv(again) == to_long_csv(d));
}

TEST_CASE("long csv errors name row and column") {
  auto bad_value = message_of([] { parse_long_csv("entity,period,pp\na,1,1\na,2,abc\n"); });
  CHECK(bad_value.find("row 3") != std::string::npos);
  CHECK(bad_value.find("pp") != std::string::npos);

  auto dup = message_of([] { parse_long_csv("entity,period,pp\na,1,1\na,1,2\n"); });
  CHECK(dup.find("duplicate") != std::string::npos);
  CHECK(dup.find("row 3") != std::string::npos);

  CHECK_THROWS_AS(parse_long_csv(""), InputError);
  CHECK_THROWS_AS(parse_long_csv("entity,period,pp\na,1\n"), InputError);
  CHECK_THROWS_AS(parse_long_csv("entity,period,pp\na,x,1\n"), InputError);
}

TEST_CASE("wide csv with separators and total row") {
  const std::string text =
      "company,2005,2006,2007\n"
      "Alpha,\"1,200.50\",1300,-\n"
      "Beta,100,,200\n"
      "Gamma,-,-,-\n"
      "TOTAL SECTOR,\"1,300.50\",1300,200\n";
  const auto d = parse_wide_csv(text, "pp");
  CHECK(d.n_entities() == 2);  // Gamma has no data
  CHECK(d.series("pp").values(0, 0) == doctest::Approx(1200.5));
  CHECK_FALSE(d.series("pp").has(1, 1));
  REQUIRE(d.checksums().count("pp") == 1);
  CHECK(*d.checksums().at("pp")[0] == doctest::Approx(1300.5));
}

TEST_CASE("wide csv errors") {
  CHECK_THROWS_AS(parse_wide_csv("company,2006,2005\na,1,2\n", "pp"), InputError);
  CHECK_THROWS_AS(parse_wide_csv("company,2005,y\na,1,2\n", "pp"), InputError);
  auto ragged = message_of([] { parse_wide_csv("company,2005,2006\na,1\n", "pp"); });
  CHECK(ragged.find("row 2") != std::string::npos);
  auto bad = message_of([] { parse_wide_csv("company,2005,2006\na,1,zz\n", "pp"); });
  CHECK(bad.find("2006") != std::string::npos);
}

TEST_CASE("premium fixture ingests") {
  const auto d = ingest_wide_csv(testing::data_path("premiums_2005_2015.csv"), "pp");
  CHECK(d.n_entities() == 81);
  CHECK(d.first_period() == 2005);
  CHECK(d.n_periods() == 11);
  CHECK(d.checksums().count("pp") == 1);
  CHECK_THROWS_AS(ingest_wide_csv(testing::data_path("no_such_file.csv"), "pp"), InputError);
}

TEST_CASE("sampled firms have more than 250 premium cells") {
  const auto d = ingest_wide_csv(testing::data_path("premiums_2005_2015.csv"), "pp");
  const auto firms = sample_firms();
  CHECK(firms.size() == 30);
  const auto s = d.select_entities(firms);
  const auto stats = describe(s, "pp");
  CHECK(stats.observations > 250);
  CHECK(stats.observations == 301);
  CHECK(stats.max >= stats.median);
  CHECK(stats.median >= stats.min);
}

TEST_CASE("describe values against hand computation") {
  const auto s = describe_values({1, 2, 3, 4, 10});
  CHECK(s.mean == doctest::Approx(4.0));
  CHECK(s.median == doctest::Approx(3.0));
  CHECK(s.max == 10.0);
  CHECK(s.min == 1.0);
  // sum of squares about mean: 9+4+1+0+36 = 50
  CHECK(s.standard_deviation == doctest::Approx(std::sqrt(50.0 / 4.0)));
  const double m2 = 50.0 / 5, m3 = (-27.0 - 8 - 1 + 0 + 216) / 5, m4 = (81.0 + 16 + 1 + 0 + 1296) / 5;
  CHECK(s.skewness == doctest::Approx(m3 / std::pow(m2, 1.5)));
  CHECK(s.kurtosis == doctest::Approx(m4 / (m2 * m2)));
  CHECK(s.observations == 5);

  CHECK(describe_values({4, 1, 3, 2}).median == doctest::Approx(2.5));
  CHECK_THROWS_AS(describe_values({1.0}), InputError);
  CHECK_THROWS_AS(describe_values({2.0, 2.0, 2.0}), InputError);
}

TEST_CASE("describe on brand trust grades") {
  std::vector<double> v;
  for (const char* g : {"AAA", "A", "CCC", "A", "AA"}) v.push_back(ratings::grade_to_numeric(g));
  const auto s = describe_values(v);
  CHECK(s.median == doctest::Approx(82.5));
  CHECK(s.max == doctest::Approx(97.5));
  CHECK(s.min == doctest::Approx(47.5));
}

TEST_CASE("align respects calendar gaps") {
  using testing::Grid;
  Grid y{{1.0, 2.0, std::nullopt, 4.0, 5.0}, {1.0, 2.0, 3.0, 4.0, 5.0}};
  Grid x{{10.0, 20.0, 30.0, 40.0, 50.0}, {11.0, 21.0, 31.0, std::nullopt, 51.0}};
  const auto d = testing::make_panel({{"y", y}, {"x", x}});
  const auto s = align(d, "y", {{"y", 1}, {"x", 0}});
  // entity 0: t=1, t=4 (t=3 lacks y2); entity 1: t=1, t=2, t=4 (t=3 lacks x)
  REQUIRE(s.size() == 5);
  CHECK(s.rows[0].entity == 0);
  CHECK(s.rows[0].period == 1);
  CHECK(s.rows[1].period == 4);
  CHECK(s.x(1, 0) == 4.0);
  CHECK(s.x(1, 1) == 50.0);
  CHECK(s.rows[3].period == 2);
  CHECK(s.rows[4].period == 4);
  CHECK(s.cross_sections() == 2);
  CHECK_THROWS_AS(align(d, "y", {{"y", 9}}), EstimationError);
  CHECK_THROWS_AS(align(d, "zz", {}), InputError);
}

TEST_CASE("select entities and labels") {
  const auto d = parse_long_csv("entity,period,pp\na,1,1\nb,1,2\nc,2,3\n");
  const auto s = d.select_entities({"c", "a"});
  CHECK(s.entities() == std::vector<std::string>{"c", "a"});
  CHECK(s.series("pp").values(0, 1) == 3.0);
  CHECK_THROWS_AS(d.select_entities({"zz"}), InputError);
  CHECK(LaggedTerm{"pp", 1}.label() != LaggedTerm{"pp", 0}.label());
}

}
