#include "dpanel/error.hpp"
#include "dpanel/transforms.hpp"

#include <doctest.h>

#include <cmath>

using namespace dpanel;
using std::nullopt;

namespace {

void check_series(const TimeSeries& got, const TimeSeries& want, double tol = 1e-12) {
  REQUIRE(got.size() == want.size());
  for (std::size_t t = 0; t < got.size(); ++t) {
    CAPTURE(t);
    REQUIRE(got[t].has_value() == want[t].has_value());
    if (got[t]) CHECK(std::abs(*got[t] - *want[t]) < tol);
  }
}

}  // namespace

TEST_SUITE("transforms") {

TEST_CASE("orthogonal deviations by hand") {
  check_series(transforms::orthogonal_deviation({1.0, 2.0}), {-std::sqrt(0.5), nullopt});
  const auto od = transforms::orthogonal_deviation({3.0, 1.0, 2.0});
  check_series(od, {std::sqrt(2.0 / 3.0) * 1.5, -std::sqrt(0.5), nullopt});
  CHECK(*od[0] == doctest::Approx(1.22474).epsilon(1e-5));
  CHECK(*od[1] == doctest::Approx(-0.70711).epsilon(1e-5));
}

TEST_CASE("orthogonal deviations skip gaps") {
  // later present values of period 0 are {5, 8}
  const auto od = transforms::orthogonal_deviation({2.0, nullopt, 5.0, 8.0});
  check_series(od, {std::sqrt(2.0 / 3.0) * (2.0 - 6.5), nullopt, std::sqrt(0.5) * (5.0 - 8.0), nullopt});
}

TEST_CASE("first differences break at gaps") {
  check_series(transforms::first_difference({1.0, 4.0, nullopt, 7.0, 10.0}),
               {nullopt, 3.0, nullopt, nullopt, 3.0});
}

TEST_CASE("lag shifts along the calendar") {
  check_series(transforms::lag({1.0, nullopt, 3.0}, 1), {nullopt, 1.0, nullopt});
  check_series(transforms::lag({1.0, 2.0, 3.0}, 2), {nullopt, nullopt, 1.0});
  CHECK_THROWS_AS(transforms::lag({1.0}, 0), InputError);
}

TEST_CASE("within and quasi demeaning") {
  const TimeSeries x{2.0, nullopt, 4.0, 6.0};
  check_series(transforms::within_demean(x), {-2.0, nullopt, 0.0, 2.0});
  check_series(transforms::quasi_demean(x, 0.0), x);
  check_series(transforms::quasi_demean(x, 1.0), transforms::within_demean(x));
  check_series(transforms::quasi_demean(x, 0.25), {1.0, nullopt, 3.0, 5.0});
  CHECK_THROWS_AS(transforms::quasi_demean(x, 1.5), InputError);
  CHECK_THROWS_AS(transforms::quasi_demean(x, -0.1), InputError);
}

TEST_CASE("constant series is annihilated") {
  const TimeSeries c{5.0, 5.0, nullopt, 5.0};
  for (const auto& v : transforms::first_difference(c))
    if (v) CHECK(*v == 0.0);
  for (const auto& v : transforms::orthogonal_deviation(c))
    if (v) CHECK(std::abs(*v) < 1e-14);
  for (const auto& v : transforms::within_demean(c))
    if (v) CHECK(*v == 0.0);
}

TEST_CASE("level reconstruction inverts the transform") {
  const TimeSeries x{1.0, 3.0, nullopt, 2.0, 7.0, 4.0};
  check_series(transforms::reconstruct_levels(transforms::first_difference(x), x,
                                              TransformKind::first_difference),
               {nullopt, 3.0, nullopt, nullopt, 7.0, 4.0});
  check_series(transforms::reconstruct_levels(transforms::orthogonal_deviation(x), x,
                                              TransformKind::orthogonal_deviation),
               {1.0, 3.0, nullopt, 2.0, 7.0, nullopt});
  CHECK_THROWS_AS(transforms::reconstruct_levels(x, x, TransformKind::within), InputError);
}

TEST_CASE("dummy expansion") {
  std::vector<AlignedRow> rows{{0, 0}, {0, 1}, {2, 0}, {2, 1}, {5, 1}};
  const auto full = transforms::expand_dummies(rows, transforms::DummyMode::full_set);
  CHECK(full.columns.cols() == 3);
  CHECK(full.entities == std::vector<Index>{0, 2, 5});
  CHECK(full.columns.rowwise().sum().isOnes());
  const auto drop = transforms::expand_dummies(rows, transforms::DummyMode::drop_first);
  CHECK(drop.columns.cols() == 2);
  CHECK(drop.columns.row(0).sum() == 0.0);
  CHECK(drop.columns(4, 1) == 1.0);
  CHECK_THROWS_AS(transforms::expand_dummies({{0, 0}, {0, 1}}, transforms::DummyMode::full_set),
                  InputError);
}

TEST_CASE("apply on sample rows matches the series functions") {
  // entity 0 at periods 0,1,3; entity 1 at periods 0,1,2
  std::vector<AlignedRow> rows{{0, 0}, {0, 1}, {0, 3}, {1, 0}, {1, 1}, {1, 2}};
  Eigen::MatrixXd cols(6, 2);
  cols << 1, 10, 2, 20, 4, 40, 3, 5, 5, 6, 9, 8;

  const auto fd = transforms::apply(rows, 4, cols, TransformKind::first_difference);
  CHECK(fd.kept == std::vector<Index>{1, 4, 5});
  CHECK(fd.values(0, 0) == 1.0);
  CHECK(fd.values(2, 1) == 2.0);
  CHECK(transforms::surviving_rows(rows, 4, TransformKind::first_difference) == fd.kept);

  const auto od = transforms::apply(rows, 4, cols, TransformKind::orthogonal_deviation);
  CHECK(od.kept == std::vector<Index>{0, 1, 3, 4});
  const auto e0 = transforms::orthogonal_deviation(
      transforms::entity_series(rows, 4, cols.col(0), 0));
  CHECK(od.values(0, 0) == doctest::Approx(*e0[0]));
  CHECK(od.values(1, 0) == doctest::Approx(*e0[1]));

  const auto re = transforms::apply(rows, 4, cols, TransformKind::quasi_demean, {0.5, 0.0});
  CHECK(re.values(0, 0) == doctest::Approx(1.0 - 0.5 * 7.0 / 3.0));
  CHECK(re.values(3, 0) == 3.0);
  CHECK_THROWS_AS(transforms::apply(rows, 4, cols, TransformKind::quasi_demean, {0.5}), InputError);
}

}
