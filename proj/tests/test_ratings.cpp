#include "dpanel/error.hpp"
#include "dpanel/ratings.hpp"

#include <doctest.h>

#include <algorithm>
#include <string>

using namespace dpanel;

TEST_SUITE("ratings") {

TEST_CASE("grade to numeric") {
  CHECK(ratings::grade_to_numeric("AAA") == 97.50);
  CHECK(ratings::grade_to_numeric("AAA+") == 100.0);
  CHECK(ratings::grade_to_numeric("BBB+") == 75.0);
  CHECK(ratings::grade_to_numeric("D") == 25.0);
  CHECK(ratings::grade_to_numeric("  bb- ") == 62.5);
}

TEST_CASE("unknown grade lists the valid labels") {
  try {
    ratings::grade_to_numeric("Z");
    FAIL("expected an exception");
  } catch (const InputError& e) {
    const std::string m = e.what();
    CHECK(m.find("'Z'") != std::string::npos);
    CHECK(m.find("AAA+") != std::string::npos);
    CHECK(m.find("C-") != std::string::npos);
  }
}

TEST_CASE("numeric to grade is nearest with ties upward") {
  CHECK(ratings::numeric_to_grade(97.5) == "AAA");
  CHECK(ratings::numeric_to_grade(98.0) == "AAA");
  CHECK(ratings::numeric_to_grade(77.5) == "A-");  // midway between 75 and 80
  CHECK(ratings::numeric_to_grade(27.75) == "C-");
  CHECK(ratings::numeric_to_grade(27.5) == "C-");
  CHECK(ratings::numeric_to_grade(25.0) == "D");
  CHECK_THROWS_AS(ratings::numeric_to_grade(100.01), InputError);
  CHECK_THROWS_AS(ratings::numeric_to_grade(24.9), InputError);
}

TEST_CASE("round trip over the whole scale") {
  for (const auto& g : ratings::kScale) {
    CHECK(ratings::numeric_to_grade(ratings::grade_to_numeric(g.label)) == g.label);
  }
}

TEST_CASE("scale is strictly decreasing and exported") {
  for (std::size_t i = 1; i < ratings::kScale.size(); ++i)
    CHECK(ratings::kScale[i].value < ratings::kScale[i - 1].value);
  const auto text = ratings::scale_csv();
  CHECK(text.find("AAA,Prime,97.50\n") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 29);
}

}
