#pragma once

#include <array>
#include <string>
#include <string_view>

namespace dpanel::ratings {

struct Grade {
  std::string_view label;
  std::string_view description;
  double value;
};

// Brand trust letter grades and their numeric equivalents, best first.
inline constexpr std::array<Grade, 28> kScale{{
    {"AAA+", "Prime", 100.00},
    {"AAA", "Prime", 97.50},
    {"AAA-", "Prime", 95.00},
    {"AA+", "High grade", 92.50},
    {"AA", "High grade", 90.00},
    {"AA-", "High grade", 87.50},
    {"A+", "Upper Medium grade", 85.00},
    {"A", "Upper Medium grade", 82.50},
    {"A-", "Upper Medium grade", 80.00},
    {"BBB+", "Lower Medium grade", 75.00},
    {"BBB", "Lower Medium grade", 72.50},
    {"BBB-", "Lower Medium grade", 70.00},
    {"BB+", "Speculative", 67.50},
    {"BB", "Speculative", 65.00},
    {"BB-", "Speculative", 62.50},
    {"B+", "Highly Speculative", 60.00},
    {"B", "Highly Speculative", 57.50},
    {"B-", "Highly Speculative", 55.00},
    {"CCC+", "Substantial Risks", 50.00},
    {"CCC", "Substantial Risks", 47.50},
    {"CCC-", "Substantial Risks", 45.00},
    {"CC+", "Extremely Speculative", 42.50},
    {"CC", "Extremely Speculative", 40.00},
    {"CC-", "Extremely Speculative", 37.50},
    {"C+", "Default Imminent", 35.00},
    {"C", "Default Imminent", 32.50},
    {"C-", "Default Imminent", 30.00},
    {"D", "In Default", 25.00},
}};

// Case-insensitive; surrounding whitespace ignored. Throws InputError listing
// the valid labels for anything else.
double grade_to_numeric(std::string_view grade);

// Nearest grade by numeric value; midpoints go to the higher grade. Throws
// InputError outside [25, 100].
std::string numeric_to_grade(double value);

std::string scale_csv();

}  // namespace dpanel::ratings
