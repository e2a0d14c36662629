#include "dpanel/ratings.hpp"

#include "csv.hpp"
#include "dpanel/error.hpp"

#include <cmath>
#include <sstream>

namespace dpanel::ratings {

double grade_to_numeric(std::string_view grade) {
  const std::string key = csv::to_upper(csv::trim(grade));
  for (const auto& g : kScale)
    if (g.label == key) return g.value;
  std::string valid;
  for (const auto& g : kScale) {
    if (!valid.empty()) valid += ", ";
    valid += g.label;
  }
  throw InputError("unknown grade '" + std::string(grade) + "'; valid grades: " + valid);
}

std::string numeric_to_grade(double value) {
  if (!(value >= kScale.back().value && value <= kScale.front().value)) {
    throw InputError("rating value " + csv::format_double(value) + " outside [25, 100]");
  }
  // Scanning best-first with strict '<' keeps the higher grade on ties.
  const Grade* best = &kScale.front();
  double best_dist = std::abs(value - best->value);
  for (const auto& g : kScale) {
    const double d = std::abs(value - g.value);
    if (d < best_dist) {
      best = &g;
      best_dist = d;
    }
  }
  return std::string(best->label);
}

std::string scale_csv() {
  std::ostringstream out;
  out << "grade,description,value\n";
  for (const auto& g : kScale) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.2f", g.value);
    out << g.label << ',' << g.description << ',' << buf << '\n';
  }
  return out.str();
}

}  // namespace dpanel::ratings
