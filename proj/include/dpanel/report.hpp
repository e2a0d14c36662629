#pragma once

#include "dpanel/diagnostics.hpp"
#include "dpanel/estimator.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dpanel::report {

// One model column; `error` is set when the fit failed.
struct Column {
  std::string title;
  std::optional<EstimationResult> result;
  DiagnosticsReport diagnostics;
  std::string error;
};

// Aligned text: coefficient, (SE), [t] per regressor, then R-squared, J (p),
// observations and notes.
std::string table(const std::vector<Column>& columns);

// Keys: coefficients, se, t, r2, j, j_p, plus sample and diagnostic details.
std::string json(const Column& column);
std::string json(const std::vector<Column>& columns);

// Long grid: row label then one column per model.
std::string csv(const std::vector<Column>& columns);

}  // namespace dpanel::report
