#pragma once

#include "dpanel/panel_data.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dpanel {

// Strictly exogenous instrument: variable at lags lag_from..lag_to, valued on
// the transformed estimation rows.
struct StaticInstrument {
  std::string variable;
  int lag_from = 0;
  int lag_to = 0;
};

// Arellano-Bond block: levels dated t - start and earlier (down to t - bound
// when bound is set), one column per (period, lag) or per lag when collapsed.
struct DynamicInstrument {
  std::string variable;
  int start = 2;
  std::optional<int> bound;
  bool collapsed = false;
};

struct InstrumentSpec {
  std::vector<StaticInstrument> statics;
  std::vector<DynamicInstrument> dynamics;
  bool intercept = false;

  bool empty() const { return statics.empty() && dynamics.empty() && !intercept; }
  // Cells that must be present on every estimation row.
  std::vector<LaggedTerm> static_terms() const;

  // Grammar: comma-separated items of
  //   dyn(VAR,START[,BOUND])[:collapse]
  //   static(VAR,LAG_FROM..LAG_TO) | static(VAR,LAG)
  //   intercept
  // "@dyn(pp,-2)" is accepted as dyn(pp,2).
  static InstrumentSpec parse(std::string_view text);
  std::string to_string() const;
};

struct InstrumentMatrix {
  Eigen::MatrixXd values;  // one row per estimation row
  std::vector<std::string> labels;
  std::vector<std::string> warnings;

  Index count() const { return values.cols(); }
};

// `rows` are the transformed estimation rows; instrument levels are read from
// `data` at (period + period_offset) - lag. Forward-deviation rows use offset 1,
// so a row dated t is the equation of period t + 1 and dyn(y,2) reaches y_{t-1}.
// Missing levels contribute zeros. Columns that end up identically zero are
// dropped with a warning.
InstrumentMatrix build_dynamic_block(const PanelDataset& data, const std::vector<AlignedRow>& rows,
                                     const DynamicInstrument& spec, Index period_offset = 0);

// Static columns already transformed like the regressors.
struct StaticColumns {
  Eigen::MatrixXd values;
  std::vector<std::string> labels;
};

InstrumentMatrix build_static_block(const StaticColumns& columns,
                                    const std::optional<Eigen::VectorXd>& intercept);

InstrumentMatrix assemble(const InstrumentSpec& spec, const PanelDataset& data,
                          const std::vector<AlignedRow>& rows, const StaticColumns& statics,
                          const std::optional<Eigen::VectorXd>& intercept, Index n_regressors,
                          Index period_offset = 0);

}  // namespace dpanel
