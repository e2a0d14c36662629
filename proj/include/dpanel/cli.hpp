#pragma once

#include "dpanel/panel_data.hpp"
#include "dpanel/pipeline.hpp"
#include "dpanel/report.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dpanel::cli {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kOutDirEnv = "DPANEL_OUT_DIR";

enum ExitCode { kOk = 0, kEstimationFailure = 1, kUsage = 2 };

// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Parses "pp(-1), bv, bt" into terms.
std::vector<LaggedTerm> parse_terms(const std::string& text);

struct ReplicateOptions {
  std::string dependent = "pp";
  std::vector<std::string> regressors{"bv", "bt"};
  std::optional<int> max_lag;  // bound on the dynamic blocks
  bool collapse = false;
  Weighting weighting = Weighting::n_step();
};

// Pooled, FE, RE with static instruments (lags 0..2 of each regressor plus
// intercept), then OD and FD with dyn(.,2) blocks for every variable.
std::vector<report::Column> replicate(const PanelDataset& data, const ReplicateOptions& options);

std::string sha256_file(const std::string& path);

}  // namespace dpanel::cli
