#pragma once

#include "dpanel/diagnostics.hpp"
#include "dpanel/estimator.hpp"
#include "dpanel/instruments.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace dpanel {

enum class SpecKind { pooled, fe, re, fd, od };

SpecKind parse_spec_kind(std::string_view name);
std::string to_string(SpecKind kind);
// Sets effects, transform and intercept on `spec` for `kind`.
void apply_kind(ModelSpec& spec, SpecKind kind);

struct EstimateOptions {
  ModelSpec spec;
  InstrumentSpec instruments;  // empty: plain OLS / GLS for pooled, fe, re
  Weighting weighting = Weighting::two_step();
  FeMethod fe_method = FeMethod::within;
  int max_ar_order = 2;  // AR(1)..AR(m) tests for differenced fits
  bool hausman = true;   // random effects only
};

struct Estimate {
  EstimationResult result;
  DiagnosticsReport diagnostics;
};

// Align, transform, build instruments, fit and run the diagnostics that apply.
Estimate estimate(const PanelDataset& data, const EstimateOptions& options);

}  // namespace dpanel
