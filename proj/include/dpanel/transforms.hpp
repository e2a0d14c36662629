#pragma once

#include "dpanel/panel_data.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dpanel {

// One entity's history on the calendar grid; std::nullopt marks a missing cell.
using TimeSeries = std::vector<std::optional<double>>;

enum class TransformKind {
  none,                  // pooled
  within,                // entity demeaning
  dummies,               // LSDV entity indicators
  first_difference,
  orthogonal_deviation,  // forward orthogonal deviation
  quasi_demean,          // random-effects GLS, theta per entity
};

std::string to_string(TransformKind kind);

namespace transforms {

TimeSeries lag(const TimeSeries& x, int k);

// x_t - x_{t-1} where both periods are present.
TimeSeries first_difference(const TimeSeries& x);

// sqrt(T_t / (T_t + 1)) * (x_t - mean of the T_t later present values).
// The last present period has no output.
TimeSeries orthogonal_deviation(const TimeSeries& x);

TimeSeries within_demean(const TimeSeries& x);

// x_t - theta * mean(x); theta in [0, 1].
TimeSeries quasi_demean(const TimeSeries& x, double theta);

// Maps transformed fitted values back to levels using the original series
// as anchor. Only first_difference and orthogonal_deviation are invertible
// this way.
TimeSeries reconstruct_levels(const TimeSeries& fitted, const TimeSeries& original,
                              TransformKind kind);

enum class DummyMode {
  full_set,          // one column per entity, no global intercept
  drop_first,        // N - 1 columns, used alongside an intercept
};

struct DummyBlock {
  Eigen::MatrixXd columns;
  std::vector<Index> entities;  // entity for each column
  DummyMode mode = DummyMode::full_set;
};

// Indicator columns for the entities appearing in `rows`, in first-appearance order.
DummyBlock expand_dummies(const std::vector<AlignedRow>& rows, DummyMode mode);

// Result of applying a transform to sample-aligned columns. Row r of
// `values` corresponds to source row `kept[r]`.
struct TransformedColumns {
  Eigen::MatrixXd values;
  std::vector<Index> kept;
};

// Applies a per-entity transform to every column of `columns`, whose rows
// follow `rows` (entity-contiguous). `theta` is indexed by entity and only
// read for quasi_demean. `dummies` is treated as `none` here.
TransformedColumns apply(const std::vector<AlignedRow>& rows, Index n_periods,
                         const Eigen::MatrixXd& columns, TransformKind kind,
                         const std::vector<double>& theta = {});

// Rows that survive `kind` given the presence pattern of `rows`.
std::vector<Index> surviving_rows(const std::vector<AlignedRow>& rows, Index n_periods,
                                  TransformKind kind);

// Period-indexed series of one entity's values taken from sample rows.
TimeSeries entity_series(const std::vector<AlignedRow>& rows, Index n_periods,
                         const Eigen::VectorXd& values, Index entity);

}  // namespace transforms
}  // namespace dpanel
