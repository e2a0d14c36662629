#include "dpanel/transforms.hpp"

#include "dpanel/error.hpp"

#include <cmath>

namespace dpanel {

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::none: return "none";
    case TransformKind::within: return "within";
    case TransformKind::dummies: return "dummies";
    case TransformKind::first_difference: return "first_difference";
    case TransformKind::orthogonal_deviation: return "orthogonal_deviation";
    case TransformKind::quasi_demean: return "quasi_demean";
  }
  return "unknown";
}

namespace transforms {

TimeSeries lag(const TimeSeries& x, int k) {
  if (k < 1) throw InputError("lag order must be >= 1");
  TimeSeries out(x.size());
  for (std::size_t t = static_cast<std::size_t>(k); t < x.size(); ++t) out[t] = x[t - static_cast<std::size_t>(k)];
  return out;
}

TimeSeries first_difference(const TimeSeries& x) {
  TimeSeries out(x.size());
  for (std::size_t t = 1; t < x.size(); ++t)
    if (x[t] && x[t - 1]) out[t] = *x[t] - *x[t - 1];
  return out;
}

TimeSeries orthogonal_deviation(const TimeSeries& x) {
  TimeSeries out(x.size());
  double later_sum = 0;
  int later_count = 0;
  for (std::size_t k = x.size(); k-- > 0;) {
    if (!x[k]) continue;
    if (later_count > 0) {
      const double c = std::sqrt(static_cast<double>(later_count) / (later_count + 1.0));
      out[k] = c * (*x[k] - later_sum / later_count);
    }
    later_sum += *x[k];
    ++later_count;
  }
  return out;
}

namespace {

std::optional<double> mean_of(const TimeSeries& x) {
  double sum = 0;
  int n = 0;
  for (const auto& v : x) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

}  // namespace

TimeSeries within_demean(const TimeSeries& x) {
  return quasi_demean(x, 1.0);
}

TimeSeries quasi_demean(const TimeSeries& x, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw InputError("theta must lie in [0, 1]");
  TimeSeries out(x.size());
  const auto m = mean_of(x);
  if (!m) return out;
  const double shift = theta * *m;
  for (std::size_t t = 0; t < x.size(); ++t)
    if (x[t]) out[t] = *x[t] - shift;
  return out;
}

TimeSeries reconstruct_levels(const TimeSeries& fitted, const TimeSeries& original,
                              TransformKind kind) {
  TimeSeries out(fitted.size());
  if (kind == TransformKind::first_difference) {
    for (std::size_t t = 1; t < fitted.size() && t < original.size(); ++t)
      if (fitted[t] && original[t - 1]) out[t] = *original[t - 1] + *fitted[t];
    return out;
  }
  if (kind == TransformKind::orthogonal_deviation) {
    double later_sum = 0;
    int later_count = 0;
    for (std::size_t k = original.size(); k-- > 0;) {
      if (k < fitted.size() && fitted[k] && later_count > 0) {
        const double c = std::sqrt(static_cast<double>(later_count) / (later_count + 1.0));
        out[k] = *fitted[k] / c + later_sum / later_count;
      }
      if (original[k]) {
        later_sum += *original[k];
        ++later_count;
      }
    }
    return out;
  }
  throw InputError("level reconstruction is defined for first_difference and orthogonal_deviation only");
}

DummyBlock expand_dummies(const std::vector<AlignedRow>& rows, DummyMode mode) {
  DummyBlock block;
  block.mode = mode;
  std::vector<Index> column_of;  // per source entity, -1 when unseen
  for (const auto& r : rows) {
    if (r.entity >= static_cast<Index>(column_of.size())) column_of.resize(static_cast<std::size_t>(r.entity + 1), -1);
    if (column_of[static_cast<std::size_t>(r.entity)] < 0) {
      column_of[static_cast<std::size_t>(r.entity)] = static_cast<Index>(block.entities.size());
      block.entities.push_back(r.entity);
    }
  }
  if (block.entities.size() < 2) throw InputError("dummy expansion needs at least 2 entities");
  const Index offset = mode == DummyMode::drop_first ? 1 : 0;
  const Index n_cols = static_cast<Index>(block.entities.size()) - offset;
  block.columns = Eigen::MatrixXd::Zero(static_cast<Index>(rows.size()), n_cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Index c = column_of[static_cast<std::size_t>(rows[r].entity)] - offset;
    if (c >= 0) block.columns(static_cast<Index>(r), c) = 1.0;
  }
  if (offset) block.entities.erase(block.entities.begin());
  return block;
}

namespace {

struct EntityRange {
  std::size_t begin;
  std::size_t end;
};

std::vector<EntityRange> entity_ranges(const std::vector<AlignedRow>& rows) {
  std::vector<EntityRange> out;
  std::size_t b = 0;
  for (std::size_t r = 1; r <= rows.size(); ++r) {
    if (r == rows.size() || rows[r].entity != rows[b].entity) {
      out.push_back({b, r});
      b = r;
    }
  }
  return out;
}

TimeSeries apply_one(const TimeSeries& x, TransformKind kind, double theta) {
  switch (kind) {
    case TransformKind::none:
    case TransformKind::dummies: return x;
    case TransformKind::within: return within_demean(x);
    case TransformKind::first_difference: return first_difference(x);
    case TransformKind::orthogonal_deviation: return orthogonal_deviation(x);
    case TransformKind::quasi_demean: return quasi_demean(x, theta);
  }
  return x;
}

}  // namespace

std::vector<Index> surviving_rows(const std::vector<AlignedRow>& rows, Index n_periods,
                                  TransformKind kind) {
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(static_cast<Index>(rows.size()), 1);
  std::vector<double> theta;
  if (kind == TransformKind::quasi_demean) kind = TransformKind::none;
  return apply(rows, n_periods, ones, kind, theta).kept;
}

TransformedColumns apply(const std::vector<AlignedRow>& rows, Index n_periods,
                         const Eigen::MatrixXd& columns, TransformKind kind,
                         const std::vector<double>& theta) {
  if (columns.rows() != static_cast<Index>(rows.size()))
    throw InputError("column block does not match sample rows");
  const auto ranges = entity_ranges(rows);
  TransformedColumns out;
  // surviving rows from the presence pattern
  for (const auto& range : ranges) {
    TimeSeries probe(static_cast<std::size_t>(n_periods));
    for (std::size_t r = range.begin; r < range.end; ++r) probe[static_cast<std::size_t>(rows[r].period)] = 0.0;
    TimeSeries shaped = kind == TransformKind::quasi_demean ? probe : apply_one(probe, kind, 0.0);
    for (std::size_t r = range.begin; r < range.end; ++r)
      if (shaped[static_cast<std::size_t>(rows[r].period)]) out.kept.push_back(static_cast<Index>(r));
  }
  std::vector<Index> position(rows.size(), -1);
  for (std::size_t k = 0; k < out.kept.size(); ++k) position[static_cast<std::size_t>(out.kept[k])] = static_cast<Index>(k);

  out.values.resize(static_cast<Index>(out.kept.size()), columns.cols());
  for (const auto& range : ranges) {
    const Index entity = rows[range.begin].entity;
    double th = 0.0;
    if (kind == TransformKind::quasi_demean) {
      if (entity >= static_cast<Index>(theta.size())) throw InputError("missing theta for entity");
      th = theta[static_cast<std::size_t>(entity)];
    }
    for (Index c = 0; c < columns.cols(); ++c) {
      TimeSeries x(static_cast<std::size_t>(n_periods));
      for (std::size_t r = range.begin; r < range.end; ++r)
        x[static_cast<std::size_t>(rows[r].period)] = columns(static_cast<Index>(r), c);
      const TimeSeries tx = apply_one(x, kind, th);
      for (std::size_t r = range.begin; r < range.end; ++r) {
        const Index pos = position[r];
        if (pos >= 0) out.values(pos, c) = *tx[static_cast<std::size_t>(rows[r].period)];
      }
    }
  }
  return out;
}

TimeSeries entity_series(const std::vector<AlignedRow>& rows, Index n_periods,
                         const Eigen::VectorXd& values, Index entity) {
  TimeSeries out(static_cast<std::size_t>(n_periods));
  for (std::size_t r = 0; r < rows.size(); ++r)
    if (rows[r].entity == entity) out[static_cast<std::size_t>(rows[r].period)] = values(static_cast<Index>(r));
  return out;
}

}  // namespace transforms
}  // namespace dpanel
