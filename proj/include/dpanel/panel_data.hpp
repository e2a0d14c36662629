#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace dpanel {

using Index = Eigen::Index;
using PresenceMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// One variable over the entity x period grid. Cells with present(i, t) ==
// false carry no data; their value is unspecified (NaN after ingestion).
struct Series {
  Eigen::MatrixXd values;
  PresenceMatrix present;

  static Series missing(Index entities, Index periods);
  bool has(Index entity, Index period) const { return present(entity, period); }
  Index present_count() const { return present.count(); }
};

// Unbalanced entity x period container. Periods are contiguous integer
// labels; gaps inside an entity's history are missing cells.
class PanelDataset {
 public:
  PanelDataset(std::vector<std::string> entities, int first_period, Index n_periods,
               std::map<std::string, Series> series,
               std::map<std::string, std::string> units = {});

  const std::vector<std::string>& entities() const { return entities_; }
  Index n_entities() const { return static_cast<Index>(entities_.size()); }
  Index n_periods() const { return n_periods_; }
  int first_period() const { return first_period_; }
  int period_label(Index t) const { return first_period_ + static_cast<int>(t); }
  std::vector<int> periods() const;

  bool has(std::string_view variable) const;
  const Series& series(std::string_view variable) const;
  std::vector<std::string> variables() const;
  std::optional<std::string> unit(std::string_view variable) const;

  // Column totals carried by a wide file's trailing total row.
  const std::map<std::string, std::vector<std::optional<double>>>& checksums() const {
    return checksums_;
  }
  void set_checksum(const std::string& variable, std::vector<std::optional<double>> totals);

  // Copy restricted to the given entities (in the given order).
  PanelDataset select_entities(const std::vector<std::string>& names) const;
  // Copy with extra series attached; shapes must match.
  PanelDataset with_series(std::map<std::string, Series> extra) const;

 private:
  std::vector<std::string> entities_;
  int first_period_;
  Index n_periods_;
  std::map<std::string, Series, std::less<>> series_;
  std::map<std::string, std::string, std::less<>> units_;
  std::map<std::string, std::vector<std::optional<double>>> checksums_;
};

struct CsvOptions {
  std::set<std::string> missing_tokens{"", "-", "NA", "na"};
  // Wide files: a row whose name starts with this label (case-insensitive)
  // is treated as the column-total row.
  std::string total_label = "TOTAL";
};

PanelDataset ingest_long_csv(const std::filesystem::path& path, const CsvOptions& options = {});
PanelDataset ingest_wide_csv(const std::filesystem::path& path, const std::string& variable_name,
                             const CsvOptions& options = {});
PanelDataset parse_long_csv(std::string_view text, const CsvOptions& options = {});
PanelDataset parse_wide_csv(std::string_view text, const std::string& variable_name,
                            const CsvOptions& options = {});

// Long-format export; missing cells are written as "NA". Values use the
// shortest representation that round-trips.
std::string to_long_csv(const PanelDataset& data);

struct DescriptiveStats {
  double mean = 0;
  double median = 0;
  double max = 0;
  double min = 0;
  double standard_deviation = 0;  // n - 1 denominator
  double skewness = 0;            // m3 / m2^(3/2), population moments
  double kurtosis = 0;            // m4 / m2^2, not excess
  std::size_t observations = 0;
};

DescriptiveStats describe(const PanelDataset& data, std::string_view variable);
DescriptiveStats describe_values(std::vector<double> values);
std::string to_json(const DescriptiveStats& stats);

// A regressor or instrument cell: variable dated t - lag.
struct LaggedTerm {
  std::string variable;
  int lag = 0;

  std::string label() const;
  friend bool operator==(const LaggedTerm&, const LaggedTerm&) = default;
};

struct AlignedRow {
  Index entity = 0;
  Index period = 0;  // index into PanelDataset periods
};

// Estimation sample: one row per (entity, period) where the regressand and
// every requested lagged cell is present. Rows are entity-contiguous and in
// period order within each entity.
struct AlignedSample {
  std::vector<AlignedRow> rows;
  Eigen::VectorXd y;
  Eigen::MatrixXd x;      // regressors, in request order
  Eigen::MatrixXd extra;  // additional cells that had to be present
  std::string dependent;
  std::vector<LaggedTerm> regressors;
  std::vector<LaggedTerm> extra_terms;
  std::vector<std::string> entity_names;  // of the source dataset
  Index n_entities = 0;
  Index n_periods = 0;
  int first_period = 0;

  Index size() const { return static_cast<Index>(rows.size()); }
  Index cross_sections() const;
};

AlignedSample align(const PanelDataset& data, const std::string& dependent,
                    const std::vector<LaggedTerm>& regressors,
                    const std::vector<LaggedTerm>& extra = {});

}  // namespace dpanel
