#include "dpanel/panel_data.hpp"

#include "csv.hpp"
#include "dpanel/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace dpanel {

Series Series::missing(Index entities, Index periods) {
  Series s;
  s.values = Eigen::MatrixXd::Constant(entities, periods, std::numeric_limits<double>::quiet_NaN());
  s.present = PresenceMatrix::Constant(entities, periods, false);
  return s;
}

PanelDataset::PanelDataset(std::vector<std::string> entities, int first_period, Index n_periods,
                           std::map<std::string, Series> series,
                           std::map<std::string, std::string> units)
    : entities_(std::move(entities)), first_period_(first_period), n_periods_(n_periods) {
  if (n_periods_ <= 0) throw InputError("panel must have at least one period");
  const Index n = n_entities();
  for (auto& [name, s] : series) {
    if (s.values.rows() != n || s.values.cols() != n_periods_ || s.present.rows() != n ||
        s.present.cols() != n_periods_) {
      throw InputError("series '" + name + "' does not match the panel shape");
    }
    series_.emplace(name, std::move(s));
  }
  for (auto& [name, u] : units) units_.emplace(name, std::move(u));
  for (Index i = 0; i < n; ++i) {
    bool any = false;
    for (const auto& [name, s] : series_) any = any || s.present.row(i).any();
    if (!any && !series_.empty()) {
      throw InputError("entity '" + entities_[static_cast<std::size_t>(i)] +
                       "' has no present cells");
    }
  }
}

std::vector<int> PanelDataset::periods() const {
  std::vector<int> out(static_cast<std::size_t>(n_periods_));
  std::iota(out.begin(), out.end(), first_period_);
  return out;
}

bool PanelDataset::has(std::string_view variable) const {
  return series_.find(variable) != series_.end();
}

const Series& PanelDataset::series(std::string_view variable) const {
  auto it = series_.find(variable);
  if (it == series_.end()) throw InputError("unknown variable '" + std::string(variable) + "'");
  return it->second;
}

std::vector<std::string> PanelDataset::variables() const {
  std::vector<std::string> out;
  for (const auto& [name, s] : series_) out.push_back(name);
  return out;
}

std::optional<std::string> PanelDataset::unit(std::string_view variable) const {
  auto it = units_.find(variable);
  if (it == units_.end()) return std::nullopt;
  return it->second;
}

void PanelDataset::set_checksum(const std::string& variable,
                                std::vector<std::optional<double>> totals) {
  checksums_[variable] = std::move(totals);
}

PanelDataset PanelDataset::select_entities(const std::vector<std::string>& names) const {
  std::vector<Index> idx;
  for (const auto& name : names) {
    auto it = std::find(entities_.begin(), entities_.end(), name);
    if (it == entities_.end()) throw InputError("unknown entity '" + name + "'");
    idx.push_back(static_cast<Index>(it - entities_.begin()));
  }
  std::map<std::string, Series> out;
  for (const auto& [name, s] : series_) {
    Series sub = Series::missing(static_cast<Index>(idx.size()), n_periods_);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      sub.values.row(static_cast<Index>(k)) = s.values.row(idx[k]);
      sub.present.row(static_cast<Index>(k)) = s.present.row(idx[k]);
    }
    out.emplace(name, std::move(sub));
  }
  std::map<std::string, std::string> units(units_.begin(), units_.end());
  return PanelDataset(names, first_period_, n_periods_, std::move(out), std::move(units));
}

PanelDataset PanelDataset::with_series(std::map<std::string, Series> extra) const {
  std::map<std::string, Series> all(series_.begin(), series_.end());
  for (auto& [name, s] : extra) all[name] = std::move(s);
  std::map<std::string, std::string> units(units_.begin(), units_.end());
  PanelDataset out(entities_, first_period_, n_periods_, std::move(all), std::move(units));
  out.checksums_ = checksums_;
  return out;
}

namespace {

std::optional<double> parse_cell(const std::string& raw, const CsvOptions& options,
                                 bool& is_missing) {
  std::string t = csv::trim(raw);
  is_missing = options.missing_tokens.count(t) > 0;
  if (is_missing) return std::nullopt;
  if (auto v = csv::parse_double(t)) return v;
  // thousands separators inside a quoted field, e.g. "1,136.74"
  std::string stripped;
  for (char c : t)
    if (c != ',') stripped.push_back(c);
  if (stripped != t) return csv::parse_double(stripped);
  return std::nullopt;
}

}  // namespace

PanelDataset parse_long_csv(std::string_view text, const CsvOptions& options) {
  auto lines = csv::split_lines(text);
  if (lines.empty()) throw InputError("empty CSV input");
  auto header = csv::split_line(lines[0]);
  for (auto& h : header) h = csv::trim(h);
  if (header.size() < 3 || csv::to_lower(header[0]) != "entity" ||
      csv::to_lower(header[1]) != "period") {
    throw InputError("long CSV header must be entity,period,<var1>,...");
  }
  const std::size_t n_vars = header.size() - 2;

  struct Cell {
    std::size_t entity;
    long long period;
    std::vector<std::optional<double>> values;
  };
  std::vector<std::string> entities;
  std::unordered_map<std::string, std::size_t> entity_index;
  std::vector<Cell> cells;
  std::map<std::pair<std::size_t, long long>, std::size_t> seen;  // -> line number
  long long pmin = std::numeric_limits<long long>::max();
  long long pmax = std::numeric_limits<long long>::min();

  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (csv::trim(lines[ln]).empty()) continue;
    auto fields = csv::split_line(lines[ln]);
    const std::size_t row_no = ln + 1;
    if (fields.size() != header.size()) {
      throw InputError("row " + std::to_string(row_no) + ": expected " +
                       std::to_string(header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    std::string name = csv::trim(fields[0]);
    auto period = csv::parse_int(fields[1]);
    if (!period) {
      throw InputError("row " + std::to_string(row_no) + ", column period: cannot parse '" +
                       fields[1] + "' as an integer");
    }
    auto [it, inserted] = entity_index.emplace(name, entities.size());
    if (inserted) entities.push_back(name);
    auto key = std::make_pair(it->second, *period);
    if (auto dup = seen.find(key); dup != seen.end()) {
      throw InputError("row " + std::to_string(row_no) + ": duplicate (entity, period) = (" +
                       name + ", " + std::to_string(*period) + "), first seen on row " +
                       std::to_string(dup->second));
    }
    seen.emplace(key, row_no);
    Cell cell{it->second, *period, {}};
    for (std::size_t v = 0; v < n_vars; ++v) {
      bool missing = false;
      auto value = parse_cell(fields[v + 2], options, missing);
      if (!missing && !value) {
        throw InputError("row " + std::to_string(row_no) + ", column " + header[v + 2] +
                         ": cannot parse '" + fields[v + 2] + "'");
      }
      cell.values.push_back(value);
    }
    pmin = std::min(pmin, *period);
    pmax = std::max(pmax, *period);
    cells.push_back(std::move(cell));
  }
  if (cells.empty()) throw InputError("CSV has no data rows");

  const Index n_periods = static_cast<Index>(pmax - pmin + 1);
  const Index n_entities = static_cast<Index>(entities.size());
  std::vector<Series> series(n_vars, Series::missing(n_entities, n_periods));
  for (const auto& cell : cells) {
    const Index i = static_cast<Index>(cell.entity);
    const Index t = static_cast<Index>(cell.period - pmin);
    for (std::size_t v = 0; v < n_vars; ++v) {
      if (cell.values[v]) {
        series[v].values(i, t) = *cell.values[v];
        series[v].present(i, t) = true;
      }
    }
  }

  // entities whose every cell is missing are dropped
  std::vector<Index> keep;
  for (Index i = 0; i < n_entities; ++i) {
    bool any = false;
    for (const auto& s : series) any = any || s.present.row(i).any();
    if (any) keep.push_back(i);
  }
  std::vector<std::string> kept_names;
  for (Index i : keep) kept_names.push_back(entities[static_cast<std::size_t>(i)]);
  std::map<std::string, Series> named;
  for (std::size_t v = 0; v < n_vars; ++v) {
    Series s = Series::missing(static_cast<Index>(keep.size()), n_periods);
    for (std::size_t k = 0; k < keep.size(); ++k) {
      s.values.row(static_cast<Index>(k)) = series[v].values.row(keep[k]);
      s.present.row(static_cast<Index>(k)) = series[v].present.row(keep[k]);
    }
    if (named.count(header[v + 2])) throw InputError("duplicate column '" + header[v + 2] + "'");
    named.emplace(header[v + 2], std::move(s));
  }
  return PanelDataset(std::move(kept_names), static_cast<int>(pmin), n_periods, std::move(named));
}

PanelDataset parse_wide_csv(std::string_view text, const std::string& variable_name,
                            const CsvOptions& options) {
  auto lines = csv::split_lines(text);
  if (lines.empty()) throw InputError("empty CSV input");
  auto header = csv::split_line(lines[0]);
  if (header.size() < 2) throw InputError("wide CSV header must be name,<year1>,<year2>,...");
  std::vector<long long> years;
  for (std::size_t c = 1; c < header.size(); ++c) {
    auto y = csv::parse_int(header[c]);
    if (!y) throw InputError("column " + std::to_string(c + 1) + ": non-numeric year header '" +
                             csv::trim(header[c]) + "'");
    if (!years.empty() && *y <= years.back()) {
      throw InputError("year headers must be strictly increasing");
    }
    years.push_back(*y);
  }
  const long long first = years.front();
  const Index n_periods = static_cast<Index>(years.back() - first + 1);
  const std::string total_label = csv::to_upper(options.total_label);

  std::vector<std::string> names;
  std::vector<std::vector<std::optional<double>>> rows;
  std::optional<std::vector<std::optional<double>>> totals;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (csv::trim(lines[ln]).empty()) continue;
    auto fields = csv::split_line(lines[ln]);
    const std::size_t row_no = ln + 1;
    if (fields.size() != header.size()) {
      throw InputError("row " + std::to_string(row_no) + ": ragged row with " +
                       std::to_string(fields.size()) + " fields, header has " +
                       std::to_string(header.size()));
    }
    std::string name = csv::trim(fields[0]);
    std::vector<std::optional<double>> values(static_cast<std::size_t>(n_periods));
    for (std::size_t c = 1; c < fields.size(); ++c) {
      bool missing = false;
      auto v = parse_cell(fields[c], options, missing);
      if (!missing && !v) {
        throw InputError("row " + std::to_string(row_no) + ", column " + csv::trim(header[c]) +
                         ": cannot parse '" + fields[c] + "'");
      }
      values[static_cast<std::size_t>(years[c - 1] - first)] = v;
    }
    if (!total_label.empty() && csv::to_upper(name).rfind(total_label, 0) == 0) {
      totals = std::move(values);
      continue;
    }
    names.push_back(std::move(name));
    rows.push_back(std::move(values));
  }

  std::vector<std::string> kept;
  std::vector<std::vector<std::optional<double>>> kept_rows;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    bool any = std::any_of(rows[r].begin(), rows[r].end(), [](const auto& v) { return v.has_value(); });
    if (!any) continue;
    kept.push_back(names[r]);
    kept_rows.push_back(rows[r]);
  }
  if (kept.empty()) throw InputError("wide CSV has no entity with data");
  Series s = Series::missing(static_cast<Index>(kept.size()), n_periods);
  for (std::size_t r = 0; r < kept_rows.size(); ++r) {
    for (Index t = 0; t < n_periods; ++t) {
      const auto& v = kept_rows[r][static_cast<std::size_t>(t)];
      if (v) {
        s.values(static_cast<Index>(r), t) = *v;
        s.present(static_cast<Index>(r), t) = true;
      }
    }
  }
  std::map<std::string, Series> series;
  series.emplace(variable_name, std::move(s));
  PanelDataset out(std::move(kept), static_cast<int>(first), n_periods, std::move(series));
  if (totals) out.set_checksum(variable_name, std::move(*totals));
  return out;
}

PanelDataset ingest_long_csv(const std::filesystem::path& path, const CsvOptions& options) {
  return parse_long_csv(csv::read_file(path.string()), options);
}

PanelDataset ingest_wide_csv(const std::filesystem::path& path, const std::string& variable_name,
                             const CsvOptions& options) {
  return parse_wide_csv(csv::read_file(path.string()), variable_name, options);
}

std::string to_long_csv(const PanelDataset& data) {
  std::ostringstream out;
  auto vars = data.variables();
  out << "entity,period";
  for (const auto& v : vars) out << ',' << csv::quote_if_needed(v);
  out << '\n';
  for (Index i = 0; i < data.n_entities(); ++i) {
    for (Index t = 0; t < data.n_periods(); ++t) {
      bool any = false;
      for (const auto& v : vars) any = any || data.series(v).present(i, t);
      if (!any) continue;
      out << csv::quote_if_needed(data.entities()[static_cast<std::size_t>(i)]) << ','
          << data.period_label(t);
      for (const auto& v : vars) {
        const Series& s = data.series(v);
        out << ',' << (s.present(i, t) ? csv::format_double(s.values(i, t)) : "NA");
      }
      out << '\n';
    }
  }
  return out.str();
}

DescriptiveStats describe_values(std::vector<double> values) {
  const std::size_t n = values.size();
  if (n < 2) throw InputError("insufficient data: need at least 2 observations");
  const double nd = static_cast<double>(n);
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / nd;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : values) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  const double ss = m2;
  m2 /= nd;
  m3 /= nd;
  m4 /= nd;
  if (!(m2 > 0)) throw InputError("zero variance: skewness and kurtosis are undefined");

  std::sort(values.begin(), values.end());
  DescriptiveStats s;
  s.observations = n;
  s.mean = mean;
  s.median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  s.min = values.front();
  s.max = values.back();
  s.standard_deviation = std::sqrt(ss / (nd - 1));
  s.skewness = m3 / std::pow(m2, 1.5);
  s.kurtosis = m4 / (m2 * m2);
  return s;
}

DescriptiveStats describe(const PanelDataset& data, std::string_view variable) {
  const Series& s = data.series(variable);
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(s.present_count()));
  for (Index i = 0; i < s.values.rows(); ++i)
    for (Index t = 0; t < s.values.cols(); ++t)
      if (s.present(i, t)) values.push_back(s.values(i, t));
  return describe_values(std::move(values));
}

std::string to_json(const DescriptiveStats& s) {
  std::ostringstream out;
  out << "{\"mean\": " << csv::format_double(s.mean)
      << ", \"median\": " << csv::format_double(s.median)
      << ", \"max\": " << csv::format_double(s.max)
      << ", \"min\": " << csv::format_double(s.min)
      << ", \"sd\": " << csv::format_double(s.standard_deviation)
      << ", \"skewness\": " << csv::format_double(s.skewness)
      << ", \"kurtosis\": " << csv::format_double(s.kurtosis) << ", \"n\": " << s.observations
      << "}";
  return out.str();
}

std::string LaggedTerm::label() const {
  if (lag == 0) return variable;
  return variable + "(-" + std::to_string(lag) + ")";
}

Index AlignedSample::cross_sections() const {
  Index count = 0;
  Index last = -1;
  for (const auto& r : rows) {
    if (r.entity != last) {
      ++count;
      last = r.entity;
    }
  }
  return count;
}

AlignedSample align(const PanelDataset& data, const std::string& dependent,
                    const std::vector<LaggedTerm>& regressors,
                    const std::vector<LaggedTerm>& extra) {
  const Series& ys = data.series(dependent);
  std::vector<const Series*> xs;
  std::vector<const Series*> es;
  for (const auto& term : regressors) {
    if (term.lag < 0) throw InputError("negative lag for '" + term.variable + "'");
    xs.push_back(&data.series(term.variable));
  }
  for (const auto& term : extra) {
    if (term.lag < 0) throw InputError("negative lag for '" + term.variable + "'");
    es.push_back(&data.series(term.variable));
  }

  AlignedSample out;
  out.dependent = dependent;
  out.regressors = regressors;
  out.extra_terms = extra;
  out.entity_names = data.entities();
  out.n_entities = data.n_entities();
  out.n_periods = data.n_periods();
  out.first_period = data.first_period();

  auto cell_ok = [](const Series& s, Index i, Index t, int lag) {
    return t - lag >= 0 && s.present(i, t - lag);
  };
  for (Index i = 0; i < data.n_entities(); ++i) {
    for (Index t = 0; t < data.n_periods(); ++t) {
      if (!ys.present(i, t)) continue;
      bool ok = true;
      for (std::size_t k = 0; ok && k < xs.size(); ++k) ok = cell_ok(*xs[k], i, t, regressors[k].lag);
      for (std::size_t k = 0; ok && k < es.size(); ++k) ok = cell_ok(*es[k], i, t, extra[k].lag);
      if (ok) out.rows.push_back({i, t});
    }
  }
  if (out.rows.empty()) throw EstimationError("no estimable observations");

  const Index n = out.size();
  out.y.resize(n);
  out.x.resize(n, static_cast<Index>(xs.size()));
  out.extra.resize(n, static_cast<Index>(es.size()));
  for (Index r = 0; r < n; ++r) {
    const auto [i, t] = out.rows[static_cast<std::size_t>(r)];
    out.y(r) = ys.values(i, t);
    for (std::size_t k = 0; k < xs.size(); ++k)
      out.x(r, static_cast<Index>(k)) = xs[k]->values(i, t - regressors[k].lag);
    for (std::size_t k = 0; k < es.size(); ++k)
      out.extra(r, static_cast<Index>(k)) = es[k]->values(i, t - extra[k].lag);
  }
  return out;
}

}  // namespace dpanel
