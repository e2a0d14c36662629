#include "dpanel/instruments.hpp"

#include "csv.hpp"
#include "dpanel/error.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace dpanel {

std::vector<LaggedTerm> InstrumentSpec::static_terms() const {
  std::vector<LaggedTerm> out;
  for (const auto& s : statics)
    for (int l = s.lag_from; l <= s.lag_to; ++l) out.push_back({s.variable, l});
  return out;
}

namespace {

std::vector<std::string> split_top_level(std::string_view text) {
  std::vector<std::string> items;
  std::string current;
  int depth = 0;
  for (char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      items.push_back(csv::trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!csv::trim(current).empty()) items.push_back(csv::trim(current));
  return items;
}

int parse_lag(const std::string& raw, const std::string& item) {
  auto v = csv::parse_int(raw);
  if (!v) throw InputError("instrument '" + item + "': bad lag '" + raw + "'");
  return static_cast<int>(*v < 0 ? -*v : *v);
}

}  // namespace

InstrumentSpec InstrumentSpec::parse(std::string_view text) {
  InstrumentSpec spec;
  for (std::string item : split_top_level(text)) {
    if (item.empty()) continue;
    std::string lower = csv::to_lower(item);
    if (lower == "intercept" || lower == "const" || lower == "c") {
      spec.intercept = true;
      continue;
    }
    bool collapse = false;
    if (auto colon = lower.rfind(':'); colon != std::string::npos) {
      if (csv::trim(lower.substr(colon + 1)) != "collapse")
        throw InputError("instrument '" + item + "': unknown modifier");
      collapse = true;
      item = csv::trim(item.substr(0, colon));
      lower = csv::to_lower(item);
    }
    if (!lower.empty() && lower.front() == '@') {
      item.erase(0, 1);
      lower.erase(0, 1);
    }
    const auto open = item.find('(');
    if (open == std::string::npos || item.back() != ')')
      throw InputError("instrument '" + item + "': expected dyn(...) or static(...)");
    const std::string kind = csv::trim(lower.substr(0, open));
    const std::string inner = item.substr(open + 1, item.size() - open - 2);
    auto args = csv::split_line(inner);
    for (auto& a : args) a = csv::trim(a);
    if (kind == "dyn") {
      if (args.size() < 1 || args.size() > 3 || args[0].empty())
        throw InputError("instrument '" + item + "': dyn(VAR,START[,BOUND])");
      DynamicInstrument d;
      d.variable = args[0];
      d.start = args.size() >= 2 ? parse_lag(args[1], item) : 2;
      if (args.size() == 3) d.bound = parse_lag(args[2], item);
      d.collapsed = collapse;
      if (d.start < 1) throw InputError("instrument '" + item + "': starting lag must be >= 1");
      if (d.bound && *d.bound < d.start)
        throw InputError("instrument '" + item + "': deepest lag below starting lag");
      spec.dynamics.push_back(d);
    } else if (kind == "static") {
      if (collapse) throw InputError("instrument '" + item + "': collapse applies to dyn only");
      if (args.size() != 2 || args[0].empty())
        throw InputError("instrument '" + item + "': static(VAR,LAG_FROM..LAG_TO)");
      StaticInstrument s;
      s.variable = args[0];
      if (auto dots = args[1].find(".."); dots != std::string::npos) {
        s.lag_from = parse_lag(csv::trim(args[1].substr(0, dots)), item);
        s.lag_to = parse_lag(csv::trim(args[1].substr(dots + 2)), item);
      } else {
        s.lag_from = s.lag_to = parse_lag(args[1], item);
      }
      if (s.lag_to < s.lag_from) throw InputError("instrument '" + item + "': empty lag range");
      spec.statics.push_back(s);
    } else {
      throw InputError("instrument '" + item + "': unknown kind '" + kind + "'");
    }
  }
  return spec;
}

std::string InstrumentSpec::to_string() const {
  std::ostringstream out;
  bool first = true;
  auto sep = [&] {
    if (!first) out << ',';
    first = false;
  };
  for (const auto& d : dynamics) {
    sep();
    out << "dyn(" << d.variable << ',' << d.start;
    if (d.bound) out << ',' << *d.bound;
    out << ')';
    if (d.collapsed) out << ":collapse";
  }
  for (const auto& s : statics) {
    sep();
    out << "static(" << s.variable << ',' << s.lag_from << ".." << s.lag_to << ')';
  }
  if (intercept) {
    sep();
    out << "intercept";
  }
  return out.str();
}

InstrumentMatrix build_dynamic_block(const PanelDataset& data, const std::vector<AlignedRow>& rows,
                                     const DynamicInstrument& spec, Index period_offset) {
  if (spec.start < 1) throw InputError("dynamic instrument starting lag must be >= 1");
  const Series& x = data.series(spec.variable);
  const Index n = static_cast<Index>(rows.size());
  auto deepest = [&](Index t) {
    Index d = t;  // t - lag >= 0
    if (spec.bound) d = std::min<Index>(d, *spec.bound);
    return d;
  };

  InstrumentMatrix block;
  // (period, lag) -> column, or lag -> column when collapsed
  std::map<std::pair<Index, Index>, Index> column;
  for (const auto& r : rows) {
    const Index t = r.period + period_offset;
    for (Index l = spec.start; l <= deepest(t); ++l) {
      auto key = spec.collapsed ? std::make_pair(Index{-1}, l) : std::make_pair(t, l);
      if (!column.count(key)) column.emplace(key, 0);
    }
  }
  Index next = 0;
  for (auto& [key, c] : column) {
    c = next++;
    std::string label = "dyn(" + spec.variable + ",lag " + std::to_string(key.second);
    if (!spec.collapsed) label += ",t=" + std::to_string(data.period_label(key.first));
    block.labels.push_back(label + ")");
  }
  block.values = Eigen::MatrixXd::Zero(n, next);
  for (Index k = 0; k < n; ++k) {
    const auto& r = rows[static_cast<std::size_t>(k)];
    const Index t = r.period + period_offset;
    for (Index l = spec.start; l <= deepest(t); ++l) {
      const Index src = t - l;
      if (src >= data.n_periods() || !x.present(r.entity, src)) continue;
      auto key = spec.collapsed ? std::make_pair(Index{-1}, l) : std::make_pair(t, l);
      block.values(k, column.at(key)) = x.values(r.entity, src);
    }
  }

  std::vector<Index> keep;
  for (Index c = 0; c < block.values.cols(); ++c) {
    if (block.values.col(c).cwiseAbs().maxCoeff() > 0.0) {
      keep.push_back(c);
    } else {
      block.warnings.push_back("dropped all-zero instrument column " +
                               block.labels[static_cast<std::size_t>(c)]);
    }
  }
  if (keep.empty()) {
    throw EstimationError("empty instrument block for dyn(" + spec.variable + "," +
                          std::to_string(spec.start) + "): no usable lags");
  }
  if (static_cast<Index>(keep.size()) != block.values.cols()) {
    Eigen::MatrixXd pruned(n, static_cast<Index>(keep.size()));
    std::vector<std::string> labels;
    for (std::size_t j = 0; j < keep.size(); ++j) {
      pruned.col(static_cast<Index>(j)) = block.values.col(keep[j]);
      labels.push_back(block.labels[static_cast<std::size_t>(keep[j])]);
    }
    block.values = std::move(pruned);
    block.labels = std::move(labels);
  }
  return block;
}

InstrumentMatrix build_static_block(const StaticColumns& columns,
                                    const std::optional<Eigen::VectorXd>& intercept) {
  InstrumentMatrix block;
  const Index n = intercept ? intercept->size() : columns.values.rows();
  const Index extra = intercept ? 1 : 0;
  block.values.resize(n, columns.values.cols() + extra);
  for (Index c = 0; c < columns.values.cols(); ++c) {
    if (columns.values.rows() != n) throw InputError("static instrument rows do not match");
    if (!(columns.values.col(c).cwiseAbs().maxCoeff() > 0.0)) {
      throw EstimationError("static instrument " + columns.labels[static_cast<std::size_t>(c)] +
                            " has no usable (non-zero) values on the estimation rows");
    }
    block.values.col(c) = columns.values.col(c);
    block.labels.push_back(columns.labels[static_cast<std::size_t>(c)]);
  }
  if (intercept) {
    block.values.col(block.values.cols() - 1) = *intercept;
    block.labels.push_back("intercept");
  }
  return block;
}

InstrumentMatrix assemble(const InstrumentSpec& spec, const PanelDataset& data,
                          const std::vector<AlignedRow>& rows, const StaticColumns& statics,
                          const std::optional<Eigen::VectorXd>& intercept, Index n_regressors,
                          Index period_offset) {
  if (spec.empty()) throw InputError("instrument specification is empty");
  for (const auto& s : spec.statics) {
    if (!data.has(s.variable)) throw InputError("unknown instrument variable '" + s.variable + "'");
    if (s.lag_to >= data.n_periods()) {
      throw InputError("static(" + s.variable + ") lag " + std::to_string(s.lag_to) +
                       " exceeds the panel depth of " + std::to_string(data.n_periods()) +
                       " periods");
    }
  }
  std::vector<InstrumentMatrix> blocks;
  if (!spec.statics.empty() || spec.intercept) {
    if (spec.intercept && !intercept) {
      throw InputError("an intercept instrument needs a level specification");
    }
    blocks.push_back(build_static_block(statics, spec.intercept ? intercept : std::nullopt));
  }
  for (const auto& d : spec.dynamics) blocks.push_back(build_dynamic_block(data, rows, d, period_offset));

  InstrumentMatrix out;
  Index total = 0;
  for (const auto& b : blocks) total += b.count();
  out.values.resize(static_cast<Index>(rows.size()), total);
  Index at = 0;
  for (auto& b : blocks) {
    out.values.middleCols(at, b.count()) = b.values;
    at += b.count();
    out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
    out.warnings.insert(out.warnings.end(), b.warnings.begin(), b.warnings.end());
  }
  if (out.count() < n_regressors) {
    throw EstimationError("under-identified: " + std::to_string(out.count()) +
                          " instruments for " + std::to_string(n_regressors) + " regressors");
  }
  return out;
}

}  // namespace dpanel
