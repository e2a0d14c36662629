#include "dpanel/report.hpp"

#include "csv.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace dpanel::report {

namespace text = ::dpanel::csv;

namespace {

std::string fixed(double v, int digits = 4) {
  if (!std::isfinite(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

bool shown(const std::string& name) { return name.rfind("D[", 0) != 0; }

std::vector<std::string> coefficient_rows(const std::vector<Column>& columns) {
  std::vector<std::string> names;
  for (const auto& c : columns) {
    if (!c.result) continue;
    for (const auto& n : c.result->names)
      if (shown(n) && std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
  }
  // intercept last
  auto it = std::find(names.begin(), names.end(), "intercept");
  if (it != names.end()) {
    names.erase(it);
    names.push_back("intercept");
  }
  return names;
}

bool is_random(const EstimationResult& r) { return r.components.has_value(); }

struct Grid {
  std::vector<std::string> labels;
  std::vector<std::vector<std::string>> cells;  // [row][column]
};

Grid build(const std::vector<Column>& columns) {
  Grid g;
  auto add = [&](std::string label, std::vector<std::string> row) {
    g.labels.push_back(std::move(label));
    g.cells.push_back(std::move(row));
  };
  std::vector<std::string> head;
  for (const auto& c : columns) head.push_back(c.title);
  add("", head);

  for (const auto& name : coefficient_rows(columns)) {
    std::vector<std::string> coef, se, t;
    for (const auto& c : columns) {
      const Index j = c.result ? c.result->index_of(name) : -1;
      if (j < 0) {
        coef.emplace_back("");
        se.emplace_back("");
        t.emplace_back("");
        continue;
      }
      coef.push_back(fixed(c.result->coefficients(j)));
      se.push_back("(" + fixed(c.result->standard_errors(j)) + ")");
      t.push_back("[" + fixed(c.result->t_statistics(j)) + "]");
    }
    add(name, coef);
    add("", se);
    add("", t);
  }

  std::vector<std::string> r2, j, nobs, ncs, err;
  bool any_error = false;
  for (const auto& c : columns) {
    if (!c.result) {
      r2.emplace_back("");
      j.emplace_back("");
      nobs.emplace_back("");
      ncs.emplace_back("");
      err.push_back(c.error);
      any_error = true;
      continue;
    }
    const auto& r = *c.result;
    if (is_random(r)) {
      r2.push_back(fixed(r.r_squared_weighted) + "' " + fixed(r.r_squared_unweighted) + "''");
    } else {
      r2.push_back(fixed(r.r_squared_unweighted));
    }
    j.push_back(c.diagnostics.j ? fixed(c.diagnostics.j->statistic) + " (" + fixed(c.diagnostics.j->p_value) + ")" : "");
    nobs.push_back(std::to_string(r.sample_size));
    ncs.push_back(std::to_string(r.cross_sections));
    err.emplace_back("");
  }
  add("R-squared", r2);
  add("J-statistic (p)", j);
  add("Observations", nobs);
  add("Cross-sections", ncs);
  if (any_error) add("Error", err);
  return g;
}

}  // namespace

std::string table(const std::vector<Column>& columns) {
  const Grid g = build(columns);
  std::size_t label_w = 0;
  for (const auto& l : g.labels) label_w = std::max(label_w, l.size());
  std::vector<std::size_t> w(columns.size(), 0);
  for (const auto& row : g.cells)
    for (std::size_t c = 0; c < row.size(); ++c) w[c] = std::max(w[c], row[c].size());

  std::ostringstream out;
  for (std::size_t r = 0; r < g.cells.size(); ++r) {
    std::string line = g.labels[r];
    line.resize(label_w, ' ');
    for (std::size_t c = 0; c < g.cells[r].size(); ++c) {
      std::string cell = g.cells[r][c];
      line += "  ";
      line += std::string(w[c] - cell.size(), ' ') + cell;
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
    if (r == 0) out << std::string(label_w + [&] {
                         std::size_t s = 0;
                         for (auto x : w) s += x + 2;
                         return s;
                       }(), '-') << '\n';
  }
  for (const auto& c : columns) {
    if (!c.result) continue;
    for (const auto& note : c.result->notes) out << c.title << ": " << note << '\n';
    if (c.diagnostics.hausman) {
      const auto& h = *c.diagnostics.hausman;
      if (h.valid) {
        out << c.title << ": Hausman " << fixed(h.statistic) << " (" << fixed(h.p_value) << "), df " << h.df << '\n';
      } else {
        out << c.title << ": Hausman test invalid: " << h.reason << '\n';
      }
    }
    for (const auto& t : c.diagnostics.ar_tests)
      out << c.title << ": AR(" << t.order << ") z = " << fixed(t.statistic) << " (" << fixed(t.p_value) << ")\n";
  }
  return out.str();
}

namespace {

nlohmann::ordered_json column_json(const Column& c) {
  using json = nlohmann::ordered_json;
  json j;
  j["model"] = c.title;
  if (!c.result) {
    j["error"] = c.error;
    return j;
  }
  const auto& r = *c.result;
  auto num = [](double v) -> json {
    if (!std::isfinite(v)) return nullptr;
    return v;
  };
  json coef = json::object(), se = json::object(), t = json::object();
  for (std::size_t k = 0; k < r.names.size(); ++k) {
    const auto i = static_cast<Index>(k);
    coef[r.names[k]] = num(r.coefficients(i));
    se[r.names[k]] = num(r.standard_errors(i));
    t[r.names[k]] = num(r.t_statistics(i));
  }
  j["coefficients"] = coef;
  j["se"] = se;
  j["t"] = t;
  j["r2"] = num(r.r_squared_unweighted);
  if (r.components) j["r2_weighted"] = num(r.r_squared_weighted);
  if (c.diagnostics.j) {
    j["j"] = num(c.diagnostics.j->statistic);
    j["j_p"] = num(c.diagnostics.j->p_value);
    j["j_df"] = c.diagnostics.j->df;
  } else {
    j["j"] = nullptr;
    j["j_p"] = nullptr;
  }
  j["estimator"] = r.estimator;
  j["transform"] = to_string(r.transform);
  j["observations"] = r.sample_size;
  j["cross_sections"] = r.cross_sections;
  j["periods"] = r.periods;
  if (r.is_gmm()) {
    j["instruments"] = r.instruments.cols();
    j["steps"] = r.steps_taken;
  }
  j["diagnostics"] = json::parse(to_json(c.diagnostics));
  j["notes"] = r.notes;
  return j;
}

}  // namespace

std::string json(const Column& column) { return column_json(column).dump(2) + "\n"; }

std::string json(const std::vector<Column>& columns) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : columns) arr.push_back(column_json(c));
  return arr.dump(2) + "\n";
}

std::string csv(const std::vector<Column>& columns) {
  std::ostringstream out;
  out << "row";
  for (const auto& c : columns) out << ',' << text::quote_if_needed(c.title);
  out << '\n';
  auto line = [&](const std::string& label, auto value) {
    out << text::quote_if_needed(label);
    for (const auto& c : columns) {
      out << ',';
      if (c.result) {
        const auto v = value(c);
        if (v && std::isfinite(*v)) out << text::format_double(*v);
      }
    }
    out << '\n';
  };
  for (const auto& name : coefficient_rows(columns)) {
    for (const char* field : {"coef", "se", "t"}) {
      const std::string f = field;
      line(name + ":" + f, [&](const Column& c) -> std::optional<double> {
        const Index j = c.result->index_of(name);
        if (j < 0) return std::nullopt;
        if (f == "coef") return c.result->coefficients(j);
        if (f == "se") return c.result->standard_errors(j);
        return c.result->t_statistics(j);
      });
    }
  }
  line("r2", [](const Column& c) -> std::optional<double> { return c.result->r_squared_unweighted; });
  line("r2_weighted", [](const Column& c) -> std::optional<double> { return c.result->r_squared_weighted; });
  line("j", [](const Column& c) -> std::optional<double> {
    if (!c.diagnostics.j) return std::nullopt;
    return c.diagnostics.j->statistic;
  });
  line("j_p", [](const Column& c) -> std::optional<double> {
    if (!c.diagnostics.j) return std::nullopt;
    return c.diagnostics.j->p_value;
  });
  line("observations", [](const Column& c) -> std::optional<double> {
    return static_cast<double>(c.result->sample_size);
  });
  return out.str();
}

}  // namespace dpanel::report
