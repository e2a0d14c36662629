#pragma once

#include "dpanel/panel_data.hpp"
#include "dpanel/simulate.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifndef DPANEL_TEST_DATA
#define DPANEL_TEST_DATA "tests/data"
#endif

namespace testing {

using dpanel::Index;
using Grid = std::vector<std::vector<std::optional<double>>>;  // [entity][period]

inline dpanel::PanelDataset make_panel(const std::map<std::string, Grid>& vars, int first_period = 1) {
  const Grid& any = vars.begin()->second;
  const Index n = static_cast<Index>(any.size());
  const Index t_len = static_cast<Index>(any.front().size());
  std::vector<std::string> names;
  for (Index i = 0; i < n; ++i) names.push_back("e" + std::to_string(i + 1));
  std::map<std::string, dpanel::Series> series;
  for (const auto& [name, grid] : vars) {
    auto s = dpanel::Series::missing(n, t_len);
    for (Index i = 0; i < n; ++i)
      for (Index t = 0; t < t_len; ++t)
        if (grid[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)]) {
          s.values(i, t) = *grid[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
          s.present(i, t) = true;
        }
    series.emplace(name, std::move(s));
  }
  return dpanel::PanelDataset(names, first_period, t_len, std::move(series));
}

// 31 entities on an 11-period grid, each observed over one contiguous run;
// run lengths total 320 cells. Variables pp, bv, bt follow a dynamic model.
inline dpanel::PanelDataset contiguous_runs_panel(std::uint64_t seed = 5) {
  const int n = 31, t_len = 11;
  dpanel::simulate::Normal rng(seed);
  Grid pp(n, std::vector<std::optional<double>>(t_len)), bv = pp, bt = pp;
  int total = 0;
  for (int i = 0; i < n; ++i) {
    const int len = i < 10 ? 11 : 10;  // 10*11 + 21*10 = 320
    const int start = len == 11 ? 0 : (i % 2);
    const double effect = 100.0 + 20.0 * rng();
    double y = effect * 3;
    for (int t = start; t < start + len; ++t) {
      const double v = 50.0 + 10.0 * rng() + 0.2 * effect;
      const double b = 80.0 + 5.0 * rng();
      y = 0.6 * y + 0.5 * v + 0.3 * b + effect * 0.2 + 5.0 * rng();
      pp[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] = y;
      bv[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] = v;
      bt[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] = b;
      ++total;
    }
  }
  if (total != 320) throw std::logic_error("run lengths do not total 320");
  return make_panel({{"pp", pp}, {"bv", bv}, {"bt", bt}}, 2005);
}

inline std::string data_path(const std::string& name) {
  return (std::filesystem::path(DPANEL_TEST_DATA) / name).string();
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dpanel_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
