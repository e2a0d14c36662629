#include "dpanel/cli.hpp"
#include "dpanel/diagnostics.hpp"
#include "dpanel/error.hpp"
#include "dpanel/simulate.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cstdlib>
#include <json.hpp>
#include <sstream>

using namespace dpanel;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome call(std::vector<std::string> args) {
  std::ostringstream out, err;
  Outcome o;
  o.code = cli::run(args, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

fs::path write_csv(const fs::path& dir, const std::string& name, const PanelDataset& data) {
  const fs::path p = dir / name;
  std::ofstream(p) << to_long_csv(data);
  return p;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out(1);
  for (char c : line) {
    if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("ratings conversions") {
  const auto dir = testing::scratch_dir("ratings");
  auto r = call({"ratings", "--grade", "AAA", "--out-dir", dir.string()});
  CHECK(r.code == 0);
  CHECK(r.out == "97.50\n");
  CHECK(testing::slurp(dir / "ratings.txt") == "97.50\n");
  CHECK(fs::exists(dir / "ratings_manifest.json"));

  r = call({"ratings", "--value", "77.5", "--out-dir", dir.string()});
  CHECK(r.out == "A-\n");
  r = call({"ratings", "--grade", "Q", "--out-dir", dir.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("valid grades") != std::string::npos);
  r = call({"ratings", "--grade", "A", "--value", "80", "--out-dir", dir.string()});
  CHECK(r.code == 2);
}

TEST_CASE("usage errors") {
  CHECK(call({}).code == 2);
  CHECK(call({"estimate", "--bogus"}).code == 2);
  CHECK(call({"frobnicate"}).code == 2);
  CHECK(call({"--help"}).code == 0);
  const auto v = call({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out.find(cli::kVersion) != std::string::npos);
}

TEST_CASE("missing input file") {
  const auto dir = testing::scratch_dir("missing");
  const std::string path = (dir / "nope.csv").string();
  const auto r = call({"estimate", "--data", path, "--dep", "pp", "--out-dir", dir.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find(path) != std::string::npos);
}

TEST_CASE("parse terms") {
  const auto t = cli::parse_terms("pp(-1), bv, bt(-2)");
  REQUIRE(t.size() == 3);
  CHECK(t[0] == LaggedTerm{"pp", 1});
  CHECK(t[1] == LaggedTerm{"bv", 0});
  CHECK(t[2] == LaggedTerm{"bt", 2});
  CHECK(cli::parse_terms("").empty());
  CHECK_THROWS_AS(cli::parse_terms("pp(-x)"), InputError);
}

TEST_CASE("estimate od writes json, fitted values and a manifest") {
  const auto dir = testing::scratch_dir("estimate");
  simulate::DgpSpec dgp;
  dgp.n_entities = 150;
  dgp.n_periods = 7;
  dgp.exogenous_betas = {0.4};
  dgp.seed = 3;
  const auto csv = write_csv(dir, "panel.csv", simulate::generate(dgp));
  const auto r = call({"estimate", "--data", csv.string(), "--spec", "od", "--dep", "y", "--regressors", "x1",
                       "--out", "json", "--out-dir", dir.string()});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  for (const char* key : {"coefficients", "se", "t", "r2", "j", "j_p"}) {
    CAPTURE(key);
    CHECK(j.contains(key));
  }
  CHECK(j.at("coefficients").contains("y(-1)"));
  CHECK(testing::slurp(dir / "estimate.json") == r.out);
  CHECK(fs::exists(dir / "estimate_fitted.csv"));

  const auto m = nlohmann::json::parse(testing::slurp(dir / "estimate_manifest.json"));
  CHECK(m.at("subcommand") == "estimate");
  CHECK(m.at("version") == cli::kVersion);
  CHECK(m.at("inputs").at(0).at("sha256") == cli::sha256_file(csv.string()));
  CHECK(m.at("config").at("spec") == "od");
  CHECK(m.dump().find("time") == std::string::npos);
}

TEST_CASE("sha256 of a known string") {
  const auto dir = testing::scratch_dir("sha");
  std::ofstream(dir / "abc.txt") << "abc";
  CHECK(cli::sha256_file((dir / "abc.txt").string()) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("random effects with zero cross-section variance is flagged") {
  const auto dir = testing::scratch_dir("re_zero");
  simulate::DgpSpec dgp;
  dgp.n_entities = 60;
  dgp.n_periods = 8;
  dgp.rho = 0.0;
  dgp.exogenous_betas = {0.5};
  dgp.sigma_effect = 0.0;
  dgp.seed = 606;
  ModelSpec spec;
  spec.dependent = "y";
  spec.ar_lags = 0;
  spec.exogenous = {{"x1", 0}};
  apply_kind(spec, SpecKind::re);
  std::optional<PanelDataset> floored;
  for (std::uint64_t r = 0; r < 40 && !floored; ++r) {
    auto data = simulate::generate(dgp, r);
    if (swamy_arora(spec, *align_for(data, spec)).floored) floored = std::move(data);
  }
  REQUIRE(floored.has_value());
  const auto csv = write_csv(dir, "panel.csv", *floored);
  const auto r = call({"estimate", "--data", csv.string(), "--spec", "re", "--dep", "y", "--ar", "0",
                       "--regressors", "x1", "--out-dir", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("rho_u = 0; coefficients identical to pooled") != std::string::npos);
}

TEST_CASE("replicate needs the regressors") {
  const auto dir = testing::scratch_dir("replicate_pp");
  std::ofstream(dir / "pp.csv") << "entity,period,pp\na,2005,1\na,2006,2\nb,2005,3\nb,2006,4\n";
  const auto r = call({"replicate", "--data", (dir / "pp.csv").string(), "--out-dir", dir.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("bv") != std::string::npos);
}

TEST_CASE("replicate grid on a contiguous-run panel") {
  const auto dir = testing::scratch_dir("replicate");
  const auto csv = write_csv(dir, "panel.csv", testing::contiguous_runs_panel());
  const auto r = call({"replicate", "--data", csv.string(), "--max-lag", "3", "--collapse", "--out", "csv",
                       "--out-dir", dir.string()});
  INFO(r.err);
  CHECK(r.code == 0);
  std::stringstream lines(r.out);
  std::string header;
  std::getline(lines, header);
  const auto titles = split(header);
  REQUIRE(titles.size() == 6);  // row label + five estimators
  std::size_t od = 0;
  for (std::size_t c = 1; c < titles.size(); ++c)
    if (titles[c] == "OD") od = c;
  REQUIRE(od > 0);
  bool found = false;
  for (std::string line; std::getline(lines, line);) {
    const auto cells = split(line);
    CHECK(cells.size() == 6);
    if (cells.at(0) == "observations") {
      found = true;
      CHECK(cells.at(od) == "258");
    }
  }
  CHECK(found);
  CHECK(fs::exists(dir / "replicate.csv"));
}

TEST_CASE("describe the premium fixture") {
  const auto dir = testing::scratch_dir("describe");
  const auto r = call({"describe", "--data", testing::data_path("premiums_2005_2015.csv"), "--wide-var", "pp",
                       "--out", "json", "--out-dir", dir.string()});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.dump().find("\"pp\"") != std::string::npos);
  CHECK(fs::exists(dir / "describe.json"));
}

TEST_CASE("simulate is deterministic and honours the output directory variable") {
  const auto dir = testing::scratch_dir("simulate");
  const std::vector<std::string> args{"simulate", "--reps", "10", "--seed", "7", "--entities", "50",
                                      "--periods", "6", "--estimators", "fe,od"};
  ::setenv(cli::kOutDirEnv, dir.string().c_str(), 1);
  const auto a = call(args);
  const std::string csv_a = testing::slurp(dir / "simulate.csv");
  const std::string json_a = testing::slurp(dir / "simulate.json");
  const auto b = call(args);
  ::unsetenv(cli::kOutDirEnv);
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(!csv_a.empty());
  CHECK(csv_a == testing::slurp(dir / "simulate.csv"));
  CHECK(json_a == testing::slurp(dir / "simulate.json"));
  const auto m = nlohmann::json::parse(testing::slurp(dir / "simulate_manifest.json"));
  CHECK(m.at("seed") == 7);
}

}
