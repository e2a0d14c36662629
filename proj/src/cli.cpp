#include "dpanel/cli.hpp"

#include "csv.hpp"
#include "dpanel/error.hpp"
#include "dpanel/ratings.hpp"
#include "dpanel/simulate.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <regex>
#include <set>
#include <sstream>

namespace dpanel::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::vector<LaggedTerm> parse_terms(const std::string& text) {
  static const std::regex term(R"(^([A-Za-z_][A-Za-z0-9_.]*)\s*(?:\(\s*(-?)\s*(\d+)\s*\))?$)");
  std::vector<LaggedTerm> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = csv::trim(item);
    if (item.empty()) continue;
    std::smatch m;
    if (!std::regex_match(item, m, term)) throw InputError("cannot parse regressor '" + item + "' (expected var or var(-k))");
    int lag = m[3].matched ? std::stoi(m[3].str()) : 0;
    if (lag != 0 && m[2].str() != "-") throw InputError("leads are not supported: '" + item + "'");
    out.push_back({m[1].str(), lag});
  }
  return out;
}

std::string sha256_file(const std::string& path) {
  const std::string bytes = csv::read_file(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw InputError("cannot hash file: " + path);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

std::vector<report::Column> replicate(const PanelDataset& data, const ReplicateOptions& options) {
  std::vector<std::string> missing;
  for (const auto& v : options.regressors)
    if (!data.has(v)) missing.push_back(v);
  if (!data.has(options.dependent)) missing.insert(missing.begin(), options.dependent);
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw InputError("replicate needs the series " + list +
                     ". Brand value and brand trust are not distributed with the premium data; "
                     "supply them as columns of the input file");
  }

  ModelSpec base;
  base.dependent = options.dependent;
  base.ar_lags = 1;
  for (const auto& v : options.regressors) base.exogenous.push_back({v, 0});

  InstrumentSpec level;
  for (const auto& v : options.regressors) level.statics.push_back({v, 0, 2});
  level.intercept = true;
  InstrumentSpec dynamic;
  dynamic.dynamics.push_back({options.dependent, 2, options.max_lag, options.collapse});
  for (const auto& v : options.regressors) dynamic.dynamics.push_back({v, 2, options.max_lag, options.collapse});

  const std::vector<std::pair<std::string, SpecKind>> plan{
      {"Pooled", SpecKind::pooled}, {"FE", SpecKind::fe}, {"RE", SpecKind::re},
      {"OD", SpecKind::od},         {"FD", SpecKind::fd}};
  std::vector<report::Column> cols;
  for (const auto& [title, kind] : plan) {
    report::Column col;
    col.title = title;
    EstimateOptions o;
    o.spec = base;
    apply_kind(o.spec, kind);
    o.instruments = (kind == SpecKind::od || kind == SpecKind::fd) ? dynamic : level;
    o.weighting = options.weighting;
    try {
      auto fit = estimate(data, o);
      col.result = std::move(fit.result);
      col.diagnostics = std::move(fit.diagnostics);
    } catch (const EstimationError& e) {
      col.error = e.what();
    }
    cols.push_back(std::move(col));
  }
  return cols;
}

namespace {

struct Output {
  std::string format = "table";
  std::string dir;
};

void add_output_options(CLI::App* app, Output& o, std::vector<std::string> formats) {
  app->add_option("--out", o.format, "output format")->check(CLI::IsMember(formats));
  app->add_option("--out-dir", o.dir, std::string("directory for result files (default $") + kOutDirEnv + " or .)");
}

fs::path resolve_dir(const Output& o) {
  fs::path dir = ".";
  if (!o.dir.empty()) {
    dir = o.dir;
  } else if (const char* env = std::getenv(kOutDirEnv); env && *env) {
    dir = env;
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InputError("cannot create output directory: " + dir.string());
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write file: " + path.string());
  f << content;
  if (!f) throw InputError("cannot write file: " + path.string());
}

struct Run {
  std::string subcommand;
  json config = json::object();
  std::optional<std::uint64_t> seed;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

void write_manifest(const fs::path& dir, const Run& run, const std::vector<std::string>& args) {
  json m;
  m["tool"] = "dpanel";
  m["version"] = kVersion;
  m["subcommand"] = run.subcommand;
  m["arguments"] = args;
  m["config"] = run.config;
  m["seed"] = run.seed ? json(*run.seed) : json(nullptr);
  json inputs = json::array();
  for (const auto& p : run.inputs) inputs.push_back({{"path", p}, {"sha256", sha256_file(p)}});
  m["inputs"] = inputs;
  m["outputs"] = run.outputs;
  write_file(dir / (run.subcommand + "_manifest.json"), m.dump(2) + "\n");
}

PanelDataset load(const std::string& path, const std::string& wide_var) {
  if (!fs::exists(path)) throw InputError("cannot open file: " + path);
  if (!wide_var.empty()) return ingest_wide_csv(path, wide_var);
  return ingest_long_csv(path);
}

Weighting parse_weighting(const std::string& name, int max_iter, double tol, bool windmeijer) {
  Weighting w;
  if (name == "one-step") {
    w = Weighting::one_step();
  } else if (name == "two-step") {
    w = Weighting::two_step();
  } else {
    w = Weighting::n_step(max_iter, tol);
  }
  w.windmeijer = windmeijer;
  return w;
}

std::string extension(const std::string& format) {
  if (format == "json") return ".json";
  if (format == "csv") return ".csv";
  return ".txt";
}

struct WeightingFlags {
  std::string name;
  int max_iter = 100;
  double tol = 1e-8;
  bool windmeijer = false;
};

void add_weighting_options(CLI::App* app, WeightingFlags& w, std::string def) {
  w.name = std::move(def);
  app->add_option("--weighting", w.name, "GMM weighting")
      ->check(CLI::IsMember({"one-step", "two-step", "n-step"}));
  app->add_option("--max-iter", w.max_iter, "n-step iteration limit");
  app->add_option("--tol", w.tol, "n-step tolerance on the coefficient sup-norm");
  app->add_flag("--windmeijer", w.windmeijer, "Windmeijer-corrected two-step standard errors");
}

// ---- estimate

struct EstimateFlags {
  std::string data;
  std::string wide_var;
  std::string spec = "pooled";
  std::string dep;
  int ar = 1;
  std::string regressors;
  bool no_intercept = false;
  std::string instruments;
  std::string fe_method = "within";
  int ar_tests = 2;
  WeightingFlags weighting;
  Output output;
};

int cmd_estimate(const EstimateFlags& f, Run& run, std::ostream& out) {
  const PanelDataset data = load(f.data, f.wide_var);
  run.inputs.push_back(f.data);

  EstimateOptions o;
  o.spec.dependent = f.dep;
  o.spec.ar_lags = f.ar;
  for (const auto& t : parse_terms(f.regressors)) {
    if (t.variable == f.dep && t.lag > 0) {
      o.spec.ar_lags = std::max(o.spec.ar_lags, t.lag);
    } else {
      o.spec.exogenous.push_back(t);
    }
  }
  o.spec.intercept = !f.no_intercept;
  const SpecKind kind = parse_spec_kind(f.spec);
  apply_kind(o.spec, kind);
  if (f.fe_method == "lsdv" && kind == SpecKind::fe) o.spec.transform = TransformKind::dummies;
  o.fe_method = f.fe_method == "lsdv" ? FeMethod::lsdv : FeMethod::within;
  o.max_ar_order = f.ar_tests;
  o.weighting = parse_weighting(f.weighting.name, f.weighting.max_iter, f.weighting.tol, f.weighting.windmeijer);
  if (!f.instruments.empty()) {
    o.instruments = InstrumentSpec::parse(f.instruments);
  } else if (kind == SpecKind::fd || kind == SpecKind::od) {
    std::set<std::string> seen{f.dep};
    o.instruments.dynamics.push_back({f.dep, 2, std::nullopt, false});
    for (const auto& t : o.spec.exogenous)
      if (seen.insert(t.variable).second) o.instruments.dynamics.push_back({t.variable, 2, std::nullopt, false});
  }

  run.config = {{"data", f.data},
                {"wide_var", f.wide_var},
                {"spec", to_string(kind)},
                {"dependent", f.dep},
                {"ar_lags", o.spec.ar_lags},
                {"intercept", o.spec.intercept},
                {"instruments", o.instruments.to_string()},
                {"weighting", f.weighting.name},
                {"max_iter", f.weighting.max_iter},
                {"tol", f.weighting.tol},
                {"windmeijer", f.weighting.windmeijer},
                {"fe_method", f.fe_method},
                {"format", f.output.format}};
  json terms = json::array();
  for (const auto& t : o.spec.exogenous) terms.push_back(t.label());
  run.config["exogenous"] = terms;

  const fs::path dir = resolve_dir(f.output);
  auto fit = estimate(data, o);
  report::Column col;
  col.title = to_string(kind);
  std::vector<FitRow> fitted = fitted_and_levels(fit.result);
  col.result = std::move(fit.result);
  col.diagnostics = std::move(fit.diagnostics);

  std::string text;
  if (f.output.format == "json") {
    text = report::json(col);
  } else if (f.output.format == "csv") {
    text = report::csv({col});
  } else {
    text = report::table({col});
  }
  out << text;
  const std::string result_name = "estimate" + extension(f.output.format);
  write_file(dir / result_name, text);
  write_file(dir / "estimate_fitted.csv", fit_table_csv(fitted, data.entities()));
  run.outputs = {result_name, "estimate_fitted.csv"};
  return kOk;
}

// ---- replicate

struct ReplicateFlags {
  std::string data;
  std::string dep = "pp";
  std::string regressors = "bv,bt";
  std::optional<int> max_lag;
  bool collapse = false;
  WeightingFlags weighting;
  Output output;
};

int cmd_replicate(const ReplicateFlags& f, Run& run, std::ostream& out) {
  const PanelDataset data = load(f.data, "");
  run.inputs.push_back(f.data);
  ReplicateOptions o;
  o.dependent = f.dep;
  o.regressors.clear();
  for (const auto& t : parse_terms(f.regressors)) o.regressors.push_back(t.variable);
  o.max_lag = f.max_lag;
  o.collapse = f.collapse;
  o.weighting = parse_weighting(f.weighting.name, f.weighting.max_iter, f.weighting.tol, f.weighting.windmeijer);
  run.config = {{"data", f.data},
                {"dependent", f.dep},
                {"regressors", o.regressors},
                {"max_lag", f.max_lag ? json(*f.max_lag) : json(nullptr)},
                {"collapse", f.collapse},
                {"weighting", f.weighting.name},
                {"max_iter", f.weighting.max_iter},
                {"tol", f.weighting.tol},
                {"format", f.output.format}};
  const fs::path dir = resolve_dir(f.output);
  const auto cols = replicate(data, o);
  std::string text;
  if (f.output.format == "json") {
    text = report::json(cols);
  } else if (f.output.format == "csv") {
    text = report::csv(cols);
  } else {
    text = report::table(cols);
  }
  out << text;
  const std::string name = "replicate" + extension(f.output.format);
  write_file(dir / name, text);
  run.outputs = {name};
  const bool failed = std::any_of(cols.begin(), cols.end(), [](const auto& c) { return !c.result; });
  return failed ? kEstimationFailure : kOk;
}

// ---- simulate

struct SimulateFlags {
  int reps = 100;
  std::uint64_t seed = 1;
  Index entities = 100;
  Index periods = 10;
  double rho = 0.5;
  std::string betas;
  double sigma_effect = 1.0;
  double sigma_noise = 1.0;
  int burn_in = 50;
  double missingness = 0.0;
  double exog_persistence = 0.5;
  double exog_loading = 0.0;
  std::string estimators = "od,fd";
  std::string instruments;
  std::optional<int> max_lag;
  bool collapse = false;
  WeightingFlags weighting;
  Output output;
};

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = csv::trim(item);
    if (item.empty()) continue;
    auto v = csv::parse_double(item);
    if (!v) throw InputError("cannot parse number '" + item + "'");
    out.push_back(*v);
  }
  return out;
}

int cmd_simulate(const SimulateFlags& f, Run& run, std::ostream& out) {
  simulate::DgpSpec dgp;
  dgp.n_entities = f.entities;
  dgp.n_periods = f.periods;
  dgp.rho = f.rho;
  dgp.exogenous_betas = parse_numbers(f.betas);
  dgp.sigma_effect = f.sigma_effect;
  dgp.sigma_noise = f.sigma_noise;
  dgp.burn_in = f.burn_in;
  dgp.missingness = f.missingness;
  dgp.seed = f.seed;
  dgp.exog_persistence = f.exog_persistence;
  dgp.exog_effect_loading = f.exog_loading;
  dgp.validate();

  InstrumentSpec differenced;
  if (!f.instruments.empty()) {
    differenced = InstrumentSpec::parse(f.instruments);
  } else {
    differenced.dynamics.push_back({"y", 2, f.max_lag, f.collapse});
    for (std::size_t k = 0; k < dgp.exogenous_betas.size(); ++k)
      differenced.statics.push_back({"x" + std::to_string(k + 1), 0, 0});
  }
  const Weighting w = parse_weighting(f.weighting.name, f.weighting.max_iter, f.weighting.tol, f.weighting.windmeijer);
  std::vector<simulate::McEstimator> ests;
  std::stringstream in(f.estimators);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = csv::trim(item);
    if (item.empty()) continue;
    simulate::McEstimator e;
    e.kind = parse_spec_kind(item);
    e.name = to_string(e.kind);
    if (e.kind == SpecKind::fd || e.kind == SpecKind::od) e.instruments = differenced;
    e.weighting = w;
    ests.push_back(e);
  }
  if (ests.empty()) throw InputError("no estimators given");

  json names = json::array();
  for (const auto& e : ests) names.push_back(e.name);
  run.seed = f.seed;
  run.config = {{"reps", f.reps},
                {"seed", f.seed},
                {"entities", f.entities},
                {"periods", f.periods},
                {"rho", f.rho},
                {"betas", dgp.exogenous_betas},
                {"sigma_effect", f.sigma_effect},
                {"sigma_noise", f.sigma_noise},
                {"burn_in", f.burn_in},
                {"missingness", f.missingness},
                {"exog_persistence", f.exog_persistence},
                {"exog_loading", f.exog_loading},
                {"estimators", names},
                {"instruments", differenced.to_string()},
                {"weighting", f.weighting.name},
                {"format", f.output.format}};

  const fs::path dir = resolve_dir(f.output);
  const auto summary = simulate::run_experiment(dgp, ests, f.reps);
  const std::string csv_text = simulate::to_csv(summary);
  const std::string json_text = simulate::to_json(summary);
  write_file(dir / "simulate.csv", csv_text);
  write_file(dir / "simulate.json", json_text);
  run.outputs = {"simulate.csv", "simulate.json"};

  if (f.output.format == "json") {
    out << json_text;
  } else if (f.output.format == "csv") {
    out << csv_text;
  } else {
    out << "replications: " << summary.replications << '\n';
    for (const auto& e : summary.estimators) {
      out << e.name << ": " << e.successes << " ok, " << e.failures << " failed\n";
      for (const auto& p : e.parameters) {
        out << "  " << p.name << "  truth " << csv::format_double(p.truth) << "  mean " << csv::format_double(p.mean)
            << "  bias " << csv::format_double(p.bias) << "  rmse " << csv::format_double(p.rmse)
            << "  reject " << csv::format_double(p.rejection) << '\n';
      }
      if (e.j_rejection) out << "  J rejection " << csv::format_double(*e.j_rejection) << '\n';
      if (e.ar2_rejection) out << "  AR(2) rejection " << csv::format_double(*e.ar2_rejection) << '\n';
    }
    out << "seed ledger:\n";
    for (const auto& s : summary.seed_ledger) out << "  rep " << s.replication << "  seed " << s.seed << '\n';
  }
  return kOk;
}

// ---- describe

struct DescribeFlags {
  std::string data;
  std::string wide_var;
  std::string vars;
  Output output;
};

int cmd_describe(const DescribeFlags& f, Run& run, std::ostream& out) {
  const PanelDataset data = load(f.data, f.wide_var);
  run.inputs.push_back(f.data);
  std::vector<std::string> vars;
  if (f.vars.empty()) {
    vars = data.variables();
  } else {
    for (const auto& t : parse_terms(f.vars)) vars.push_back(t.variable);
  }
  run.config = {{"data", f.data}, {"wide_var", f.wide_var}, {"vars", vars}, {"format", f.output.format}};
  const fs::path dir = resolve_dir(f.output);

  std::ostringstream text;
  if (f.output.format == "json") {
    json j = json::object();
    for (const auto& v : vars) j[v] = json::parse(to_json(describe(data, v)));
    text << j.dump(2) << '\n';
  } else if (f.output.format == "csv") {
    text << "variable,mean,median,max,min,sd,skewness,kurtosis,n\n";
    for (const auto& v : vars) {
      const auto s = describe(data, v);
      text << csv::quote_if_needed(v) << ',' << csv::format_double(s.mean) << ',' << csv::format_double(s.median)
           << ',' << csv::format_double(s.max) << ',' << csv::format_double(s.min) << ','
           << csv::format_double(s.standard_deviation) << ',' << csv::format_double(s.skewness) << ','
           << csv::format_double(s.kurtosis) << ',' << s.observations << '\n';
    }
  } else {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-12s %12s %12s %12s %12s %12s %10s %10s %6s\n", "variable", "mean",
                  "median", "max", "min", "sd", "skewness", "kurtosis", "n");
    text << buf;
    for (const auto& v : vars) {
      const auto s = describe(data, v);
      std::snprintf(buf, sizeof buf, "%-12s %12.4f %12.4f %12.4f %12.4f %12.4f %10.4f %10.4f %6zu\n", v.c_str(),
                    s.mean, s.median, s.max, s.min, s.standard_deviation, s.skewness, s.kurtosis,
                    s.observations);
      text << buf;
    }
  }
  out << text.str();
  const std::string name = "describe" + extension(f.output.format);
  write_file(dir / name, text.str());
  run.outputs = {name};
  return kOk;
}

// ---- ratings

struct RatingsFlags {
  std::string grade;
  std::optional<double> value;
  bool table = false;
  Output output;
};

int cmd_ratings(const RatingsFlags& f, Run& run, std::ostream& out) {
  const int chosen = (!f.grade.empty()) + (f.value.has_value()) + (f.table ? 1 : 0);
  if (chosen != 1) throw InputError("give exactly one of --grade, --value or --table");
  run.config = {{"grade", f.grade}, {"value", f.value ? json(*f.value) : json(nullptr)}, {"table", f.table}};
  const fs::path dir = resolve_dir(f.output);
  std::string text;
  if (f.table) {
    text = ratings::scale_csv();
  } else if (f.value) {
    text = ratings::numeric_to_grade(*f.value) + "\n";
  } else {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f\n", ratings::grade_to_numeric(f.grade));
    text = buf;
  }
  out << text;
  write_file(dir / "ratings.txt", text);
  run.outputs = {"ratings.txt"};
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dynamic panel estimation: pooled, fixed and random effects, and GMM on differenced panels",
               "dpanel"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  EstimateFlags ef;
  auto* est = app.add_subcommand("estimate", "fit one model and report it");
  est->add_option("--data", ef.data, "panel CSV (long: entity,period,vars...)")->required();
  est->add_option("--wide-var", ef.wide_var, "read --data as a wide file holding this variable");
  est->add_option("--spec", ef.spec, "model")->check(CLI::IsMember({"pooled", "fe", "re", "fd", "od"}));
  est->add_option("--dep", ef.dep, "dependent variable")->required();
  est->add_option("--ar", ef.ar, "autoregressive lags of the dependent variable");
  est->add_option("--regressors", ef.regressors, "comma list of var or var(-k)");
  est->add_flag("--no-intercept", ef.no_intercept, "drop the intercept (level models)");
  est->add_option("--instruments", ef.instruments, "dyn(V,S[,B])[:collapse], static(V,A..B), intercept");
  est->add_option("--fe-method", ef.fe_method, "fixed-effects method")->check(CLI::IsMember({"within", "lsdv"}));
  est->add_option("--ar-tests", ef.ar_tests, "highest AR(m) test order for fd/od");
  add_weighting_options(est, ef.weighting, "two-step");
  add_output_options(est, ef.output, {"table", "csv", "json"});

  ReplicateFlags rf;
  auto* rep = app.add_subcommand("replicate", "Pooled, FE, RE, OD and FD side by side");
  rep->add_option("--data", rf.data, "long CSV with the dependent variable and regressors")->required();
  rep->add_option("--dep", rf.dep, "dependent variable");
  rep->add_option("--regressors", rf.regressors, "contemporaneous regressors");
  rep->add_option("--max-lag", rf.max_lag, "deepest lag in the dynamic instrument blocks");
  rep->add_flag("--collapse", rf.collapse, "collapse the dynamic instrument blocks");
  add_weighting_options(rep, rf.weighting, "n-step");
  add_output_options(rep, rf.output, {"table", "csv", "json"});

  SimulateFlags sf;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo experiment on a synthetic dynamic panel");
  sim->add_option("--reps", sf.reps, "replications");
  sim->add_option("--seed", sf.seed, "base seed");
  sim->add_option("--entities", sf.entities, "entities per replication");
  sim->add_option("--periods", sf.periods, "recorded periods");
  sim->add_option("--rho", sf.rho, "autoregressive coefficient");
  sim->add_option("--betas", sf.betas, "comma list of exogenous coefficients");
  sim->add_option("--sigma-effect", sf.sigma_effect, "entity effect standard deviation");
  sim->add_option("--sigma-noise", sf.sigma_noise, "idiosyncratic standard deviation");
  sim->add_option("--burn-in", sf.burn_in, "discarded initial periods");
  sim->add_option("--missingness", sf.missingness, "probability of deleting an observation");
  sim->add_option("--exog-persistence", sf.exog_persistence, "AR coefficient of the exogenous series");
  sim->add_option("--exog-loading", sf.exog_loading, "loading of the exogenous series on the entity effect");
  sim->add_option("--estimators", sf.estimators, "comma list of pooled, fe, re, fd, od");
  sim->add_option("--instruments", sf.instruments, "instruments for fd/od (default dyn(y,2) plus static x)");
  sim->add_option("--max-lag", sf.max_lag, "deepest lag in the default dynamic block");
  sim->add_flag("--collapse", sf.collapse, "collapse the default dynamic block");
  add_weighting_options(sim, sf.weighting, "two-step");
  add_output_options(sim, sf.output, {"table", "csv", "json"});

  DescribeFlags df;
  auto* des = app.add_subcommand("describe", "descriptive statistics");
  des->add_option("--data", df.data, "panel CSV")->required();
  des->add_option("--wide-var", df.wide_var, "read --data as a wide file holding this variable");
  des->add_option("--vars", df.vars, "comma list of variables (default all)");
  add_output_options(des, df.output, {"table", "csv", "json"});

  RatingsFlags gf;
  auto* rat = app.add_subcommand("ratings", "brand trust grade scale");
  rat->add_option("--grade", gf.grade, "letter grade to convert");
  rat->add_option("--value", gf.value, "numeric value to convert");
  rat->add_flag("--table", gf.table, "print the full scale as CSV");
  add_output_options(rat, gf.output, {"table"});

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  Run run;
  Output* output = nullptr;
  std::function<int(Run&)> body;
  if (*est) {
    run.subcommand = "estimate";
    output = &ef.output;
    body = [&](Run& r) { return cmd_estimate(ef, r, out); };
  } else if (*rep) {
    run.subcommand = "replicate";
    output = &rf.output;
    body = [&](Run& r) { return cmd_replicate(rf, r, out); };
  } else if (*sim) {
    run.subcommand = "simulate";
    output = &sf.output;
    body = [&](Run& r) { return cmd_simulate(sf, r, out); };
  } else if (*des) {
    run.subcommand = "describe";
    output = &df.output;
    body = [&](Run& r) { return cmd_describe(df, r, out); };
  } else {
    run.subcommand = "ratings";
    output = &gf.output;
    body = [&](Run& r) { return cmd_ratings(gf, r, out); };
  }

  try {
    const int code = body(run);
    write_manifest(resolve_dir(*output), run, args);
    return code;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const EstimationError& e) {
    err << "error: " << e.what() << '\n';
    return kEstimationFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kEstimationFailure;
  }
}

}  // namespace dpanel::cli
