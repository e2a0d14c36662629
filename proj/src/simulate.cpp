#include "dpanel/simulate.hpp"

#include "csv.hpp"
#include "dpanel/error.hpp"

#include <json.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

namespace dpanel::simulate {

void DgpSpec::validate() const {
  if (n_entities < 1) throw InputError("simulation needs at least one entity");
  if (n_periods < 1) throw InputError("simulation needs at least one period");
  if (!(std::abs(rho) < 1)) throw InputError("rho must satisfy |rho| < 1");
  if (!(std::abs(exog_persistence) < 1)) throw InputError("exogenous persistence must satisfy |phi| < 1");
  if (!(sigma_effect >= 0) || !(sigma_noise >= 0)) throw InputError("standard deviations must be non-negative");
  if (burn_in < 0) throw InputError("burn-in must be >= 0");
  if (!(missingness >= 0 && missingness < 1)) throw InputError("missingness must lie in [0, 1)");
}

std::vector<std::string> DgpSpec::variable_names() const {
  std::vector<std::string> out{"y"};
  for (std::size_t k = 0; k < exogenous_betas.size(); ++k) out.push_back("x" + std::to_string(k + 1));
  return out;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t replication, std::uint64_t stream) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s = a ^ (replication * 0xd1b54a32d192ed03ULL);
  std::uint64_t b = splitmix64(s);
  s = b ^ (stream * 0x8cb92ba72f3d8dd7ULL);
  return splitmix64(s);
}

Normal::Normal(std::uint64_t seed) : engine_(seed) {}

double Normal::uniform() {
  // 53 random bits, offset by half a step so 0 and 1 are excluded
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Normal::operator()() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

namespace {

constexpr std::uint64_t kMissingStream = 1ULL << 40;

}  // namespace

PanelDataset generate(const DgpSpec& dgp, std::uint64_t replication) {
  dgp.validate();
  const Index n = dgp.n_entities;
  const Index t_len = dgp.n_periods;
  const std::size_t kx = dgp.exogenous_betas.size();
  const auto names = dgp.variable_names();
  std::vector<Series> series(names.size(), Series::missing(n, t_len));
  const bool noisy = dgp.sigma_noise > 0;
  const int burn = noisy ? dgp.burn_in : 0;
  const double phi = dgp.exog_persistence;

  for (Index i = 0; i < n; ++i) {
    Normal draw(stream_seed(dgp.seed, replication, static_cast<std::uint64_t>(i)));
    const double effect = dgp.sigma_effect * draw();
    std::vector<double> x(kx);
    for (auto& v : x) v = dgp.exog_effect_loading * effect / (1.0 - phi) + draw() / std::sqrt(1.0 - phi * phi);
    double y = dgp.initial_value;
    if (noisy) {
      y = effect / (1.0 - dgp.rho) + dgp.sigma_noise * draw() / std::sqrt(1.0 - dgp.rho * dgp.rho);
    }
    for (Index t = -burn; t < t_len; ++t) {
      double mean = dgp.rho * y + effect;
      for (std::size_t k = 0; k < kx; ++k) {
        x[k] = phi * x[k] + dgp.exog_effect_loading * effect + draw();
        mean += dgp.exogenous_betas[k] * x[k];
      }
      y = mean + (noisy ? dgp.sigma_noise * draw() : 0.0);
      if (t < 0) continue;
      series[0].values(i, t) = y;
      series[0].present(i, t) = true;
      for (std::size_t k = 0; k < kx; ++k) {
        series[k + 1].values(i, t) = x[k];
        series[k + 1].present(i, t) = true;
      }
    }
    if (dgp.missingness > 0) {
      Normal gaps(stream_seed(dgp.seed, replication, kMissingStream + static_cast<std::uint64_t>(i)));
      for (Index t = 0; t < t_len; ++t) {
        if (gaps.uniform() >= dgp.missingness) continue;
        for (auto& s : series) {
          s.present(i, t) = false;
          s.values(i, t) = std::numeric_limits<double>::quiet_NaN();
        }
      }
    }
  }

  std::vector<Index> keep;
  for (Index i = 0; i < n; ++i)
    if (series[0].present.row(i).any()) keep.push_back(i);
  if (keep.empty()) throw EstimationError("every simulated cell was deleted");

  std::vector<std::string> entities;
  for (Index i : keep) {
    std::ostringstream name;
    name << "e" << i + 1;
    entities.push_back(name.str());
  }
  std::map<std::string, Series> named;
  for (std::size_t v = 0; v < names.size(); ++v) {
    Series s = Series::missing(static_cast<Index>(keep.size()), t_len);
    for (std::size_t r = 0; r < keep.size(); ++r) {
      s.values.row(static_cast<Index>(r)) = series[v].values.row(keep[r]);
      s.present.row(static_cast<Index>(r)) = series[v].present.row(keep[r]);
    }
    named.emplace(names[v], std::move(s));
  }
  return PanelDataset(std::move(entities), dgp.first_period, t_len, std::move(named));
}

namespace {

struct Target {
  std::string name;
  double truth;
};

std::vector<Target> targets(const DgpSpec& dgp, const McEstimator& est) {
  std::vector<Target> out;
  for (int l = 1; l <= est.ar_lags; ++l)
    out.push_back({LaggedTerm{"y", l}.label(), l == 1 ? dgp.rho : 0.0});
  for (std::size_t k = 0; k < dgp.exogenous_betas.size(); ++k)
    out.push_back({"x" + std::to_string(k + 1), dgp.exogenous_betas[k]});
  return out;
}

EstimateOptions options_for(const DgpSpec& dgp, const McEstimator& est) {
  EstimateOptions o;
  o.spec.dependent = "y";
  o.spec.ar_lags = est.ar_lags;
  for (std::size_t k = 0; k < dgp.exogenous_betas.size(); ++k)
    o.spec.exogenous.push_back({"x" + std::to_string(k + 1), 0});
  o.spec.intercept = true;
  apply_kind(o.spec, est.kind);
  o.instruments = est.instruments;
  o.weighting = est.weighting;
  o.hausman = false;
  return o;
}

double share_below(const std::vector<double>& p, double level) {
  if (p.empty()) return 0.0;
  double c = 0;
  for (double v : p)
    if (v < level) c += 1;
  return c / static_cast<double>(p.size());
}

}  // namespace

McSummary run_experiment(const DgpSpec& dgp, const std::vector<McEstimator>& estimators, int reps) {
  if (reps < 1) throw InputError("replication count must be >= 1");
  if (estimators.empty()) throw InputError("no estimators to run");
  dgp.validate();
  McSummary out;
  out.dgp = dgp;
  out.replications = reps;

  std::vector<std::vector<Target>> tgt;
  std::vector<EstimateOptions> opts;
  std::vector<std::vector<std::vector<double>>> ses(estimators.size());
  for (const auto& est : estimators) {
    tgt.push_back(targets(dgp, est));
    opts.push_back(options_for(dgp, est));
    EstimatorSummary s;
    s.name = est.name;
    out.estimators.push_back(std::move(s));
  }

  for (int r = 0; r < reps; ++r) {
    const auto rep = static_cast<std::uint64_t>(r);
    out.seed_ledger.push_back({rep, stream_seed(dgp.seed, rep, 0)});
    const PanelDataset data = generate(dgp, rep);
    for (std::size_t e = 0; e < estimators.size(); ++e) {
      auto& summary = out.estimators[e];
      try {
        const Estimate fit = estimate(data, opts[e]);
        std::vector<double> b, se;
        for (const auto& t : tgt[e]) {
          const Index j = fit.result.index_of(t.name);
          if (j < 0) throw EstimationError("coefficient " + t.name + " missing from the fit");
          b.push_back(fit.result.coefficients(j));
          se.push_back(fit.result.standard_errors(j));
        }
        summary.estimates.push_back(std::move(b));
        ses[e].push_back(std::move(se));
        if (fit.diagnostics.j && fit.diagnostics.j->df > 0) summary.j_pvalues.push_back(fit.diagnostics.j->p_value);
        for (const auto& ar : fit.diagnostics.ar_tests)
          if (ar.order == 2) summary.ar2_pvalues.push_back(ar.p_value);
        ++summary.successes;
      } catch (const EstimationError& ex) {
        ++summary.failures;
        if (summary.failure_messages.size() < 5)
          summary.failure_messages.push_back("rep " + std::to_string(r) + ": " + ex.what());
      }
    }
  }

  for (std::size_t e = 0; e < estimators.size(); ++e) {
    auto& summary = out.estimators[e];
    const double m = static_cast<double>(summary.successes);
    for (std::size_t p = 0; p < tgt[e].size(); ++p) {
      ParameterSummary ps;
      ps.name = tgt[e][p].name;
      ps.truth = tgt[e][p].truth;
      if (summary.successes > 0) {
        double sum = 0, sq = 0, se_sum = 0, rej = 0;
        for (std::size_t r = 0; r < summary.estimates.size(); ++r) {
          const double b = summary.estimates[r][p];
          const double se = ses[e][r][p];
          sum += b;
          sq += (b - ps.truth) * (b - ps.truth);
          se_sum += se;
          if (!(se > 0) || std::abs(b - ps.truth) / se > 1.959963984540054) rej += 1;
        }
        ps.mean = sum / m;
        ps.bias = ps.mean - ps.truth;
        ps.rmse = std::sqrt(sq / m);
        double var = 0;
        for (const auto& est : summary.estimates) var += (est[p] - ps.mean) * (est[p] - ps.mean);
        ps.sd = summary.successes > 1 ? std::sqrt(var / (m - 1)) : 0.0;
        ps.mean_se = se_sum / m;
        ps.se_sd_ratio = ps.sd > 0 ? ps.mean_se / ps.sd : std::numeric_limits<double>::quiet_NaN();
        ps.rejection = rej / m;
      }
      summary.parameters.push_back(ps);
    }
    if (!summary.j_pvalues.empty()) summary.j_rejection = share_below(summary.j_pvalues, 0.05);
    if (!summary.ar2_pvalues.empty()) summary.ar2_rejection = share_below(summary.ar2_pvalues, 0.05);
  }
  return out;
}

namespace {

std::string num(double v) { return std::isfinite(v) ? csv::format_double(v) : "NA"; }
std::string num(const std::optional<double>& v) { return v ? num(*v) : "NA"; }

nlohmann::ordered_json jnum(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace

std::string to_csv(const McSummary& summary) {
  std::ostringstream out;
  out << "estimator,successes,failures";
  // parameter columns follow the first estimator's parameter list, by name
  std::vector<std::string> params;
  for (const auto& e : summary.estimators)
    for (const auto& p : e.parameters)
      if (std::find(params.begin(), params.end(), p.name) == params.end()) params.push_back(p.name);
  for (const auto& name : params)
    for (const char* f : {"truth", "mean", "bias", "rmse", "sd", "mean_se", "se_sd_ratio", "rejection"})
      out << ',' << csv::quote_if_needed(name + ":" + f);
  out << ",j_rejection,ar2_rejection\n";
  for (const auto& e : summary.estimators) {
    out << csv::quote_if_needed(e.name) << ',' << e.successes << ',' << e.failures;
    for (const auto& name : params) {
      auto it = std::find_if(e.parameters.begin(), e.parameters.end(),
                             [&](const ParameterSummary& p) { return p.name == name; });
      if (it == e.parameters.end() || e.successes == 0) {
        for (int k = 0; k < 8; ++k) out << ",NA";
        continue;
      }
      out << ',' << num(it->truth) << ',' << num(it->mean) << ',' << num(it->bias) << ','
          << num(it->rmse) << ',' << num(it->sd) << ',' << num(it->mean_se) << ','
          << num(it->se_sd_ratio) << ',' << num(it->rejection);
    }
    out << ',' << num(e.j_rejection) << ',' << num(e.ar2_rejection) << '\n';
  }
  return out.str();
}

std::string to_json(const McSummary& summary) {
  using json = nlohmann::ordered_json;
  const DgpSpec& d = summary.dgp;
  json j;
  j["dgp"] = {{"n_entities", d.n_entities},
              {"n_periods", d.n_periods},
              {"rho", d.rho},
              {"exogenous_betas", d.exogenous_betas},
              {"sigma_effect", d.sigma_effect},
              {"sigma_noise", d.sigma_noise},
              {"burn_in", d.burn_in},
              {"missingness", d.missingness},
              {"seed", d.seed},
              {"exog_persistence", d.exog_persistence},
              {"exog_effect_loading", d.exog_effect_loading}};
  j["replications"] = summary.replications;
  json ests = json::array();
  for (const auto& e : summary.estimators) {
    json row;
    row["name"] = e.name;
    row["successes"] = e.successes;
    row["failures"] = e.failures;
    row["failure_messages"] = e.failure_messages;
    json params = json::array();
    for (const auto& p : e.parameters) {
      params.push_back({{"name", p.name},
                        {"truth", p.truth},
                        {"mean", jnum(p.mean)},
                        {"bias", jnum(p.bias)},
                        {"rmse", jnum(p.rmse)},
                        {"sd", jnum(p.sd)},
                        {"mean_se", jnum(p.mean_se)},
                        {"se_sd_ratio", jnum(p.se_sd_ratio)},
                        {"rejection", jnum(p.rejection)}});
    }
    row["parameters"] = params;
    row["j_rejection"] = e.j_rejection ? jnum(*e.j_rejection) : json(nullptr);
    row["ar2_rejection"] = e.ar2_rejection ? jnum(*e.ar2_rejection) : json(nullptr);
    ests.push_back(row);
  }
  j["estimators"] = ests;
  json ledger = json::array();
  for (const auto& s : summary.seed_ledger) ledger.push_back({{"replication", s.replication}, {"seed", s.seed}});
  j["seed_ledger"] = ledger;
  return j.dump(2) + "\n";
}

}  // namespace dpanel::simulate
