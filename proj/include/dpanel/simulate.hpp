#pragma once

#include "dpanel/panel_data.hpp"
#include "dpanel/pipeline.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace dpanel::simulate {

// y_t = rho y_{t-1} + x_t'beta + w_a + e_t, with w_a ~ N(0, sigma_effect^2)
// and e_t ~ N(0, sigma_noise^2). Each x_k is AR(1) with coefficient
// exog_persistence, N(0,1) innovations, plus exog_effect_loading * w_a.
struct DgpSpec {
  Index n_entities = 100;
  Index n_periods = 10;
  double rho = 0.5;
  std::vector<double> exogenous_betas;
  double sigma_effect = 1.0;
  double sigma_noise = 1.0;
  int burn_in = 50;
  double missingness = 0.0;  // probability of deleting an (entity, period) observation
  std::uint64_t seed = 1;
  double exog_persistence = 0.5;
  double exog_effect_loading = 0.0;
  double initial_value = 1.0;  // y_0 when sigma_noise == 0
  int first_period = 1;

  void validate() const;
  // "y" and "x1".."xK"
  std::vector<std::string> variable_names() const;
};

// Portable RNG: mt19937_64 with seeds derived by splitmix64, Box-Muller normals.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t replication, std::uint64_t stream);

class Normal {
 public:
  explicit Normal(std::uint64_t seed);
  double operator()();
  double uniform();  // in (0, 1)

 private:
  std::mt19937_64 engine_;
  double spare_ = 0;
  bool has_spare_ = false;
};

// Replication `replication` of the DGP. Entities whose every cell was
// deleted are dropped.
PanelDataset generate(const DgpSpec& dgp, std::uint64_t replication = 0);

struct McEstimator {
  std::string name;
  SpecKind kind = SpecKind::od;
  InstrumentSpec instruments;
  Weighting weighting = Weighting::two_step();
  int ar_lags = 1;
};

struct ParameterSummary {
  std::string name;
  double truth = 0;
  double mean = 0;
  double bias = 0;      // mean - truth
  double rmse = 0;
  double sd = 0;        // across replications
  double mean_se = 0;
  double se_sd_ratio = 0;
  double rejection = 0;  // |b - truth| / se > 1.96
};

struct EstimatorSummary {
  std::string name;
  int successes = 0;
  int failures = 0;
  std::vector<std::string> failure_messages;  // first few
  std::vector<ParameterSummary> parameters;
  std::optional<double> j_rejection;    // share of p < 0.05
  std::optional<double> ar2_rejection;  // share of p < 0.05
  std::vector<std::vector<double>> estimates;  // per successful rep, in parameter order
  std::vector<double> j_pvalues;
  std::vector<double> ar2_pvalues;
};

struct SeedEntry {
  std::uint64_t replication = 0;
  std::uint64_t seed = 0;  // first entity stream seed
};

struct McSummary {
  DgpSpec dgp;
  int replications = 0;
  std::vector<EstimatorSummary> estimators;
  std::vector<SeedEntry> seed_ledger;
};

McSummary run_experiment(const DgpSpec& dgp, const std::vector<McEstimator>& estimators, int reps);

// One row per estimator.
std::string to_csv(const McSummary& summary);
std::string to_json(const McSummary& summary);

}  // namespace dpanel::simulate
