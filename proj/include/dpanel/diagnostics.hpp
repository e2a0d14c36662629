#pragma once

#include "dpanel/estimator.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dpanel {

// Upper tail of the chi-square distribution, Q(df/2, x/2).
double chi_square_sf(double x, int df);
// Two-sided standard normal p-value for z.
double normal_two_sided_p(double z);

struct JTest {
  double statistic = 0;
  int df = 0;
  double p_value = 1;
};

// Hansen J = g'Wg with g = Z'u at the final coefficients and W the final
// weighting matrix. One-step results are scaled by the residual variance
// (Sargan form).
JTest j_test(const EstimationResult& result);

struct SerialTest {
  int order = 0;
  double statistic = 0;
  double p_value = 1;
};

// Arellano-Bond test for order-m autocorrelation in first-differenced
// residuals. For orthogonal-deviation fits the test uses the first-differenced
// residuals implied by the same coefficients.
SerialTest ab_serial_correlation(const EstimationResult& result, int order);

// Same statistic without estimation-error terms, for residuals observed
// directly. `rows` and `residuals` are aligned and entity-contiguous.
SerialTest serial_correlation_raw(const std::vector<AlignedRow>& rows,
                                  const Eigen::VectorXd& residuals, int order);

// Swamy-Arora components: sigma_e^2 from the within regression with
// n - N - K degrees of freedom; sigma_u^2 = SSR_between / (N - K - 1)
// - sigma_e^2 / T_harmonic, floored at zero.
VarianceComponents swamy_arora(const ModelSpec& spec, const AlignedSample& sample);

struct HausmanResult {
  bool valid = false;
  double statistic = 0;
  int df = 0;
  double p_value = 1;
  std::string reason;  // why the test is invalid
};

// Compares slopes common to both fits using their conventional covariances.
HausmanResult hausman(const EstimationResult& fe, const EstimationResult& re);

enum class Criterion { aic, schwarz, hannan_quinn };
std::string to_string(Criterion c);

struct LagSearch {
  std::string dependent;
  int min_ar = 1;
  int max_ar = 1;
  std::vector<std::pair<std::string, int>> exogenous;  // variable, deepest lag
  bool intercept = true;
};

struct LagCandidate {
  int ar = 0;
  std::vector<int> exogenous_lags;  // deepest lag per exogenous variable
  double aic = 0;
  double schwarz = 0;
  double hannan_quinn = 0;
  Index observations = 0;

  double value(Criterion c) const;
};

struct LagSelection {
  std::vector<LagCandidate> candidates;
  std::map<Criterion, LagCandidate> chosen;
};

// Pooled Gaussian likelihood criteria, all candidates fitted on the sample
// of the deepest candidate.
LagSelection lag_selection(const PanelDataset& data, const LagSearch& search);

struct DiagnosticsReport {
  std::optional<JTest> j;
  std::vector<SerialTest> ar_tests;
  std::optional<VarianceComponents> variance_components;
  std::optional<HausmanResult> hausman;
  std::optional<LagSelection> criteria;
};

std::string to_json(const DiagnosticsReport& report);

}  // namespace dpanel
