#pragma once

#include "dpanel/instruments.hpp"
#include "dpanel/panel_data.hpp"
#include "dpanel/transforms.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dpanel {

enum class Effects { none, fixed, random };

// y_t on y_{t-1..t-ar_lags}, the exogenous terms and optionally an intercept.
struct ModelSpec {
  std::string dependent;
  int ar_lags = 1;
  std::vector<LaggedTerm> exogenous;
  bool intercept = true;
  Effects effects = Effects::none;
  TransformKind transform = TransformKind::none;

  // Lagged dependent terms first, then exogenous terms; no intercept.
  std::vector<LaggedTerm> regressor_terms() const;
  // Throws InputError when the effects/transform/intercept combination is
  // inconsistent.
  void validate() const;
};

struct VarianceComponents {
  double sigma_u2 = 0;  // cross-section
  double sigma_e2 = 0;  // idiosyncratic
  double rho_u = 0;
  double rho_e = 1;
  bool floored = false;  // between-variance estimate was negative and set to 0
  double harmonic_periods = 0;

  // 1 - sqrt(sigma_e2 / (sigma_e2 + T_i sigma_u2))
  double theta(Index periods) const;
};

// Transformed regression problem: the rows that survive the transform, the
// transformed regressand and regressors, transformed static instrument
// columns, and the intercept column for level specifications.
struct Design {
  std::shared_ptr<const AlignedSample> sample;
  TransformKind transform = TransformKind::none;
  std::vector<Index> kept;
  std::vector<AlignedRow> rows;
  Eigen::VectorXd y;
  Eigen::MatrixXd x;
  std::vector<std::string> names;
  StaticColumns statics;
  std::optional<Eigen::VectorXd> intercept;
  std::vector<double> theta;  // per source entity, quasi_demean only
  Index n_slopes = 0;         // leading columns of x that are slope regressors
  Index absorbed = 0;         // degrees of freedom absorbed by the transform

  Index size() const { return y.size(); }
  Index cross_sections() const;
};

enum class DummyConvention { full_set, drop_first };

// Builds the design for `spec.transform`. `statics` are additional cells of
// the sample (its `extra` columns) transformed alongside the regressors.
Design prepare(const ModelSpec& spec, std::shared_ptr<const AlignedSample> sample,
               const std::vector<double>& theta = {},
               DummyConvention dummies = DummyConvention::full_set);

// Aligns `data` for `spec`, requiring the static instrument cells as well.
std::shared_ptr<const AlignedSample> align_for(const PanelDataset& data, const ModelSpec& spec,
                                               const InstrumentSpec& instruments = {});

enum class WeightingKind { one_step, two_step, n_step };

struct Weighting {
  WeightingKind kind = WeightingKind::two_step;
  int max_iter = 100;
  double tol = 1e-8;
  bool windmeijer = false;  // finite-sample correction, two-step only

  static Weighting one_step() { return {WeightingKind::one_step}; }
  static Weighting two_step() { return {WeightingKind::two_step}; }
  static Weighting n_step(int max_iter = 100, double tol = 1e-8) {
    return {WeightingKind::n_step, max_iter, tol};
  }
};

std::string to_string(WeightingKind kind);

struct EstimationResult {
  std::string estimator;
  TransformKind transform = TransformKind::none;
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd standard_errors;
  Eigen::VectorXd t_statistics;
  Eigen::MatrixXd covariance;               // White / entity-clustered sandwich
  Eigen::MatrixXd covariance_conventional;  // homoskedastic
  Eigen::VectorXd residuals;
  Eigen::VectorXd fitted_transformed;
  Eigen::VectorXd actual_transformed;
  Eigen::MatrixXd weighting_matrix;  // GMM only; empty otherwise
  double r_squared_weighted = 0;
  double r_squared_unweighted = 0;
  double sigma2 = 0;
  int steps_taken = 1;
  Index sample_size = 0;
  Index cross_sections = 0;
  Index periods = 0;

  std::shared_ptr<const Design> design;
  Eigen::MatrixXd instruments;  // GMM only
  Eigen::MatrixXd influence;    // (X'ZWZ'X)^-1 X'ZW, GMM only
  std::optional<VarianceComponents> components;
  std::vector<std::pair<Index, double>> entity_effects;  // fixed effects, by entity
  std::vector<Eigen::VectorXd> trace;                    // GMM iterates
  std::vector<std::string> notes;

  bool is_gmm() const { return instruments.cols() > 0; }
  Index index_of(const std::string& name) const;  // -1 when absent
};

// Pooled OLS with White covariance.
EstimationResult fit_pooled(const ModelSpec& spec, std::shared_ptr<const AlignedSample> sample);

enum class FeMethod { within, lsdv };

// Fixed effects by within transformation or entity dummies; both give the
// same slopes. With spec.intercept the reported intercept is the grand mean
// ybar - xbar'b.
EstimationResult fit_fixed_effects(const ModelSpec& spec,
                                   std::shared_ptr<const AlignedSample> sample,
                                   FeMethod method = FeMethod::within,
                                   DummyConvention dummies = DummyConvention::full_set);

// GLS by quasi-demeaning with per-entity theta from the variance components.
EstimationResult fit_random_effects(const ModelSpec& spec,
                                    std::shared_ptr<const AlignedSample> sample,
                                    const VarianceComponents& components);

// Linear GMM: b = (X'Z W Z'X)^-1 X'Z W Z'y. One-step W = (sum Z_i'H Z_i)^-1
// with H tridiagonal (2, -1) for first differences and identity otherwise;
// later steps use W = (sum Z_i'u_i u_i'Z_i)^-1.
EstimationResult fit_gmm(std::shared_ptr<const Design> design, const InstrumentMatrix& instruments,
                         const Weighting& weighting);

// For a within-transformed GMM fit without an intercept column: appends the
// grand-mean intercept ybar - xbar'b (variance xbar'V xbar), a constant
// instrument column and the matching zero moment, and re-centres the
// transformed values on the grand mean.
void append_grand_mean_intercept(EstimationResult& result);

// Instruments for a design: static columns come from the design, dynamic
// blocks from the dataset levels.
InstrumentMatrix build_instruments(const InstrumentSpec& spec, const PanelDataset& data,
                                   const Design& design);

struct FitRow {
  Index entity = 0;
  int period = 0;
  double actual = 0;  // transformed
  double fitted = 0;  // transformed
  std::optional<double> actual_level;
  std::optional<double> fitted_level;
};

std::vector<FitRow> fitted_and_levels(const EstimationResult& result);
std::string fit_table_csv(const std::vector<FitRow>& rows,
                          const std::vector<std::string>& entity_names);

}  // namespace dpanel
