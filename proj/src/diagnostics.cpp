#include "dpanel/diagnostics.hpp"

#include "dpanel/error.hpp"
#include "linalg.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <json.hpp>

#include <cmath>
#include <numbers>
#include <unordered_map>

namespace dpanel {

double chi_square_sf(double x, int df) {
  if (df < 1) throw InputError("chi-square degrees of freedom must be positive");
  if (!(x >= 0)) throw InputError("chi-square statistic must be non-negative");
  if (x == 0) return 1.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::numbers::sqrt2); }

JTest j_test(const EstimationResult& result) {
  if (!result.is_gmm()) throw InputError("the J test needs a GMM result");
  JTest out;
  const Index l = result.instruments.cols();
  const Index k = result.coefficients.size();
  out.df = static_cast<int>(l - k);
  if (out.df < 0) throw EstimationError("impossible state: fewer instruments than parameters");
  if (out.df == 0) return out;
  const Eigen::VectorXd g = result.instruments.transpose() * result.residuals;
  double j = g.dot(result.weighting_matrix * g);
  if (result.steps_taken == 1) {
    const bool fd = result.transform == TransformKind::first_difference;
    const double trace_h = (fd ? 2.0 : 1.0) * static_cast<double>(result.residuals.size());
    j /= result.residuals.squaredNorm() / trace_h;
  }
  out.statistic = std::max(0.0, j);
  out.p_value = chi_square_sf(out.statistic, out.df);
  return out;
}

namespace {

struct LaggedPairs {
  std::vector<Index> rows;    // rows with a residual dated t - order
  std::vector<Index> lagged;  // the matching t - order row
};

LaggedPairs lagged_pairs(const std::vector<AlignedRow>& rows, int order) {
  LaggedPairs out;
  std::unordered_map<Index, Index> at;  // entity * big + period -> row, per entity pass
  std::size_t b = 0;
  while (b < rows.size()) {
    std::size_t e = b;
    at.clear();
    while (e < rows.size() && rows[e].entity == rows[b].entity) {
      at[rows[e].period] = static_cast<Index>(e);
      ++e;
    }
    for (std::size_t r = b; r < e; ++r) {
      auto it = at.find(rows[r].period - order);
      if (it != at.end()) {
        out.rows.push_back(static_cast<Index>(r));
        out.lagged.push_back(it->second);
      }
    }
    b = e;
  }
  return out;
}

}  // namespace

SerialTest serial_correlation_raw(const std::vector<AlignedRow>& rows,
                                  const Eigen::VectorXd& residuals, int order) {
  if (order < 1) throw InputError("serial correlation order must be >= 1");
  const auto pairs = lagged_pairs(rows, order);
  if (pairs.rows.empty()) throw EstimationError("too few periods for AR(" + std::to_string(order) + ")");
  double num = 0, var = 0, entity_sum = 0;
  Index current = -1;
  for (std::size_t k = 0; k < pairs.rows.size(); ++k) {
    const Index e = rows[static_cast<std::size_t>(pairs.rows[k])].entity;
    if (e != current) {
      var += entity_sum * entity_sum;
      entity_sum = 0;
      current = e;
    }
    const double v = residuals(pairs.lagged[k]) * residuals(pairs.rows[k]);
    num += v;
    entity_sum += v;
  }
  var += entity_sum * entity_sum;
  if (!(var > 0)) throw EstimationError("degenerate variance in AR(" + std::to_string(order) + ") test");
  SerialTest out;
  out.order = order;
  out.statistic = num / std::sqrt(var);
  out.p_value = normal_two_sided_p(out.statistic);
  return out;
}

SerialTest ab_serial_correlation(const EstimationResult& result, int order) {
  if (order < 1) throw InputError("serial correlation order must be >= 1");
  if (!result.is_gmm() || !result.design) throw InputError("the AR(m) test needs a GMM result");
  const Design& d = *result.design;
  if (d.transform != TransformKind::first_difference &&
      d.transform != TransformKind::orthogonal_deviation) {
    throw InputError("the AR(m) test applies to first-difference or orthogonal-deviation fits");
  }
  const AlignedSample& s = *d.sample;
  const Index k = result.coefficients.size();
  if (k != d.n_slopes) throw InputError("AR(m) test expects slope-only coefficients");

  // first-differenced regressand and regressors on the same aligned sample
  Eigen::MatrixXd joint(s.size(), 1 + k);
  joint.col(0) = s.y;
  joint.rightCols(k) = s.x;
  const auto fd = transforms::apply(s.rows, s.n_periods, joint, TransformKind::first_difference);
  std::vector<AlignedRow> fd_rows;
  for (Index r : fd.kept) fd_rows.push_back(s.rows[static_cast<std::size_t>(r)]);
  const Eigen::MatrixXd dx = fd.values.rightCols(k);
  const Eigen::VectorXd e = fd.values.col(0) - dx * result.coefficients;

  const auto pairs = lagged_pairs(fd_rows, order);
  if (pairs.rows.empty()) throw EstimationError("too few periods for AR(" + std::to_string(order) + ")");

  // per-entity pieces
  std::unordered_map<Index, double> a;  // sum_t e_{t-m} e_t by entity
  Eigen::VectorXd q = Eigen::VectorXd::Zero(k);
  double num = 0;
  for (std::size_t p = 0; p < pairs.rows.size(); ++p) {
    const Index r = pairs.rows[p];
    const double w = e(pairs.lagged[p]);
    num += w * e(r);
    a[fd_rows[static_cast<std::size_t>(r)].entity] += w * e(r);
    q += w * dx.row(r).transpose();
  }
  double term1 = 0;
  for (const auto& [entity, v] : a) term1 += v * v;

  // covariance between the numerator and the coefficient estimate
  const Eigen::MatrixXd& z = result.instruments;
  Eigen::VectorXd cross = Eigen::VectorXd::Zero(z.cols());
  for (Index r = 0; r < d.size(); ++r) {
    auto it = a.find(d.rows[static_cast<std::size_t>(r)].entity);
    if (it == a.end()) continue;
    cross += z.row(r).transpose() * (result.residuals(r) * it->second);
  }
  const double term2 = q.dot(result.influence * cross);
  const double term3 = q.dot(result.covariance * q);
  const double var = term1 - 2.0 * term2 + term3;
  if (!(var > 0)) throw EstimationError("non-positive variance in AR(" + std::to_string(order) + ") test");

  SerialTest out;
  out.order = order;
  out.statistic = num / std::sqrt(var);
  out.p_value = normal_two_sided_p(out.statistic);
  return out;
}

VarianceComponents swamy_arora(const ModelSpec& spec, const AlignedSample& s) {
  const Index k = s.x.cols();
  std::vector<std::string> names;
  for (const auto& t : s.regressors) names.push_back(t.label());

  // entity ranges and means
  std::vector<std::pair<Index, Index>> ranges;
  {
    Index b = 0;
    for (Index r = 1; r <= s.size(); ++r) {
      if (r == s.size() || s.rows[static_cast<std::size_t>(r)].entity != s.rows[static_cast<std::size_t>(b)].entity) {
        ranges.emplace_back(b, r);
        b = r;
      }
    }
  }
  const Index n_entities = static_cast<Index>(ranges.size());
  const Index n = s.size();

  const Index df_within = n - n_entities - k;
  if (df_within <= 0) throw EstimationError("non-positive within degrees of freedom");
  double ssr_within = 0;
  if (k > 0) {
    Eigen::MatrixXd joint(n, 1 + k);
    joint.col(0) = s.y;
    joint.rightCols(k) = s.x;
    auto w = transforms::apply(s.rows, s.n_periods, joint, TransformKind::within);
    auto ls = linalg::least_squares(w.values.rightCols(k), w.values.col(0), names);
    ssr_within = (w.values.col(0) - w.values.rightCols(k) * ls.coefficients).squaredNorm();
  } else {
    auto w = transforms::apply(s.rows, s.n_periods, s.y, TransformKind::within);
    ssr_within = w.values.squaredNorm();
  }

  const bool icpt = spec.intercept;
  const Index kb = k + (icpt ? 1 : 0);
  const Index df_between = n_entities - kb;
  if (df_between <= 0) throw EstimationError("non-positive between degrees of freedom");
  Eigen::VectorXd ybar(n_entities);
  Eigen::MatrixXd xbar(n_entities, kb);
  double inv_sum = 0;
  for (Index i = 0; i < n_entities; ++i) {
    const auto [b, e] = ranges[static_cast<std::size_t>(i)];
    ybar(i) = s.y.segment(b, e - b).mean();
    if (k > 0) xbar.row(i).head(k) = s.x.middleRows(b, e - b).colwise().mean();
    if (icpt) xbar(i, kb - 1) = 1.0;
    inv_sum += 1.0 / static_cast<double>(e - b);
  }
  if (icpt) names.push_back("intercept");
  auto lb = linalg::least_squares(xbar, ybar, names);
  const double ssr_between = (ybar - xbar * lb.coefficients).squaredNorm();

  VarianceComponents vc;
  vc.sigma_e2 = ssr_within / static_cast<double>(df_within);
  vc.harmonic_periods = static_cast<double>(n_entities) / inv_sum;
  const double raw_u = ssr_between / static_cast<double>(df_between) - vc.sigma_e2 / vc.harmonic_periods;
  if (raw_u <= 0) {
    vc.sigma_u2 = 0.0;
    vc.floored = true;
  } else {
    vc.sigma_u2 = raw_u;
  }
  const double total = vc.sigma_u2 + vc.sigma_e2;
  vc.rho_u = total > 0 ? vc.sigma_u2 / total : 0.0;
  vc.rho_e = 1.0 - vc.rho_u;
  return vc;
}

HausmanResult hausman(const EstimationResult& fe, const EstimationResult& re) {
  std::vector<std::pair<Index, Index>> common;
  for (Index i = 0; i < static_cast<Index>(fe.names.size()); ++i) {
    const auto& name = fe.names[static_cast<std::size_t>(i)];
    if (name == "intercept" || name.rfind("D[", 0) == 0) continue;
    const Index j = re.index_of(name);
    if (j >= 0) common.emplace_back(i, j);
  }
  if (common.empty()) throw InputError("Hausman test: no common slope coefficients");

  HausmanResult out;
  out.df = static_cast<int>(common.size());
  if (re.components && re.components->sigma_u2 == 0.0) {
    out.reason = "cross-section variance component is zero (rho_u = 0); random effects coincide with pooled";
    return out;
  }
  const Index m = static_cast<Index>(common.size());
  Eigen::VectorXd diff(m);
  Eigen::MatrixXd v(m, m);
  for (Index a = 0; a < m; ++a) {
    diff(a) = fe.coefficients(common[static_cast<std::size_t>(a)].first) -
              re.coefficients(common[static_cast<std::size_t>(a)].second);
    for (Index b = 0; b < m; ++b) {
      v(a, b) = fe.covariance_conventional(common[static_cast<std::size_t>(a)].first, common[static_cast<std::size_t>(b)].first) -
                re.covariance_conventional(common[static_cast<std::size_t>(a)].second, common[static_cast<std::size_t>(b)].second);
    }
  }
  v = linalg::symmetrize(v);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(v);
  if (eig.eigenvalues().minCoeff() < 1e-10) {
    out.reason = "covariance difference is not positive definite";
    return out;
  }
  out.valid = true;
  out.statistic = std::max(0.0, diff.dot(eig.eigenvectors() *
                                         eig.eigenvalues().cwiseInverse().asDiagonal() *
                                         eig.eigenvectors().transpose() * diff));
  out.p_value = chi_square_sf(out.statistic, out.df);
  return out;
}

std::string to_string(Criterion c) {
  switch (c) {
    case Criterion::aic: return "aic";
    case Criterion::schwarz: return "schwarz";
    case Criterion::hannan_quinn: return "hannan_quinn";
  }
  return "unknown";
}

double LagCandidate::value(Criterion c) const {
  switch (c) {
    case Criterion::aic: return aic;
    case Criterion::schwarz: return schwarz;
    case Criterion::hannan_quinn: return hannan_quinn;
  }
  return aic;
}

LagSelection lag_selection(const PanelDataset& data, const LagSearch& search) {
  if (search.max_ar < 0) throw InputError("maximum autoregressive lag must be >= 0");
  const int min_ar = search.max_ar == 0 ? 0 : std::clamp(search.min_ar, 0, search.max_ar);

  // common sample: every candidate column present
  std::vector<LaggedTerm> all;
  for (int l = 1; l <= search.max_ar; ++l) all.push_back({search.dependent, l});
  std::vector<std::size_t> exog_offset;
  for (const auto& [var, deepest] : search.exogenous) {
    if (deepest < 0) throw InputError("maximum lag for '" + var + "' must be >= 0");
    exog_offset.push_back(all.size());
    for (int l = 0; l <= deepest; ++l) all.push_back({var, l});
  }
  AlignedSample s = align(data, search.dependent, all);
  const Index n = s.size();
  const double nd = static_cast<double>(n);

  LagSelection out;
  std::vector<int> exog_lags(search.exogenous.size(), 0);
  const std::size_t nx = search.exogenous.size();
  auto evaluate = [&](int ar) {
    std::vector<Index> cols;
    for (int l = 1; l <= ar; ++l) cols.push_back(l - 1);
    for (std::size_t v = 0; v < nx; ++v)
      for (int l = 0; l <= exog_lags[v]; ++l) cols.push_back(static_cast<Index>(exog_offset[v]) + l);
    const Index k = static_cast<Index>(cols.size()) + (search.intercept ? 1 : 0);
    if (k == 0 || n <= k) return;
    Eigen::MatrixXd x(n, k);
    std::vector<std::string> names;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      x.col(static_cast<Index>(c)) = s.x.col(cols[c]);
      names.push_back(s.regressors[static_cast<std::size_t>(cols[c])].label());
    }
    if (search.intercept) {
      x.col(k - 1).setOnes();
      names.push_back("intercept");
    }
    auto ls = linalg::least_squares(x, s.y, names);
    const double ssr = (s.y - x * ls.coefficients).squaredNorm();
    const double loglik = -0.5 * nd * (1.0 + std::log(2.0 * std::numbers::pi) + std::log(ssr / nd));
    LagCandidate c;
    c.ar = ar;
    c.exogenous_lags = exog_lags;
    c.observations = n;
    const double kd = static_cast<double>(k);
    c.aic = (-2.0 * loglik + 2.0 * kd) / nd;
    c.schwarz = (-2.0 * loglik + kd * std::log(nd)) / nd;
    c.hannan_quinn = (-2.0 * loglik + 2.0 * kd * std::log(std::log(nd))) / nd;
    out.candidates.push_back(std::move(c));
  };

  // odometer over exogenous lag orders, for each AR order
  for (int ar = min_ar; ar <= search.max_ar; ++ar) {
    std::fill(exog_lags.begin(), exog_lags.end(), 0);
    while (true) {
      evaluate(ar);
      std::size_t v = 0;
      while (v < nx && exog_lags[v] == search.exogenous[v].second) exog_lags[v++] = 0;
      if (v == nx) break;
      ++exog_lags[v];
    }
  }
  if (out.candidates.empty()) throw EstimationError("no estimable lag candidate");
  for (Criterion c : {Criterion::aic, Criterion::schwarz, Criterion::hannan_quinn}) {
    const LagCandidate* best = &out.candidates.front();
    for (const auto& cand : out.candidates)
      if (cand.value(c) < best->value(c)) best = &cand;
    out.chosen.emplace(c, *best);
  }
  return out;
}

std::string to_json(const DiagnosticsReport& report) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  if (report.j) {
    j["j_statistic"] = report.j->statistic;
    j["j_df"] = report.j->df;
    j["j_pvalue"] = report.j->p_value;
  }
  if (!report.ar_tests.empty()) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& t : report.ar_tests)
      arr.push_back({{"order", t.order}, {"statistic", t.statistic}, {"pvalue", t.p_value}});
    j["ar_tests"] = arr;
  }
  if (report.variance_components) {
    const auto& v = *report.variance_components;
    j["variance_components"] = {{"sigma_u2", v.sigma_u2}, {"sigma_e2", v.sigma_e2},
                                {"rho_u", v.rho_u},       {"rho_e", v.rho_e},
                                {"floored", v.floored}};
  }
  if (report.hausman) {
    const auto& h = *report.hausman;
    if (h.valid) {
      j["hausman"] = {{"statistic", h.statistic}, {"df", h.df}, {"pvalue", h.p_value}};
    } else {
      j["hausman"] = {{"invalid", true}, {"reason", h.reason}};
    }
  }
  if (report.criteria) {
    auto chosen = nlohmann::ordered_json::object();
    for (const auto& [c, cand] : report.criteria->chosen)
      chosen[to_string(c)] = {{"ar", cand.ar}, {"exogenous_lags", cand.exogenous_lags}};
    j["lag_selection"] = chosen;
  }
  return j.dump(2);
}

}  // namespace dpanel
