#include "dpanel/estimator.hpp"

#include "csv.hpp"
#include "dpanel/error.hpp"
#include "linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dpanel {

std::vector<LaggedTerm> ModelSpec::regressor_terms() const {
  std::vector<LaggedTerm> out;
  for (int l = 1; l <= ar_lags; ++l) out.push_back({dependent, l});
  out.insert(out.end(), exogenous.begin(), exogenous.end());
  return out;
}

void ModelSpec::validate() const {
  if (dependent.empty()) throw InputError("model has no dependent variable");
  if (ar_lags < 0) throw InputError("autoregressive lag count must be >= 0");
  const bool differenced = transform == TransformKind::first_difference ||
                           transform == TransformKind::orthogonal_deviation;
  if (differenced && intercept) {
    throw InputError("first-difference and orthogonal-deviation models carry no intercept");
  }
  switch (effects) {
    case Effects::none:
      if (transform != TransformKind::none && !differenced)
        throw InputError("transform " + to_string(transform) + " requires an effects specification");
      break;
    case Effects::fixed:
      if (transform != TransformKind::within && transform != TransformKind::dummies)
        throw InputError("fixed effects need the within or dummies transform");
      break;
    case Effects::random:
      if (transform != TransformKind::quasi_demean)
        throw InputError("random effects need the quasi_demean transform");
      break;
  }
  if (ar_lags == 0 && exogenous.empty() && !intercept) throw InputError("model has no regressors");
}

double VarianceComponents::theta(Index periods) const {
  if (sigma_e2 <= 0) return sigma_u2 > 0 ? 1.0 : 0.0;
  if (sigma_u2 <= 0) return 0.0;
  return 1.0 - std::sqrt(sigma_e2 / (sigma_e2 + static_cast<double>(periods) * sigma_u2));
}

std::string to_string(WeightingKind kind) {
  switch (kind) {
    case WeightingKind::one_step: return "one-step";
    case WeightingKind::two_step: return "two-step";
    case WeightingKind::n_step: return "n-step";
  }
  return "unknown";
}

Index EstimationResult::index_of(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  return it == names.end() ? -1 : static_cast<Index>(it - names.begin());
}

namespace {

Index count_cross_sections(const std::vector<AlignedRow>& rows) {
  Index count = 0;
  Index last = -1;
  for (const auto& r : rows) {
    if (r.entity != last) {
      ++count;
      last = r.entity;
    }
  }
  return count;
}

struct Range {
  Index begin;
  Index end;
};

std::vector<Range> entity_ranges(const std::vector<AlignedRow>& rows) {
  std::vector<Range> out;
  Index b = 0;
  const Index n = static_cast<Index>(rows.size());
  for (Index r = 1; r <= n; ++r) {
    if (r == n || rows[static_cast<std::size_t>(r)].entity != rows[static_cast<std::size_t>(b)].entity) {
      out.push_back({b, r});
      b = r;
    }
  }
  return out;
}

Index count_periods(const std::vector<AlignedRow>& rows) {
  if (rows.empty()) return 0;
  Index lo = rows.front().period, hi = lo;
  for (const auto& r : rows) {
    lo = std::min(lo, r.period);
    hi = std::max(hi, r.period);
  }
  return hi - lo + 1;
}

double centered_ss(const Eigen::VectorXd& v) {
  return (v.array() - v.mean()).square().sum();
}

double squared_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  const double denom = (da.square().sum()) * (db.square().sum());
  if (!(denom > 0)) return 0.0;
  const double c = (da * db).sum();
  return c * c / denom;
}

void finish_inference(EstimationResult& r) {
  const Index k = r.coefficients.size();
  r.standard_errors.resize(k);
  r.t_statistics.resize(k);
  for (Index j = 0; j < k; ++j) {
    const double v = r.covariance(j, j);
    r.standard_errors(j) = v > 0 ? std::sqrt(v) : 0.0;
    r.t_statistics(j) = r.standard_errors(j) > 0
                            ? r.coefficients(j) / r.standard_errors(j)
                            : std::numeric_limits<double>::quiet_NaN();
  }
}

EstimationResult fit_ols_design(std::shared_ptr<const Design> design, std::string estimator) {
  const Design& d = *design;
  auto ls = linalg::least_squares(d.x, d.y, d.names);
  EstimationResult r;
  r.estimator = std::move(estimator);
  r.transform = d.transform;
  r.names = d.names;
  r.coefficients = ls.coefficients;
  r.fitted_transformed = d.x * r.coefficients;
  r.actual_transformed = d.y;
  r.residuals = d.y - r.fitted_transformed;
  const Index n = d.size();
  const Index k = d.x.cols();
  const double df = static_cast<double>(n - k - d.absorbed);
  if (!(df > 0)) throw EstimationError("no residual degrees of freedom");
  const double ssr = r.residuals.squaredNorm();
  r.sigma2 = ssr / df;
  r.covariance_conventional = r.sigma2 * ls.xtx_inverse;
  Eigen::MatrixXd meat = d.x.transpose() * (r.residuals.array().square().matrix().asDiagonal()) * d.x;
  r.covariance = linalg::symmetrize(static_cast<double>(n) / df * ls.xtx_inverse * meat * ls.xtx_inverse);
  r.sample_size = n;
  r.cross_sections = count_cross_sections(d.rows);
  r.periods = count_periods(d.rows);
  r.design = design;
  finish_inference(r);
  return r;
}

// Within-demeaned slope columns; throws when a slope never varies within an entity.
void check_within_variation(const AlignedSample& s) {
  if (s.x.cols() == 0) return;
  auto t = transforms::apply(s.rows, s.n_periods, s.x, TransformKind::within);
  for (Index c = 0; c < s.x.cols(); ++c) {
    const double scale = std::max(1.0, s.x.col(c).cwiseAbs().maxCoeff());
    if (t.values.col(c).cwiseAbs().maxCoeff() <= 1e-12 * scale) {
      throw EstimationError("unidentifiable slope: " + s.regressors[static_cast<std::size_t>(c)].label() +
                            " is constant within every entity");
    }
  }
}

}  // namespace

Index Design::cross_sections() const { return count_cross_sections(rows); }

std::shared_ptr<const AlignedSample> align_for(const PanelDataset& data, const ModelSpec& spec,
                                               const InstrumentSpec& instruments) {
  spec.validate();
  return std::make_shared<const AlignedSample>(
      align(data, spec.dependent, spec.regressor_terms(), instruments.static_terms()));
}

Design prepare(const ModelSpec& spec, std::shared_ptr<const AlignedSample> sample,
               const std::vector<double>& theta, DummyConvention dummies) {
  spec.validate();
  const AlignedSample& s = *sample;
  Design d;
  d.sample = sample;
  d.transform = spec.transform;
  d.n_slopes = s.x.cols();
  for (const auto& t : s.regressors) d.names.push_back(t.label());
  for (const auto& t : s.extra_terms) d.statics.labels.push_back(t.label());

  const Index n = s.size();
  const Index kx = s.x.cols();
  const Index ks = s.extra.cols();
  Eigen::MatrixXd joint(n, 1 + kx + ks);
  joint.col(0) = s.y;
  joint.middleCols(1, kx) = s.x;
  joint.rightCols(ks) = s.extra;

  TransformKind kind = spec.transform;
  if (kind == TransformKind::quasi_demean) {
    if (static_cast<Index>(theta.size()) < s.n_entities)
      throw InputError("quasi-demeaning needs one theta per entity");
    for (double th : theta)
      if (!(th >= 0 && th <= 1)) throw InputError("theta must lie in [0, 1]");
    d.theta = theta;
  }
  const TransformKind applied = kind == TransformKind::dummies ? TransformKind::none : kind;
  auto t = transforms::apply(s.rows, s.n_periods, joint, applied, theta);
  d.kept = t.kept;
  for (Index r : d.kept) d.rows.push_back(s.rows[static_cast<std::size_t>(r)]);
  const Index m = static_cast<Index>(d.kept.size());
  if (m == 0) throw EstimationError("no observations survive the " + to_string(kind) + " transform");

  if (kind == TransformKind::within) {
    d.absorbed = count_cross_sections(d.rows);
    if (spec.intercept) {
      // add back grand means so the intercept is ybar - xbar'b
      const Eigen::RowVectorXd grand = joint.colwise().mean();
      t.values.rowwise() += grand;
      d.absorbed -= 1;
    }
  }

  d.y = t.values.col(0);
  Eigen::MatrixXd x = t.values.middleCols(1, kx);
  d.statics.values = t.values.rightCols(ks);

  if (kind == TransformKind::dummies) {
    auto block = transforms::expand_dummies(
        d.rows, dummies == DummyConvention::full_set ? transforms::DummyMode::full_set
                                                    : transforms::DummyMode::drop_first);
    Eigen::MatrixXd wide(m, kx + block.columns.cols());
    wide << x, block.columns;
    x = std::move(wide);
    for (Index e : block.entities) d.names.push_back("D[" + s.entity_names[static_cast<std::size_t>(e)] + "]");
  }

  const bool level = kind == TransformKind::none || kind == TransformKind::within ||
                     kind == TransformKind::dummies || kind == TransformKind::quasi_demean;
  if (level) {
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);
    if (kind == TransformKind::quasi_demean)
      for (Index r = 0; r < m; ++r) ones(r) = 1.0 - theta[static_cast<std::size_t>(d.rows[static_cast<std::size_t>(r)].entity)];
    d.intercept = ones;
    const bool add_column = spec.intercept && !(kind == TransformKind::dummies && dummies == DummyConvention::full_set);
    if (add_column) {
      Eigen::MatrixXd wide(m, x.cols() + 1);
      wide << x, ones;
      x = std::move(wide);
      d.names.push_back("intercept");
    }
  }
  d.x = std::move(x);
  return d;
}

EstimationResult fit_pooled(const ModelSpec& spec, std::shared_ptr<const AlignedSample> sample) {
  ModelSpec pooled = spec;
  pooled.effects = Effects::none;
  pooled.transform = TransformKind::none;
  auto design = std::make_shared<const Design>(prepare(pooled, sample));
  auto r = fit_ols_design(design, "pooled-ols");
  r.r_squared_unweighted = 1.0 - r.residuals.squaredNorm() / centered_ss(design->y);
  r.r_squared_weighted = r.r_squared_unweighted;
  return r;
}

EstimationResult fit_fixed_effects(const ModelSpec& spec,
                                   std::shared_ptr<const AlignedSample> sample, FeMethod method,
                                   DummyConvention dummies) {
  if (sample->cross_sections() < 2) throw EstimationError("fixed effects need at least 2 entities");
  check_within_variation(*sample);
  ModelSpec fe = spec;
  fe.effects = Effects::fixed;
  fe.transform = method == FeMethod::within ? TransformKind::within : TransformKind::dummies;
  auto design = std::make_shared<const Design>(prepare(fe, sample, {}, dummies));
  auto r = fit_ols_design(design, method == FeMethod::within ? "fe-within" : "fe-lsdv");

  const AlignedSample& s = *sample;
  const Eigen::VectorXd slopes = r.coefficients.head(design->n_slopes);
  const Eigen::VectorXd level_resid = s.y - s.x * slopes;
  for (const auto& range : entity_ranges(s.rows)) {
    const double alpha = level_resid.segment(range.begin, range.end - range.begin).mean();
    r.entity_effects.emplace_back(s.rows[static_cast<std::size_t>(range.begin)].entity, alpha);
  }
  Eigen::VectorXd level_fit(s.size());
  {
    std::size_t e = 0;
    for (const auto& range : entity_ranges(s.rows)) {
      for (Index k = range.begin; k < range.end; ++k)
        level_fit(k) = s.x.row(k).dot(slopes) + r.entity_effects[e].second;
      ++e;
    }
  }
  r.r_squared_unweighted = 1.0 - (s.y - level_fit).squaredNorm() / centered_ss(s.y);
  r.r_squared_weighted = r.r_squared_unweighted;
  return r;
}

EstimationResult fit_random_effects(const ModelSpec& spec,
                                    std::shared_ptr<const AlignedSample> sample,
                                    const VarianceComponents& components) {
  if (components.sigma_e2 < 0) throw EstimationError("negative idiosyncratic variance");
  if (components.sigma_u2 < 0) throw EstimationError("negative cross-section variance");
  const AlignedSample& s = *sample;
  std::vector<double> theta(static_cast<std::size_t>(s.n_entities), 0.0);
  for (const auto& range : entity_ranges(s.rows))
    theta[static_cast<std::size_t>(s.rows[static_cast<std::size_t>(range.begin)].entity)] =
        components.theta(range.end - range.begin);
  ModelSpec re = spec;
  re.effects = Effects::random;
  re.transform = TransformKind::quasi_demean;
  auto design = std::make_shared<const Design>(prepare(re, sample, theta));
  auto r = fit_ols_design(design, "re-gls");
  r.components = components;
  r.r_squared_weighted = 1.0 - r.residuals.squaredNorm() / centered_ss(design->y);
  Eigen::VectorXd raw_fit = s.x * r.coefficients.head(design->n_slopes);
  if (spec.intercept) raw_fit.array() += r.coefficients(r.coefficients.size() - 1);
  r.r_squared_unweighted = 1.0 - (s.y - raw_fit).squaredNorm() / centered_ss(s.y);
  if (components.sigma_u2 == 0.0) r.notes.push_back("rho_u = 0; coefficients identical to pooled");
  return r;
}

InstrumentMatrix build_instruments(const InstrumentSpec& spec, const PanelDataset& data,
                                   const Design& design) {
  const Index offset = design.transform == TransformKind::orthogonal_deviation ? 1 : 0;
  return assemble(spec, data, design.rows, design.statics, design.intercept, design.x.cols(), offset);
}

namespace {

// sum_i Z_i' H Z_i
Eigen::MatrixXd one_step_weight_inverse(const Design& d, const Eigen::MatrixXd& z) {
  Eigen::MatrixXd s = z.transpose() * z;
  if (d.transform != TransformKind::first_difference) return s;
  s *= 2.0;
  for (std::size_t r = 1; r < d.rows.size(); ++r) {
    const auto& a = d.rows[r - 1];
    const auto& b = d.rows[r];
    if (a.entity == b.entity && b.period - a.period == 1) {
      const Eigen::VectorXd za = z.row(static_cast<Index>(r - 1)).transpose();
      const Eigen::VectorXd zb = z.row(static_cast<Index>(r)).transpose();
      s.noalias() -= za * zb.transpose() + zb * za.transpose();
    }
  }
  return s;
}

double trace_h(const Design& d) {
  return d.transform == TransformKind::first_difference ? 2.0 * static_cast<double>(d.size())
                                                        : static_cast<double>(d.size());
}

// Rows of G are Z_i'u_i per entity.
Eigen::MatrixXd entity_moments(const std::vector<Range>& ranges, const Eigen::MatrixXd& z,
                               const Eigen::VectorXd& u) {
  Eigen::MatrixXd g(static_cast<Index>(ranges.size()), z.cols());
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    const Index len = ranges[i].end - ranges[i].begin;
    g.row(static_cast<Index>(i)) = u.segment(ranges[i].begin, len).transpose() * z.middleRows(ranges[i].begin, len);
  }
  return g;
}

struct GmmStep {
  Eigen::VectorXd beta;
  Eigen::MatrixXd w;
};

GmmStep gmm_step(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::MatrixXd& s,
                 const char* what) {
  linalg::SpdSolver weight(s, std::string("weighting matrix (") + what +
                                  "); prune or collapse instruments");
  const Eigen::MatrixXd wa = weight.solve(a);
  const Eigen::MatrixXd m = a.transpose() * wa;
  linalg::SpdSolver normal(linalg::symmetrize(m), "X'Z W Z'X");
  GmmStep out;
  out.beta = normal.solve(wa.transpose() * b);
  out.w = weight.inverse();
  return out;
}

}  // namespace

EstimationResult fit_gmm(std::shared_ptr<const Design> design, const InstrumentMatrix& instruments,
                         const Weighting& weighting) {
  const Design& d = *design;
  const Eigen::MatrixXd& z = instruments.values;
  const Eigen::MatrixXd& x = d.x;
  const Eigen::VectorXd& y = d.y;
  if (z.rows() != x.rows()) throw InputError("instrument rows do not match the design");
  const Index k = x.cols();
  const Index l = z.cols();
  if (l < k) {
    throw EstimationError("order condition fails: " + std::to_string(l) + " instruments for " +
                          std::to_string(k) + " regressors");
  }
  if (weighting.max_iter < 2 && weighting.kind == WeightingKind::n_step)
    throw InputError("n-step weighting needs max_iter >= 2");

  const Eigen::MatrixXd a = z.transpose() * x;
  const Eigen::VectorXd b = z.transpose() * y;
  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(linalg::kPivotTolerance);
    if (qr.rank() < k) throw EstimationError("Z'X is rank deficient; regressors are not identified by the instruments");
  }
  const auto ranges = entity_ranges(d.rows);

  EstimationResult r;
  r.estimator = "gmm-" + to_string(weighting.kind);
  r.transform = d.transform;
  r.names = d.names;

  GmmStep step = gmm_step(a, b, one_step_weight_inverse(d, z), "one-step");
  r.trace.push_back(step.beta);
  int steps = 1;
  Eigen::VectorXd u1 = y - x * step.beta;
  GmmStep first = step;

  if (weighting.kind != WeightingKind::one_step) {
    const int limit = weighting.kind == WeightingKind::two_step ? 2 : weighting.max_iter;
    bool converged = false;
    while (steps < limit) {
      const Eigen::VectorXd u = y - x * step.beta;
      const Eigen::MatrixXd g = entity_moments(ranges, z, u);
      GmmStep next = gmm_step(a, b, g.transpose() * g, "iterated");
      ++steps;
      const double change = (next.beta - step.beta).cwiseAbs().maxCoeff();
      step = std::move(next);
      r.trace.push_back(step.beta);
      if (weighting.kind == WeightingKind::n_step && change < weighting.tol) {
        converged = true;
        break;
      }
    }
    if (weighting.kind == WeightingKind::n_step && !converged) {
      std::ostringstream msg;
      msg << "n-step GMM did not converge in " << weighting.max_iter
          << " iterations (tol " << weighting.tol << "); coefficient trace:";
      const std::size_t from = r.trace.size() > 5 ? r.trace.size() - 5 : 0;
      for (std::size_t i = from; i < r.trace.size(); ++i) {
        msg << "\n  step " << i + 1 << ":";
        for (Index j = 0; j < r.trace[i].size(); ++j) msg << ' ' << r.trace[i](j);
      }
      throw EstimationError(msg.str());
    }
  }

  r.coefficients = step.beta;
  r.weighting_matrix = step.w;
  r.steps_taken = steps;
  r.fitted_transformed = x * r.coefficients;
  r.actual_transformed = y;
  r.residuals = y - r.fitted_transformed;
  r.instruments = z;

  const Eigen::MatrixXd wa = step.w * a;
  const Eigen::MatrixXd m_inv = linalg::SpdSolver(linalg::symmetrize(a.transpose() * wa), "X'Z W Z'X").inverse();
  r.influence = m_inv * wa.transpose();
  const Eigen::MatrixXd g = entity_moments(ranges, z, r.residuals);
  r.covariance = linalg::symmetrize(r.influence * (g.transpose() * g) * r.influence.transpose());

  const Index n = d.size();
  r.sigma2 = r.residuals.squaredNorm() / static_cast<double>(std::max<Index>(1, n - k));
  if (steps == 1) {
    r.covariance_conventional = r.residuals.squaredNorm() / trace_h(d) * m_inv;
  } else {
    r.covariance_conventional = m_inv;
  }

  if (weighting.windmeijer) {
    if (weighting.kind != WeightingKind::two_step)
      throw InputError("the Windmeijer correction applies to two-step GMM only");
    // one-step robust variance
    const Eigen::MatrixXd wa1 = first.w * a;
    const Eigen::MatrixXd m1_inv = linalg::SpdSolver(linalg::symmetrize(a.transpose() * wa1), "X'Z W Z'X").inverse();
    const Eigen::MatrixXd infl1 = m1_inv * wa1.transpose();
    const Eigen::MatrixXd g1 = entity_moments(ranges, z, u1);
    const Eigen::MatrixXd v1 = infl1 * (g1.transpose() * g1) * infl1.transpose();
    const Eigen::MatrixXd& v2 = m_inv;
    const Eigen::VectorXd wzu2 = step.w * (z.transpose() * r.residuals);
    Eigen::MatrixXd dmat(k, k);
    for (Index c = 0; c < k; ++c) {
      Eigen::MatrixXd d_omega = Eigen::MatrixXd::Zero(l, l);
      for (std::size_t i = 0; i < ranges.size(); ++i) {
        const Index len = ranges[i].end - ranges[i].begin;
        const Eigen::VectorXd zx = z.middleRows(ranges[i].begin, len).transpose() * x.col(c).segment(ranges[i].begin, len);
        const Eigen::VectorXd gi = g1.row(static_cast<Index>(i)).transpose();
        d_omega.noalias() -= zx * gi.transpose() + gi * zx.transpose();
      }
      dmat.col(c) = -v2 * wa.transpose() * (d_omega * wzu2);
    }
    r.covariance = linalg::symmetrize(v2 + dmat * v2 + v2 * dmat.transpose() + dmat * v1 * dmat.transpose());
    r.notes.push_back("Windmeijer-corrected standard errors");
  }

  const double r2 = squared_correlation(r.actual_transformed, r.fitted_transformed);
  r.r_squared_weighted = r2;
  r.r_squared_unweighted = r2;
  r.sample_size = n;
  r.cross_sections = count_cross_sections(d.rows);
  r.periods = count_periods(d.rows);
  r.design = design;
  for (const auto& w : instruments.warnings) r.notes.push_back(w);
  finish_inference(r);
  return r;
}

void append_grand_mean_intercept(EstimationResult& r) {
  if (!r.design || r.design->transform != TransformKind::within)
    throw InputError("grand-mean intercept applies to within-transformed fits");
  if (r.index_of("intercept") >= 0) throw InputError("fit already carries an intercept");
  const AlignedSample& s = *r.design->sample;
  const Index k = r.coefficients.size();
  Eigen::VectorXd xbar = Eigen::VectorXd::Zero(k);
  double ybar = 0;
  for (Index row : r.design->kept) {
    xbar.head(r.design->n_slopes) += s.x.row(row).transpose();
    ybar += s.y(row);
  }
  const double m = static_cast<double>(r.design->kept.size());
  xbar /= m;
  ybar /= m;

  // c = ybar - xbar'b, so dc/db = -xbar
  Eigen::MatrixXd jac(k + 1, k);
  jac << Eigen::MatrixXd::Identity(k, k), -xbar.transpose();
  auto widen = [&](const Eigen::MatrixXd& v) { return linalg::symmetrize(jac * v * jac.transpose()); };
  r.covariance = widen(r.covariance);
  r.covariance_conventional = widen(r.covariance_conventional);
  Eigen::VectorXd b(k + 1);
  b << r.coefficients, ybar - xbar.dot(r.coefficients);
  r.coefficients = b;
  r.names.push_back("intercept");

  r.fitted_transformed.array() += ybar;
  r.actual_transformed.array() += ybar;
  const Index n = r.instruments.rows();
  const Index l = r.instruments.cols();
  Eigen::MatrixXd z(n, l + 1);
  z << r.instruments, Eigen::VectorXd::Ones(n);
  r.instruments = z;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(l + 1, l + 1);
  w.topLeftCorner(l, l) = r.weighting_matrix;
  r.weighting_matrix = w;
  Eigen::MatrixXd infl = Eigen::MatrixXd::Zero(k + 1, l + 1);
  infl.topLeftCorner(k, l) = r.influence;
  infl.bottomLeftCorner(1, l) = -xbar.transpose() * r.influence;
  r.influence = infl;
  for (auto& beta : r.trace) {
    Eigen::VectorXd t(k + 1);
    t << beta, ybar - xbar.dot(beta);
    beta = t;
  }
  finish_inference(r);
}

std::vector<FitRow> fitted_and_levels(const EstimationResult& result) {
  if (!result.design) throw InputError("result carries no design");
  const Design& d = *result.design;
  const AlignedSample& s = *d.sample;
  std::vector<FitRow> out(static_cast<std::size_t>(d.size()));
  for (Index r = 0; r < d.size(); ++r) {
    auto& row = out[static_cast<std::size_t>(r)];
    row.entity = d.rows[static_cast<std::size_t>(r)].entity;
    row.period = s.first_period + static_cast<int>(d.rows[static_cast<std::size_t>(r)].period);
    row.actual = result.actual_transformed(r);
    row.fitted = result.fitted_transformed(r);
    row.actual_level = s.y(d.kept[static_cast<std::size_t>(r)]);
  }

  const Eigen::VectorXd slopes = result.coefficients.head(d.n_slopes);
  const Index icpt = result.index_of("intercept");
  switch (d.transform) {
    case TransformKind::first_difference:
    case TransformKind::orthogonal_deviation: {
      for (const auto& range : entity_ranges(d.rows)) {
        const Index e = d.rows[static_cast<std::size_t>(range.begin)].entity;
        TimeSeries original = transforms::entity_series(s.rows, s.n_periods, s.y, e);
        TimeSeries fitted(static_cast<std::size_t>(s.n_periods));
        for (Index r = range.begin; r < range.end; ++r)
          fitted[static_cast<std::size_t>(d.rows[static_cast<std::size_t>(r)].period)] = result.fitted_transformed(r);
        TimeSeries level = transforms::reconstruct_levels(fitted, original, d.transform);
        for (Index r = range.begin; r < range.end; ++r)
          out[static_cast<std::size_t>(r)].fitted_level = level[static_cast<std::size_t>(d.rows[static_cast<std::size_t>(r)].period)];
      }
      break;
    }
    case TransformKind::dummies:
      for (Index r = 0; r < d.size(); ++r) out[static_cast<std::size_t>(r)].fitted_level = result.fitted_transformed(r);
      break;
    case TransformKind::within: {
      std::vector<double> alpha(static_cast<std::size_t>(s.n_entities), 0.0);
      for (const auto& [e, a] : result.entity_effects) alpha[static_cast<std::size_t>(e)] = a;
      if (result.entity_effects.empty()) {
        // instrumented within fit: effects from level residual means
        const Eigen::VectorXd resid = s.y - s.x * slopes;
        std::vector<double> sum(alpha.size(), 0.0), cnt(alpha.size(), 0.0);
        for (Index r = 0; r < s.size(); ++r) {
          sum[static_cast<std::size_t>(s.rows[static_cast<std::size_t>(r)].entity)] += resid(r);
          cnt[static_cast<std::size_t>(s.rows[static_cast<std::size_t>(r)].entity)] += 1;
        }
        for (std::size_t e = 0; e < alpha.size(); ++e) alpha[e] = cnt[e] > 0 ? sum[e] / cnt[e] : 0.0;
      }
      for (Index r = 0; r < d.size(); ++r) {
        const Index src = d.kept[static_cast<std::size_t>(r)];
        out[static_cast<std::size_t>(r)].fitted_level =
            s.x.row(src).dot(slopes) + alpha[static_cast<std::size_t>(d.rows[static_cast<std::size_t>(r)].entity)];
      }
      break;
    }
    case TransformKind::none:
    case TransformKind::quasi_demean:
      for (Index r = 0; r < d.size(); ++r) {
        const Index src = d.kept[static_cast<std::size_t>(r)];
        double v = s.x.row(src).dot(slopes);
        if (icpt >= 0) v += result.coefficients(icpt);
        out[static_cast<std::size_t>(r)].fitted_level = v;
      }
      break;
  }
  return out;
}

std::string fit_table_csv(const std::vector<FitRow>& rows,
                          const std::vector<std::string>& entity_names) {
  std::ostringstream out;
  out << "entity,period,actual,fitted,actual_level,fitted_level\n";
  for (const auto& r : rows) {
    const std::string name = r.entity < static_cast<Index>(entity_names.size())
                                 ? entity_names[static_cast<std::size_t>(r.entity)]
                                 : std::to_string(r.entity);
    out << csv::quote_if_needed(name) << ',' << r.period << ',' << csv::format_double(r.actual) << ','
        << csv::format_double(r.fitted) << ','
        << (r.actual_level ? csv::format_double(*r.actual_level) : "NA") << ','
        << (r.fitted_level ? csv::format_double(*r.fitted_level) : "NA") << '\n';
  }
  return out.str();
}

}  // namespace dpanel
