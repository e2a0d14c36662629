#include "dpanel/pipeline.hpp"

#include "csv.hpp"
#include "dpanel/error.hpp"

namespace dpanel {

SpecKind parse_spec_kind(std::string_view name) {
  const std::string n = csv::to_lower(csv::trim(name));
  if (n == "pooled") return SpecKind::pooled;
  if (n == "fe") return SpecKind::fe;
  if (n == "re") return SpecKind::re;
  if (n == "fd") return SpecKind::fd;
  if (n == "od") return SpecKind::od;
  throw InputError("unknown spec '" + std::string(name) + "' (expected pooled, fe, re, fd or od)");
}

std::string to_string(SpecKind kind) {
  switch (kind) {
    case SpecKind::pooled: return "pooled";
    case SpecKind::fe: return "fe";
    case SpecKind::re: return "re";
    case SpecKind::fd: return "fd";
    case SpecKind::od: return "od";
  }
  return "unknown";
}

void apply_kind(ModelSpec& spec, SpecKind kind) {
  switch (kind) {
    case SpecKind::pooled:
      spec.effects = Effects::none;
      spec.transform = TransformKind::none;
      break;
    case SpecKind::fe:
      spec.effects = Effects::fixed;
      spec.transform = TransformKind::within;
      break;
    case SpecKind::re:
      spec.effects = Effects::random;
      spec.transform = TransformKind::quasi_demean;
      break;
    case SpecKind::fd:
      spec.effects = Effects::none;
      spec.transform = TransformKind::first_difference;
      spec.intercept = false;
      break;
    case SpecKind::od:
      spec.effects = Effects::none;
      spec.transform = TransformKind::orthogonal_deviation;
      spec.intercept = false;
      break;
  }
}

namespace {

std::vector<double> entity_theta(const AlignedSample& s, const VarianceComponents& vc) {
  std::vector<double> theta(static_cast<std::size_t>(s.n_entities), 0.0);
  std::size_t b = 0;
  while (b < s.rows.size()) {
    std::size_t e = b;
    while (e < s.rows.size() && s.rows[e].entity == s.rows[b].entity) ++e;
    theta[static_cast<std::size_t>(s.rows[b].entity)] = vc.theta(static_cast<Index>(e - b));
    b = e;
  }
  return theta;
}

}  // namespace

Estimate estimate(const PanelDataset& data, const EstimateOptions& options) {
  const ModelSpec& spec = options.spec;
  spec.validate();
  const bool differenced = spec.transform == TransformKind::first_difference ||
                           spec.transform == TransformKind::orthogonal_deviation;
  if (differenced && options.instruments.empty())
    throw InputError(to_string(spec.transform) + " estimation needs an instrument specification");

  auto sample = align_for(data, spec, options.instruments);
  Estimate out;

  std::optional<VarianceComponents> vc;
  if (spec.effects == Effects::random) {
    vc = swamy_arora(spec, *sample);
    out.diagnostics.variance_components = vc;
  }

  if (options.instruments.empty()) {
    switch (spec.effects) {
      case Effects::none: out.result = fit_pooled(spec, sample); break;
      case Effects::fixed:
        out.result = fit_fixed_effects(spec, sample,
                                       spec.transform == TransformKind::dummies ? FeMethod::lsdv
                                                                                : options.fe_method);
        break;
      case Effects::random: out.result = fit_random_effects(spec, sample, *vc); break;
    }
  } else {
    std::vector<double> theta;
    if (vc) theta = entity_theta(*sample, *vc);
    // within + constant instrument: intercept concentrated out as the grand mean
    const bool concentrate = spec.transform == TransformKind::within && spec.intercept &&
                             options.instruments.intercept;
    ModelSpec gmm_spec = spec;
    InstrumentSpec instruments = options.instruments;
    if (concentrate) {
      gmm_spec.intercept = false;
      instruments.intercept = false;
    }
    auto design = std::make_shared<const Design>(prepare(gmm_spec, sample, theta));
    const InstrumentMatrix z = build_instruments(instruments, data, *design);
    out.result = fit_gmm(design, z, options.weighting);
    if (concentrate) append_grand_mean_intercept(out.result);
    if (vc) {
      out.result.components = vc;
      if (vc->sigma_u2 == 0.0) out.result.notes.push_back("rho_u = 0; coefficients identical to pooled");
    }
    out.diagnostics.j = j_test(out.result);
    if (differenced) {
      for (int m = 1; m <= options.max_ar_order; ++m) {
        try {
          out.diagnostics.ar_tests.push_back(ab_serial_correlation(out.result, m));
        } catch (const EstimationError& e) {
          out.result.notes.push_back(e.what());
        }
      }
    }
  }

  if (spec.effects == Effects::random && options.hausman) {
    try {
      ModelSpec fe = spec;
      fe.effects = Effects::fixed;
      fe.transform = TransformKind::within;
      auto plain_sample = align_for(data, fe);
      const auto fe_fit = fit_fixed_effects(fe, plain_sample);
      const auto re_fit = options.instruments.empty()
                              ? out.result
                              : fit_random_effects(spec, plain_sample, swamy_arora(spec, *plain_sample));
      out.diagnostics.hausman = hausman(fe_fit, re_fit);
    } catch (const EstimationError& e) {
      out.result.notes.push_back(std::string("Hausman test unavailable: ") + e.what());
    }
  }
  return out;
}

}  // namespace dpanel
