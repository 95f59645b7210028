#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "mcod/causes.hpp"
#include "mcod/diagnostics.hpp"
#include "mcod/errors.hpp"
#include "mcod/ingest.hpp"
#include "mcod/model.hpp"
#include "mcod/posterior.hpp"
#include "mcod/quality.hpp"
#include "mcod/records.hpp"
#include "mcod/sampler.hpp"

namespace mcod {

struct InputBundle {
  std::vector<ObservationRecord> observations;
  EnvelopeSet envelopes;
  RegionTable regions;
};

struct PreparedInputs {
  std::vector<ObservationRecord> observations;  // zero-resolution applied
  std::vector<QualityProfile> profiles;         // aligned with observations
  std::vector<CountryWeights> weights;          // aligned with regions.countries
};

// Quality typing first (it needs the reported zeros intact for the usability
// series), then the zero-vs-missing resolution which depends on the types,
// then the coverage weights on the resolved records.
inline PreparedInputs prepare_inputs(const InputBundle& in) {
  if (in.observations.empty())
    throw empty_after_exclusion("no observations to prepare");
  PreparedInputs out;
  out.profiles = quality_profiles(in.observations, in.envelopes);
  out.observations.reserve(in.observations.size());
  for (size_t i = 0; i < in.observations.size(); ++i) {
    const auto& obs = in.observations[i];
    std::vector<ObservationRecord> history;
    for (const auto& h : in.observations)
      if (h.country == obs.country && h.observation_id != obs.observation_id)
        history.push_back(h);
    out.observations.push_back(resolve_zero_vs_missing(
        obs, history, in.envelopes.for_observation(obs),
        out.profiles[i].quality_type));
  }
  out.weights =
      country_weights(out.observations, in.envelopes, in.regions.countries);
  return out;
}

// 7-category model over the main causes. `rows` (optional) receives, per
// model observation, the index into prepared.observations.
inline ModelData build_main_model_data(const PreparedInputs& prepared,
                                       const RegionTable& regions,
                                       std::vector<int>* rows = nullptr) {
  ModelData d;
  d.n_cat = kNumMainCauses;
  d.n_region = static_cast<int>(regions.model_regions.size());
  d.n_country = static_cast<int>(regions.countries.size());
  d.quality_terms = true;
  d.region_of_country = regions.model_region_of_country;

  std::vector<Eigen::RowVectorXd> count_rows;
  for (size_t i = 0; i < prepared.observations.size(); ++i) {
    const auto& obs = prepared.observations[i];
    bool any = false;
    for (int j = 0; j < kNumMainCauses; ++j)
      if (!obs.missing[j]) any = true;
    if (!any) continue;
    Eigen::RowVectorXd row(kNumMainCauses);
    std::vector<bool> miss(kNumMainCauses);
    for (int j = 0; j < kNumMainCauses; ++j) {
      row(j) = obs.missing[j] ? 0.0 : obs.counts[j];
      miss[j] = obs.missing[j];
    }
    count_rows.push_back(row);
    d.missing.push_back(std::move(miss));
    d.country_of_obs.push_back(regions.require_country(obs.country));
    d.type_of_obs.push_back(prepared.profiles[i].quality_type);
    if (rows) rows->push_back(static_cast<int>(i));
  }
  if (count_rows.empty())
    throw empty_after_exclusion("no usable observations for the main model");
  d.counts.resize(static_cast<int>(count_rows.size()), kNumMainCauses);
  for (size_t i = 0; i < count_rows.size(); ++i) d.counts.row(i) = count_rows[i];
  return d;
}

// Subcategory model for one main cause (3 or 4 categories, last = reference).
// Only observations with at least one reported subcategory enter; deaths with
// unknown subcategory never appear in sub_counts and so are excluded.
inline ModelData build_sub_model_data(const PreparedInputs& prepared,
                                      const RegionTable& regions,
                                      MainCause cause,
                                      std::vector<int>* rows = nullptr) {
  if (!has_sub_causes(cause))
    throw domain_error("cause has no subcategories");
  auto [a, b] = sub_range(cause);
  const int n_cat = b - a;
  ModelData d;
  d.n_cat = n_cat;
  d.n_region = static_cast<int>(regions.model_regions.size());
  d.n_country = static_cast<int>(regions.countries.size());
  d.quality_terms = false;
  d.region_of_country = regions.model_region_of_country;

  std::vector<Eigen::RowVectorXd> count_rows;
  for (size_t i = 0; i < prepared.observations.size(); ++i) {
    const auto& obs = prepared.observations[i];
    bool any = false;
    for (int s = a; s < b; ++s)
      if (!obs.sub_missing[s]) any = true;
    if (!any) continue;
    Eigen::RowVectorXd row(n_cat);
    std::vector<bool> miss(n_cat);
    for (int s = a; s < b; ++s) {
      row(s - a) = obs.sub_missing[s] ? 0.0 : obs.sub_counts[s];
      miss[s - a] = obs.sub_missing[s];
    }
    count_rows.push_back(row);
    d.missing.push_back(std::move(miss));
    d.country_of_obs.push_back(regions.require_country(obs.country));
    d.type_of_obs.push_back(1);
    if (rows) rows->push_back(static_cast<int>(i));
  }
  d.counts.resize(static_cast<int>(count_rows.size()), n_cat);
  for (size_t i = 0; i < count_rows.size(); ++i) d.counts.row(i) = count_rows[i];
  return d;
}

struct FitResult {
  ModelData data;
  PosteriorDraws draws;
  Diagnostics diagnostics;
  std::vector<DrawView> views;  // one per stacked post-warmup draw
};

inline FitResult fit_model(ModelData data, const SamplerConfig& cfg) {
  Model model(std::move(data));
  auto target = [&model](const Eigen::VectorXd& th) {
    return model.log_posterior_and_gradient(th);
  };
  // Start phi at its conditional mode under a uniform distribution; with
  // large counts the posterior sits many log-units from the origin and
  // purely random inits stall warmup.
  SamplerConfig run_cfg = cfg;
  if (run_cfg.init.size() == 0) {
    const ParameterLayout& l = model.layout();
    const ModelData& d = model.data();
    run_cfg.init = Eigen::VectorXd::Zero(l.size);
    for (int i = 0; i < l.n_obs; ++i) {
      int n_seen = 0;
      for (int j = 0; j < d.n_cat; ++j)
        if (!d.missing[i][j]) ++n_seen;
      const double total = d.counts.row(i).sum();
      run_cfg.init(l.phi_off + i) =
          std::log(std::max(total, 1.0) / std::max(n_seen, 1));
    }
  }
  FitResult r;
  r.draws = sample(target, model.dim(), run_cfg, model.layout().names());
  r.diagnostics = diagnose(r.draws);
  r.views = extract_draws(model, r.draws.flat());
  r.data = model.data();
  return r;
}

// Main model plus the three subcategory models.
struct PipelineFit {
  FitResult main;
  FitResult hem, sep, dir;
  bool all_pass() const {
    return main.diagnostics.pass && hem.diagnostics.pass &&
           sep.diagnostics.pass && dir.diagnostics.pass;
  }
};

inline PipelineFit fit_all(const PreparedInputs& prepared,
                           const RegionTable& regions,
                           const SamplerConfig& cfg) {
  PipelineFit out;
  out.main = fit_model(build_main_model_data(prepared, regions), cfg);
  SamplerConfig sub_cfg = cfg;
  out.hem = fit_model(
      build_sub_model_data(prepared, regions, MainCause::HEM),
      (sub_cfg.seed = stream_seed(cfg.seed, 0x7375, 0), sub_cfg));
  out.sep = fit_model(
      build_sub_model_data(prepared, regions, MainCause::SEP),
      (sub_cfg.seed = stream_seed(cfg.seed, 0x7375, 1), sub_cfg));
  out.dir = fit_model(
      build_sub_model_data(prepared, regions, MainCause::DIR),
      (sub_cfg.seed = stream_seed(cfg.seed, 0x7375, 2), sub_cfg));
  return out;
}

// Coverage-weighted p* for every country in the region table; one draws x 7
// matrix per country, aligned with regions.countries.
inline std::vector<Eigen::MatrixXd> country_p_star(
    const FitResult& fit, const RegionTable& regions,
    const std::vector<CountryWeights>& weights, std::uint64_t seed) {
  std::vector<Eigen::MatrixXd> out(regions.countries.size());
  for (size_t c = 0; c < regions.countries.size(); ++c)
    out[c] = true_country_proportions(fit.views, static_cast<int>(c),
                                      regions.model_region_of_country[c],
                                      weights[c].w, seed);
  return out;
}

struct EstimateSet {
  std::vector<CountryYearDistribution> country_years;
  std::vector<int> sdg_of_dist;  // aligned with country_years
  double sigma_hiv = 0;
};

// HIV-inclusive distributions for every (country, year) in the period. The
// single fitted p* applies to every year; the envelopes carry time variation.
inline EstimateSet build_country_year_estimates(
    const std::vector<Eigen::MatrixXd>& p_star, const RegionTable& regions,
    const EnvelopeSet& envs, double sigma_hiv, int period_start, int period_end,
    std::uint64_t seed) {
  EstimateSet out;
  out.sigma_hiv = sigma_hiv;
  for (size_t c = 0; c < regions.countries.size(); ++c) {
    for (int y = period_start; y <= period_end; ++y) {
      if (!envs.contains(regions.countries[c], y))
        throw missing_country_year(regions.countries[c] + "/" +
                                   std::to_string(y));
      const EnvelopeEstimate& env = envs.at(regions.countries[c], y);
      out.country_years.push_back(incorporate_hiv(
          p_star[c], env, sigma_hiv, stream_seed(seed, 0x686976, c)));
      out.sdg_of_dist.push_back(regions.sdg_region_of_country[c]);
    }
  }
  return out;
}

}  // namespace mcod
