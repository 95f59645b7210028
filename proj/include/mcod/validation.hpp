#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "mcod/errors.hpp"
#include "mcod/pipeline.hpp"
#include "mcod/stats.hpp"

namespace mcod {

enum class Scenario { LeaveOutStudies, LeaveOutDeveloped, LeaveOut20Percent };

inline std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::LeaveOutStudies: return "leave-out-studies";
    case Scenario::LeaveOutDeveloped: return "leave-out-developed";
    default: return "leave-out-20-percent";
  }
}

inline Scenario scenario_from_string(const std::string& s) {
  if (s == "leave-out-studies") return Scenario::LeaveOutStudies;
  if (s == "leave-out-developed") return Scenario::LeaveOutDeveloped;
  if (s == "leave-out-20-percent") return Scenario::LeaveOut20Percent;
  throw bad_schema("scenario", "unknown scenario '" + s + "'");
}

struct ValidationConfig {
  Scenario scenario = Scenario::LeaveOutStudies;
  std::uint64_t seed = 1;
  // Model-region label whose countries are dropped by leave-out-developed.
  std::string developed_region = "Developed regions";
  double leave_out_fraction = 0.2;
};

struct ValidationReport {
  Scenario scenario = Scenario::LeaveOutStudies;
  std::vector<std::string> sdg_regions;
  Eigen::MatrixXd mad;  // n_sdg_region x 7, mean absolute difference
  int n_excluded = 0;
};

// Returns the retained observations for a scenario. The random exclusion is
// stratified by quality type with a seeded shuffle, so a fixed seed always
// removes the same observations.
inline std::vector<ObservationRecord> apply_exclusion(
    const InputBundle& in, const std::vector<QualityProfile>& profiles,
    const ValidationConfig& cfg) {
  const auto& obs = in.observations;
  std::vector<bool> drop(obs.size(), false);
  switch (cfg.scenario) {
    case Scenario::LeaveOutStudies:
      for (size_t i = 0; i < obs.size(); ++i)
        drop[i] = obs[i].source_kind == SourceKind::Study;
      break;
    case Scenario::LeaveOutDeveloped: {
      int dev = -1;
      for (size_t r = 0; r < in.regions.model_regions.size(); ++r)
        if (in.regions.model_regions[r] == cfg.developed_region)
          dev = static_cast<int>(r);
      for (size_t i = 0; i < obs.size(); ++i) {
        const int c = in.regions.require_country(obs[i].country);
        drop[i] = dev >= 0 && in.regions.model_region_of_country[c] == dev;
      }
      break;
    }
    case Scenario::LeaveOut20Percent: {
      for (int type = 1; type <= 4; ++type) {
        std::vector<size_t> idx;
        for (size_t i = 0; i < obs.size(); ++i)
          if (profiles[i].quality_type == type) idx.push_back(i);
        std::mt19937_64 rng(stream_seed(cfg.seed, 0x76616c, type));
        std::shuffle(idx.begin(), idx.end(), rng);
        const size_t n_drop = static_cast<size_t>(
            std::llround(cfg.leave_out_fraction * idx.size()));
        for (size_t k = 0; k < n_drop; ++k) drop[idx[k]] = true;
      }
      break;
    }
  }
  std::vector<ObservationRecord> kept;
  for (size_t i = 0; i < obs.size(); ++i)
    if (!drop[i]) kept.push_back(obs[i]);
  if (kept.empty())
    throw empty_after_exclusion(std::string(to_string(cfg.scenario)));
  return kept;
}

// Posterior-median coverage-weighted country proportions, C x 7.
inline Eigen::MatrixXd country_median_proportions(const InputBundle& in,
                                                  const SamplerConfig& cfg,
                                                  std::uint64_t pstar_seed) {
  PreparedInputs prepared = prepare_inputs(in);
  FitResult fit = fit_model(build_main_model_data(prepared, in.regions), cfg);
  std::vector<Eigen::MatrixXd> p_star =
      country_p_star(fit, in.regions, prepared.weights, pstar_seed);
  Eigen::MatrixXd out(in.regions.countries.size(), kNumMainCauses);
  for (size_t c = 0; c < in.regions.countries.size(); ++c) {
    std::vector<SummaryRow> s = summarize(p_star[c]);
    for (int j = 0; j < kNumMainCauses; ++j) out(c, j) = s[j].median;
  }
  return out;
}

// Refits with the scenario's exclusion and reports the mean absolute
// difference of posterior-median country proportions, averaged over the
// countries of each SDG region.
inline ValidationReport run_validation(const InputBundle& in,
                                       const SamplerConfig& fit_cfg,
                                       const ValidationConfig& vcfg) {
  std::vector<QualityProfile> profiles =
      quality_profiles(in.observations, in.envelopes);
  InputBundle reduced = in;
  reduced.observations = apply_exclusion(in, profiles, vcfg);

  const std::uint64_t pstar_seed = stream_seed(fit_cfg.seed, 0x7073);
  Eigen::MatrixXd full = country_median_proportions(in, fit_cfg, pstar_seed);
  Eigen::MatrixXd red = country_median_proportions(reduced, fit_cfg, pstar_seed);

  ValidationReport report;
  report.scenario = vcfg.scenario;
  report.sdg_regions = in.regions.sdg_regions;
  report.n_excluded =
      static_cast<int>(in.observations.size() - reduced.observations.size());
  const int H = static_cast<int>(in.regions.sdg_regions.size());
  report.mad = Eigen::MatrixXd::Zero(H, kNumMainCauses);
  Eigen::VectorXd n_in_region = Eigen::VectorXd::Zero(H);
  for (size_t c = 0; c < in.regions.countries.size(); ++c) {
    const int h = in.regions.sdg_region_of_country[c];
    report.mad.row(h) += (full.row(c) - red.row(c)).cwiseAbs();
    n_in_region(h) += 1;
  }
  for (int h = 0; h < H; ++h)
    if (n_in_region(h) > 0) report.mad.row(h) /= n_in_region(h);
  return report;
}

}  // namespace mcod
