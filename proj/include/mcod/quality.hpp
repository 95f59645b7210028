#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "mcod/causes.hpp"
#include "mcod/errors.hpp"
#include "mcod/records.hpp"

namespace mcod {

struct QualityProfile {
  std::string observation_id;
  double usability = 0.0;  // nu_i in [0,1]
  int quality_type = 4;    // 1..4
  double coverage = 0.0;   // d_i / d_ring, clamped to [0,1]
};

struct CountryWeights {
  std::string country;
  double w = 0.0;                              // coverage weight
  std::array<double, kNumMainCauses> z{};      // subcause information weight
};

// Usability index: coverage of the envelope discounted by ill-defined deaths,
// and additionally by contributory-cause misclassification once there are
// more than 5 deaths.
inline double usability_index(const ObservationRecord& obs,
                              const EnvelopeEstimate& env) {
  if (env.d_ring <= 0.0)
    throw missing_envelope(obs.country, obs.year_start);
  const double d = obs.total();
  double nu = (d / env.d_ring) * (1.0 - obs.ill_defined_prop);
  if (d > 5.0) nu *= (1.0 - obs.contributory_prop);
  return std::clamp(nu, 0.0, 1.0);
}

// Data quality types: grey literature is type 1, studies type 4. CRVS is
// typed from its usability, requiring the observation year to sit inside a
// run of >= 3 consecutive observed years all with nu > 0.60.
//   type 2:  nu > 0.85 and in such a run
//   type 3:  0.65 < nu <= 0.85 and in such a run
//   type 4:  otherwise
// `usability_series` maps year -> nu for the country's CRVS observations.
inline int assign_type(const ObservationRecord& obs,
                       const std::map<int, double>& usability_series) {
  if (obs.type_override) return std::clamp(*obs.type_override, 1, 4);
  if (obs.source_kind == SourceKind::GreyLiterature) return 1;
  if (obs.source_kind == SourceKind::Study) return 4;

  auto nu_it = usability_series.find(obs.year_start);
  if (nu_it == usability_series.end()) return 4;
  const double nu = nu_it->second;

  auto above60 = [&](int year) {
    auto it = usability_series.find(year);
    return it != usability_series.end() && it->second > 0.60;
  };
  bool in_run = false;
  for (int start = obs.year_start - 2; start <= obs.year_start; ++start) {
    if (above60(start) && above60(start + 1) && above60(start + 2)) {
      in_run = true;
      break;
    }
  }

  if (nu > 0.85 && in_run) return 2;
  if (nu > 0.65 && nu <= 0.85 && in_run) return 3;
  return 4;
}

inline std::vector<QualityProfile> quality_profiles(
    const std::vector<ObservationRecord>& obs_list, const EnvelopeSet& envs) {
  // Per-country CRVS usability series, needed for the consecutive-run rule.
  std::map<std::string, std::map<int, double>> crvs_series;
  std::vector<double> nus(obs_list.size());
  for (size_t i = 0; i < obs_list.size(); ++i) {
    const auto& obs = obs_list[i];
    EnvelopeEstimate env = envs.for_observation(obs);
    nus[i] = usability_index(obs, env);
    if (obs.source_kind == SourceKind::CRVS)
      crvs_series[obs.country][obs.year_start] = nus[i];
  }
  std::vector<QualityProfile> out;
  out.reserve(obs_list.size());
  for (size_t i = 0; i < obs_list.size(); ++i) {
    const auto& obs = obs_list[i];
    EnvelopeEstimate env = envs.for_observation(obs);
    QualityProfile p;
    p.observation_id = obs.observation_id;
    p.usability = nus[i];
    p.quality_type = assign_type(obs, crvs_series[obs.country]);
    p.coverage =
        env.d_ring > 0 ? std::clamp(obs.total() / env.d_ring, 0.0, 1.0) : 0.0;
    out.push_back(p);
  }
  return out;
}

// w(c): maximum envelope coverage among the country's observations, clamped
// to [0,1]; countries without observations get w = 0 (pure region prediction).
// z(c,j): maximum proportion of cause-j deaths with subcategory information.
inline std::vector<CountryWeights> country_weights(
    const std::vector<ObservationRecord>& obs_list, const EnvelopeSet& envs,
    const std::vector<std::string>& countries) {
  std::vector<CountryWeights> out;
  out.reserve(countries.size());
  for (const auto& country : countries) {
    CountryWeights cw;
    cw.country = country;
    for (const auto& obs : obs_list) {
      if (obs.country != country) continue;
      EnvelopeEstimate env = envs.for_observation(obs);
      if (env.d_ring > 0)
        cw.w = std::max(cw.w, std::clamp(obs.total() / env.d_ring, 0.0, 1.0));
      for (int m = 0; m < kNumMainCauses; ++m) {
        MainCause cause = static_cast<MainCause>(m);
        if (!has_sub_causes(cause)) continue;
        if (obs.missing[m] || obs.counts[m] <= 0.0) continue;
        auto [a, b] = sub_range(cause);
        double with_info = 0.0;
        for (int s = a; s < b; ++s)
          if (!obs.sub_missing[s]) with_info += obs.sub_counts[s];
        cw.z[m] = std::max(cw.z[m],
                           std::clamp(with_info / obs.counts[m], 0.0, 1.0));
      }
    }
    out.push_back(cw);
  }
  return out;
}

}  // namespace mcod
