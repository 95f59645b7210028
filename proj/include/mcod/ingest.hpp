#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcod/causes.hpp"
#include "mcod/csv.hpp"
#include "mcod/errors.hpp"
#include "mcod/records.hpp"

namespace mcod {

// Maps ICD-10 codes (plus the handful of free-text labels used in reporting,
// e.g. "Hemorrhage NOS") to a main cause and an optional subcategory.
// Codes with a known main cause but unknown timing/subtype map to the
// *_unknown sentinels.
class CauseMap {
 public:
  struct Entry {
    MainCause main;
    std::optional<SubCause> sub;
  };

  void add(const std::string& code, MainCause main, std::optional<SubCause> sub) {
    if (entries_.count(code)) throw duplicate_code(code);
    entries_[code] = Entry{main, sub};
  }

  const Entry* find(const std::string& code) const {
    auto it = entries_.find(code);
    return it == entries_.end() ? nullptr : &it->second;
  }

  size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, Entry> entries_;
};

inline CauseMap load_cause_map(const std::string& path) {
  CsvTable t = read_csv(path);
  int c_code = t.require("icd10");
  int c_main = t.require("main");
  int c_sub = t.require("sub");
  CauseMap map;
  for (const auto& row : t.rows) {
    auto main = main_cause_from_string(row[c_main]);
    if (!main) throw unknown_category_label(row[c_code] + "," + row[c_main]);
    std::optional<SubCause> sub;
    if (!row[c_sub].empty()) {
      sub = sub_cause_from_string(row[c_sub]);
      if (!sub || main_of(*sub) != *main)
        throw unknown_category_label(row[c_code] + "," + row[c_main] + "," +
                                     row[c_sub]);
    }
    map.add(row[c_code], *main, sub);
  }
  return map;
}

struct ClassifiedCounts {
  std::array<double, kNumMainCauses> main{};
  std::array<double, kNumSubCauses> sub{};
  struct Exclusion {
    std::string code;
    double count;
    std::string reason;
  };
  std::vector<Exclusion> excluded;
};

// Buckets raw (code, count) pairs by main and subcategory. O98.7 (HIV) and
// unmapped codes go to `excluded`; deaths are conserved across buckets and
// exclusions. Sentinel-mapped deaths count toward the main bucket only.
inline ClassifiedCounts classify_counts(
    const std::vector<std::pair<std::string, double>>& raw, const CauseMap& map) {
  ClassifiedCounts out;
  for (const auto& [code, count] : raw) {
    if (code == "O98.7") {
      out.excluded.push_back({code, count, "HIV code"});
      continue;
    }
    const CauseMap::Entry* e = map.find(code);
    if (!e) {
      out.excluded.push_back({code, count, "unmapped"});
      continue;
    }
    out.main[static_cast<int>(e->main)] += count;
    if (e->sub && !is_sentinel(*e->sub))
      out.sub[static_cast<int>(*e->sub)] += count;
  }
  return out;
}

// Appendix-style zero handling: a reported zero is a believable true zero only
// for high-quality sources with a prior non-zero report of that cause, in a
// country-year whose estimated total maternal deaths are small. Everything
// else becomes missing.
inline ObservationRecord resolve_zero_vs_missing(
    ObservationRecord obs, const std::vector<ObservationRecord>& history,
    const EnvelopeEstimate& env, int quality_type) {
  const double envelope_total = env.d_ring + env.d_ring_hiv;
  for (int j = 0; j < kNumMainCauses; ++j) {
    if (obs.missing[j] || obs.counts[j] != 0.0) continue;
    bool keep = false;
    if ((quality_type == 1 || quality_type == 2) && envelope_total < 7.0) {
      for (const auto& h : history) {
        if (h.observation_id == obs.observation_id) continue;
        if (!h.missing[j] && h.counts[j] > 0.0) {
          keep = true;
          break;
        }
      }
    }
    if (!keep) obs.missing[j] = true;
  }
  return obs;
}

// Observations reporting ICD-10 Group 7 / O98 deaths may still contain
// HIV/AIDS deaths inside IND; subtract the MMEIG HIV estimate scaled by the
// observation's coverage, floored at zero.
inline ObservationRecord adjust_hiv_contamination(ObservationRecord obs,
                                                  const EnvelopeEstimate& env) {
  if (!obs.reports_group7_or_o98) return obs;
  const int ind = static_cast<int>(MainCause::IND);
  if (obs.missing[ind]) return obs;
  const double denom = env.d_ring + env.d_ring_hiv;
  if (denom <= 0.0) return obs;
  const double coverage = obs.total() / denom;
  const double subtract = env.d_ring_hiv * coverage;
  obs.counts[ind] = std::max(0.0, obs.counts[ind] - subtract);
  return obs;
}

// Multi-year totals are scaled to a single-year equivalent, but only when the
// reported total exceeds five deaths per study year.
inline ObservationRecord scale_multiyear(ObservationRecord obs) {
  const int n = obs.span_years();
  if (n <= 1 || obs.multiyear_scaled) return obs;
  if (obs.total() <= 5.0 * n) return obs;
  const double f = 1.0 / n;
  for (int j = 0; j < kNumMainCauses; ++j)
    if (!obs.missing[j]) obs.counts[j] *= f;
  for (int j = 0; j < kNumSubCauses; ++j)
    if (!obs.sub_missing[j]) obs.sub_counts[j] *= f;
  if (obs.hiv_deaths_reported) *obs.hiv_deaths_reported *= f;
  obs.multiyear_scaled = true;
  return obs;
}

}  // namespace mcod
