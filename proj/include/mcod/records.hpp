#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcod/causes.hpp"
#include "mcod/csv.hpp"
#include "mcod/errors.hpp"

namespace mcod {

enum class SourceKind : int { CRVS = 0, GreyLiterature, Study };
enum class GeoLevel : int { National = 0, ADM1OrHigher, BelowADM1 };

inline std::string_view to_string(SourceKind s) {
  switch (s) {
    case SourceKind::CRVS: return "CRVS";
    case SourceKind::GreyLiterature: return "GreyLiterature";
    default: return "Study";
  }
}

inline std::string_view to_string(GeoLevel g) {
  switch (g) {
    case GeoLevel::National: return "National";
    case GeoLevel::ADM1OrHigher: return "ADM1OrHigher";
    default: return "BelowADM1";
  }
}

inline SourceKind source_kind_from_string(const std::string& s) {
  if (s == "CRVS") return SourceKind::CRVS;
  if (s == "GreyLiterature") return SourceKind::GreyLiterature;
  if (s == "Study") return SourceKind::Study;
  throw bad_schema("source_kind", "unknown source kind '" + s + "'");
}

inline GeoLevel geo_level_from_string(const std::string& s) {
  if (s == "National") return GeoLevel::National;
  if (s == "ADM1OrHigher") return GeoLevel::ADM1OrHigher;
  if (s == "BelowADM1") return GeoLevel::BelowADM1;
  throw bad_schema("geo_level", "unknown geo level '" + s + "'");
}

// One source-year (or source-period) of cause-specific death counts.
// Counts are nonnegative reals: multi-year scaling and clinician splits of
// ambiguous causes both produce fractional deaths.
struct ObservationRecord {
  std::string observation_id;
  std::string country;
  int year_start = 0;
  int year_end = 0;
  SourceKind source_kind = SourceKind::CRVS;
  GeoLevel geo_level = GeoLevel::National;

  std::array<double, kNumMainCauses> counts{};
  std::array<bool, kNumMainCauses> missing{};  // true = count unknown

  std::array<double, kNumSubCauses> sub_counts{};
  std::array<bool, kNumSubCauses> sub_missing{};

  std::optional<double> hiv_deaths_reported;
  double ill_defined_prop = 0.0;     // p^ill
  double contributory_prop = 0.0;    // p^contr
  bool reports_group7_or_o98 = false;
  std::optional<int> type_override;
  bool multiyear_scaled = false;

  // d_i: total over non-missing main categories.
  double total() const {
    double d = 0.0;
    for (int j = 0; j < kNumMainCauses; ++j)
      if (!missing[j]) d += counts[j];
    return d;
  }

  int span_years() const { return year_end - year_start + 1; }
};

struct EnvelopeEstimate {
  std::string country;
  int year = 0;
  double d_ring = 0.0;           // HIV-omitted maternal deaths (MMEIG)
  double d_ring_hiv = 0.0;       // HIV/AIDS maternal deaths (MMEIG)
  double wpp_female_deaths = 0;  // all-cause female deaths (WPP)
  std::optional<double> crvs_female_deaths;
};

class EnvelopeSet {
 public:
  void add(EnvelopeEstimate e) {
    by_country_year_[{e.country, e.year}] = std::move(e);
  }

  const EnvelopeEstimate& at(const std::string& country, int year) const {
    auto it = by_country_year_.find({country, year});
    if (it == by_country_year_.end()) throw missing_envelope(country, year);
    return it->second;
  }

  bool contains(const std::string& country, int year) const {
    return by_country_year_.count({country, year}) > 0;
  }

  // Envelope for a multi-year observation: span average of yearly envelopes.
  EnvelopeEstimate for_observation(const ObservationRecord& obs) const {
    EnvelopeEstimate avg;
    avg.country = obs.country;
    avg.year = obs.year_start;
    int n = 0;
    for (int y = obs.year_start; y <= obs.year_end; ++y) {
      const EnvelopeEstimate& e = at(obs.country, y);
      avg.d_ring += e.d_ring;
      avg.d_ring_hiv += e.d_ring_hiv;
      avg.wpp_female_deaths += e.wpp_female_deaths;
      ++n;
    }
    avg.d_ring /= n;
    avg.d_ring_hiv /= n;
    avg.wpp_female_deaths /= n;
    return avg;
  }

  const std::map<std::pair<std::string, int>, EnvelopeEstimate>& all() const {
    return by_country_year_;
  }

 private:
  std::map<std::pair<std::string, int>, EnvelopeEstimate> by_country_year_;
};

// Country -> modeling region (hierarchical pooling) and SDG region
// (reporting/aggregation). The two systems are distinct.
struct RegionTable {
  std::vector<std::string> countries;
  std::vector<std::string> model_regions;  // unique labels
  std::vector<std::string> sdg_regions;    // unique labels
  std::vector<int> model_region_of_country;
  std::vector<int> sdg_region_of_country;

  int country_index(const std::string& c) const {
    for (size_t i = 0; i < countries.size(); ++i)
      if (countries[i] == c) return static_cast<int>(i);
    return -1;
  }

  int require_country(const std::string& c) const {
    int i = country_index(c);
    if (i < 0) throw bad_schema("regions", "country '" + c + "' not in region table");
    return i;
  }
};

inline RegionTable read_regions_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  int c_country = t.require("country");
  int c_model = t.require("model_region");
  int c_sdg = t.require("sdg_region");
  RegionTable r;
  auto intern = [](std::vector<std::string>& pool, const std::string& s) {
    for (size_t i = 0; i < pool.size(); ++i)
      if (pool[i] == s) return static_cast<int>(i);
    pool.push_back(s);
    return static_cast<int>(pool.size() - 1);
  };
  for (const auto& row : t.rows) {
    if (r.country_index(row[c_country]) >= 0)
      throw bad_schema(path, "duplicate country '" + row[c_country] + "'");
    r.countries.push_back(row[c_country]);
    r.model_region_of_country.push_back(intern(r.model_regions, row[c_model]));
    r.sdg_region_of_country.push_back(intern(r.sdg_regions, row[c_sdg]));
  }
  return r;
}

inline void write_regions_csv(const std::string& path, const RegionTable& r,
                              const std::string& comment = "") {
  CsvTable t;
  t.header = {"country", "model_region", "sdg_region"};
  for (size_t i = 0; i < r.countries.size(); ++i)
    t.rows.push_back({r.countries[i], r.model_regions[r.model_region_of_country[i]],
                      r.sdg_regions[r.sdg_region_of_country[i]]});
  write_csv(path, t, comment);
}

inline EnvelopeSet read_envelopes_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  int c_country = t.require("country");
  int c_year = t.require("year");
  int c_dring = t.require("d_ring");
  int c_hiv = t.require("d_ring_hiv");
  int c_wpp = t.require("wpp_female_deaths");
  int c_crvs = t.col("crvs_female_deaths");
  EnvelopeSet envs;
  for (const auto& row : t.rows) {
    EnvelopeEstimate e;
    e.country = row[c_country];
    e.year = parse_int(row[c_year], path);
    e.d_ring = parse_double(row[c_dring], path);
    e.d_ring_hiv = parse_double(row[c_hiv], path);
    e.wpp_female_deaths = parse_double(row[c_wpp], path);
    if (c_crvs >= 0 && !row[c_crvs].empty())
      e.crvs_female_deaths = parse_double(row[c_crvs], path);
    if (e.d_ring < 0 || e.d_ring_hiv < 0 || e.wpp_female_deaths <= 0)
      throw bad_schema(path, "invalid envelope for " + e.country + "/" +
                                 std::to_string(e.year));
    envs.add(std::move(e));
  }
  return envs;
}

inline void write_envelopes_csv(const std::string& path, const EnvelopeSet& envs,
                                const std::string& comment = "") {
  CsvTable t;
  t.header = {"country", "year", "d_ring", "d_ring_hiv", "wpp_female_deaths",
              "crvs_female_deaths"};
  for (const auto& [key, e] : envs.all()) {
    t.rows.push_back({e.country, std::to_string(e.year), format_double(e.d_ring),
                      format_double(e.d_ring_hiv),
                      format_double(e.wpp_female_deaths),
                      e.crvs_female_deaths ? format_double(*e.crvs_female_deaths)
                                           : ""});
  }
  write_csv(path, t, comment);
}

// observations.csv is long-format: one row per (observation, cause), with the
// per-observation metadata repeated. `cause` may name a main category or an
// estimated subcategory. Optional columns carry the quality metadata.
inline std::vector<ObservationRecord> read_observations_csv(
    const std::string& path) {
  CsvTable t = read_csv(path);
  int c_id = t.require("observation_id");
  int c_country = t.require("country");
  int c_ys = t.require("year_start");
  int c_ye = t.require("year_end");
  int c_src = t.require("source_kind");
  int c_geo = t.require("geo_level");
  int c_cause = t.require("cause");
  int c_count = t.require("count");
  int c_missing = t.require("missing");
  int c_ill = t.col("ill_defined_prop");
  int c_contr = t.col("contributory_prop");
  int c_g7 = t.col("reports_group7_or_o98");
  int c_hivrep = t.col("hiv_deaths_reported");
  int c_override = t.col("type_override");

  std::vector<ObservationRecord> out;
  std::map<std::string, size_t> index;
  for (const auto& row : t.rows) {
    const std::string& id = row[c_id];
    auto it = index.find(id);
    if (it == index.end()) {
      ObservationRecord obs;
      obs.observation_id = id;
      obs.country = row[c_country];
      obs.year_start = parse_int(row[c_ys], path);
      obs.year_end = parse_int(row[c_ye], path);
      if (obs.year_end < obs.year_start)
        throw bad_schema(path, "year_end < year_start for " + id);
      obs.source_kind = source_kind_from_string(row[c_src]);
      obs.geo_level = geo_level_from_string(row[c_geo]);
      obs.missing.fill(true);
      obs.sub_missing.fill(true);
      if (c_ill >= 0 && !row[c_ill].empty())
        obs.ill_defined_prop = parse_double(row[c_ill], path);
      if (c_contr >= 0 && !row[c_contr].empty())
        obs.contributory_prop = parse_double(row[c_contr], path);
      if (c_g7 >= 0 && !row[c_g7].empty())
        obs.reports_group7_or_o98 = parse_int(row[c_g7], path) != 0;
      if (c_hivrep >= 0 && !row[c_hivrep].empty())
        obs.hiv_deaths_reported = parse_double(row[c_hivrep], path);
      if (c_override >= 0 && !row[c_override].empty())
        obs.type_override = parse_int(row[c_override], path);
      index[id] = out.size();
      out.push_back(std::move(obs));
      it = index.find(id);
    }
    ObservationRecord& obs = out[it->second];
    bool row_missing = parse_int(row[c_missing], path) != 0;
    double count = row[c_count].empty() ? 0.0 : parse_double(row[c_count], path);
    if (count < 0) throw bad_schema(path, "negative count for " + id);
    if (auto mc = main_cause_from_string(row[c_cause])) {
      int j = static_cast<int>(*mc);
      obs.counts[j] = row_missing ? 0.0 : count;
      obs.missing[j] = row_missing;
    } else if (auto sc = sub_cause_from_string(row[c_cause]);
               sc && !is_sentinel(*sc)) {
      int j = static_cast<int>(*sc);
      obs.sub_counts[j] = row_missing ? 0.0 : count;
      obs.sub_missing[j] = row_missing;
    } else {
      throw bad_schema(path, "unknown cause label '" + row[c_cause] + "'");
    }
  }
  return out;
}

inline void write_observations_csv(const std::string& path,
                                   const std::vector<ObservationRecord>& obs,
                                   const std::string& comment = "") {
  CsvTable t;
  t.header = {"observation_id", "country", "year_start", "year_end",
              "source_kind", "geo_level", "cause", "count", "missing",
              "ill_defined_prop", "contributory_prop", "reports_group7_or_o98",
              "hiv_deaths_reported", "type_override"};
  for (const auto& o : obs) {
    auto push = [&](std::string_view cause, double count, bool missing) {
      t.rows.push_back(
          {o.observation_id, o.country, std::to_string(o.year_start),
           std::to_string(o.year_end), std::string(to_string(o.source_kind)),
           std::string(to_string(o.geo_level)), std::string(cause),
           missing ? "" : format_double(count), missing ? "1" : "0",
           format_double(o.ill_defined_prop), format_double(o.contributory_prop),
           o.reports_group7_or_o98 ? "1" : "0",
           o.hiv_deaths_reported ? format_double(*o.hiv_deaths_reported) : "",
           o.type_override ? std::to_string(*o.type_override) : ""});
    };
    for (int j = 0; j < kNumMainCauses; ++j)
      push(kMainCauseNames[j], o.counts[j], o.missing[j]);
    for (int j = 0; j < kNumSubCauses; ++j)
      if (!o.sub_missing[j]) push(kSubCauseNames[j], o.sub_counts[j], false);
  }
  write_csv(path, t, comment);
}

}  // namespace mcod
