// Command-line front end for the maternal cause-of-death estimation library.
// Subcommands compose into the full pipeline:
//   classify -> quality -> fit -> estimate -> aggregate
// plus `simulate` (synthetic data) and `validate` (leave-out experiments).

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "mcod/causes.hpp"
#include "mcod/csv.hpp"
#include "mcod/diagnostics.hpp"
#include "mcod/errors.hpp"
#include "mcod/ingest.hpp"
#include "mcod/manifest.hpp"
#include "mcod/pipeline.hpp"
#include "mcod/posterior.hpp"
#include "mcod/quality.hpp"
#include "mcod/records.hpp"
#include "mcod/sampler.hpp"
#include "mcod/simulate.hpp"
#include "mcod/validation.hpp"

namespace {

using mcod::CsvTable;

struct SamplerFlags {
  mcod::SamplerConfig cfg;
  bool desk_scale = false;

  void attach(CLI::App* app) {
    app->add_option("--chains", cfg.chains, "Number of chains")
        ->capture_default_str();
    app->add_option("--warmup", cfg.warmup, "Warmup iterations per chain")
        ->capture_default_str();
    app->add_option("--samples", cfg.samples, "Sampling iterations per chain")
        ->capture_default_str();
    app->add_option("--seed", cfg.seed, "RNG seed")->capture_default_str();
    app->add_option("--target-accept", cfg.target_accept,
                    "Step size adaptation target")
        ->capture_default_str();
    app->add_option("--max-tree-depth", cfg.max_tree_depth,
                    "Trajectory doubling limit")
        ->capture_default_str();
    app->add_option("--threads", cfg.threads,
                    "Worker threads (0 = one per chain)")
        ->envname("MCOD_THREADS")
        ->capture_default_str();
    app->add_flag("--desk-scale", desk_scale,
                  "Use the reduced 4x500/500 test profile");
    app->set_config("--config", "", "Config file with long-option keys");
  }

  mcod::SamplerConfig resolved() const {
    if (!desk_scale) return cfg;
    mcod::SamplerConfig c = mcod::desk_scale_config(cfg.seed);
    c.chains = cfg.chains;
    c.target_accept = cfg.target_accept;
    c.max_tree_depth = cfg.max_tree_depth;
    c.threads = cfg.threads;
    return c;
  }
};

struct InputFlags {
  std::string observations, envelopes, regions;

  void attach(CLI::App* app) {
    app->add_option("--observations", observations, "observations.csv")
        ->required();
    app->add_option("--envelopes", envelopes, "envelopes.csv")->required();
    app->add_option("--regions", regions, "regions.csv")->required();
  }

  mcod::InputBundle load() const {
    mcod::InputBundle b;
    b.observations = mcod::read_observations_csv(observations);
    b.envelopes = mcod::read_envelopes_csv(envelopes);
    b.regions = mcod::read_regions_csv(regions);
    return b;
  }

  void record(mcod::RunManifest& m) const {
    m.input_paths = {observations, envelopes, regions};
  }
};

std::pair<int, int> parse_period(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos)
    throw mcod::bad_schema("--period", "expected START:END, got '" + s + "'");
  return {mcod::parse_int(s.substr(0, colon), "--period"),
          mcod::parse_int(s.substr(colon + 1), "--period")};
}

void write_draws_csv(const std::string& path, const mcod::PosteriorDraws& d,
                     const std::string& comment) {
  CsvTable t;
  t.header.push_back("chain");
  for (const auto& n : d.parameter_names) t.header.push_back(n);
  for (int c = 0; c < d.n_chains(); ++c)
    for (int i = 0; i < d.n_samples(); ++i) {
      std::vector<std::string> row;
      row.reserve(d.dim() + 1);
      row.push_back(std::to_string(c + 1));
      for (int p = 0; p < d.dim(); ++p)
        row.push_back(mcod::format_double(d.chains[c](i, p)));
      t.rows.push_back(std::move(row));
    }
  mcod::write_csv(path, t, comment);
}

mcod::PosteriorDraws read_draws_csv(const std::string& path,
                                    const std::vector<std::string>& expected) {
  CsvTable t = mcod::read_csv(path);
  if (t.header.size() != expected.size() + 1 || t.header[0] != "chain")
    throw mcod::bad_schema(path, "draws header does not match the model");
  for (size_t p = 0; p < expected.size(); ++p)
    if (t.header[p + 1] != expected[p])
      throw mcod::bad_schema(path, "parameter mismatch at column " +
                                       std::to_string(p + 1) + ": expected '" +
                                       expected[p] + "', got '" +
                                       t.header[p + 1] + "'");
  std::map<int, std::vector<std::vector<double>>> by_chain;
  for (const auto& row : t.rows) {
    std::vector<double> vals(expected.size());
    for (size_t p = 0; p < expected.size(); ++p)
      vals[p] = mcod::parse_double(row[p + 1], path);
    by_chain[mcod::parse_int(row[0], path)].push_back(std::move(vals));
  }
  mcod::PosteriorDraws d;
  d.parameter_names = expected;
  for (const auto& [chain, rows] : by_chain) {
    Eigen::MatrixXd m(rows.size(), expected.size());
    for (size_t i = 0; i < rows.size(); ++i)
      for (size_t p = 0; p < expected.size(); ++p) m(i, p) = rows[i][p];
    d.chains.push_back(std::move(m));
  }
  d.divergence_count.assign(d.n_chains(), 0);
  d.max_depth_count.assign(d.n_chains(), 0);
  d.step_size.assign(d.n_chains(), 0.0);
  return d;
}

void write_diagnostics_csv(const std::string& path, const mcod::Diagnostics& d,
                           const std::string& comment) {
  CsvTable t;
  t.header = {"parameter", "rhat", "ess"};
  for (const auto& r : d.rows)
    t.rows.push_back({r.parameter, mcod::format_double(r.rhat),
                      mcod::format_double(r.ess)});
  mcod::write_csv(path, t, comment);
}

const char* kModelNames[4] = {"main", "hem", "sep", "dir"};

// ---------------------------------------------------------------------------
// classify: raw coded counts -> observations.csv

int cmd_classify(const std::string& raw_path, const std::string& causemap_path,
                 const std::string& envelopes_path, const std::string& out) {
  mcod::CauseMap map = mcod::load_cause_map(causemap_path);
  mcod::EnvelopeSet envs = mcod::read_envelopes_csv(envelopes_path);

  CsvTable t = mcod::read_csv(raw_path);
  const int c_id = t.require("observation_id");
  const int c_country = t.require("country");
  const int c_ys = t.require("year_start");
  const int c_ye = t.require("year_end");
  const int c_src = t.require("source_kind");
  const int c_geo = t.require("geo_level");
  const int c_code = t.require("icd10");
  const int c_count = t.require("count");
  const int c_ill = t.col("ill_defined_prop");
  const int c_contr = t.col("contributory_prop");
  const int c_g7 = t.col("reports_group7_or_o98");
  const int c_hiv = t.col("hiv_deaths_reported");
  const int c_over = t.col("type_override");

  // Group coded rows by observation.
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<std::string, double>>> codes;
  std::map<std::string, mcod::ObservationRecord> meta;
  for (const auto& row : t.rows) {
    const std::string& id = row[c_id];
    if (!meta.count(id)) {
      order.push_back(id);
      mcod::ObservationRecord obs;
      obs.observation_id = id;
      obs.country = row[c_country];
      obs.year_start = mcod::parse_int(row[c_ys], raw_path);
      obs.year_end = mcod::parse_int(row[c_ye], raw_path);
      obs.source_kind = mcod::source_kind_from_string(row[c_src]);
      obs.geo_level = mcod::geo_level_from_string(row[c_geo]);
      if (c_ill >= 0 && !row[c_ill].empty())
        obs.ill_defined_prop = mcod::parse_double(row[c_ill], raw_path);
      if (c_contr >= 0 && !row[c_contr].empty())
        obs.contributory_prop = mcod::parse_double(row[c_contr], raw_path);
      if (c_g7 >= 0 && !row[c_g7].empty())
        obs.reports_group7_or_o98 = mcod::parse_int(row[c_g7], raw_path) != 0;
      if (c_hiv >= 0 && !row[c_hiv].empty())
        obs.hiv_deaths_reported = mcod::parse_double(row[c_hiv], raw_path);
      if (c_over >= 0 && !row[c_over].empty())
        obs.type_override = mcod::parse_int(row[c_over], raw_path);
      meta[id] = std::move(obs);
    }
    codes[id].push_back({row[c_code], mcod::parse_double(row[c_count], raw_path)});
  }

  std::vector<mcod::ObservationRecord> out_obs;
  double excluded_total = 0;
  long excluded_rows = 0;
  for (const auto& id : order) {
    mcod::ObservationRecord obs = meta[id];
    mcod::ClassifiedCounts cc = mcod::classify_counts(codes[id], map);
    for (int j = 0; j < mcod::kNumMainCauses; ++j) {
      obs.counts[j] = cc.main[j];
      obs.missing[j] = false;  // a coded source reports zero as zero
    }
    for (mcod::MainCause mc :
         {mcod::MainCause::HEM, mcod::MainCause::SEP, mcod::MainCause::DIR}) {
      auto [a, b] = mcod::sub_range(mc);
      double info = 0;
      for (int s = a; s < b; ++s) info += cc.sub[s];
      const bool have_info = info > 0;
      for (int s = a; s < b; ++s) {
        obs.sub_counts[s] = cc.sub[s];
        obs.sub_missing[s] = !have_info;
      }
    }
    for (const auto& ex : cc.excluded) {
      excluded_total += ex.count;
      ++excluded_rows;
      std::cerr << "classify: excluded " << ex.count << " deaths (" << ex.code
                << ", " << ex.reason << ") in " << id << "\n";
    }
    obs = mcod::adjust_hiv_contamination(obs, envs.for_observation(obs));
    obs = mcod::scale_multiyear(obs);
    out_obs.push_back(std::move(obs));
  }

  mcod::RunManifest m;
  m.command = "classify";
  m.input_paths = {raw_path, causemap_path, envelopes_path};
  mcod::write_observations_csv(out, out_obs, m.comment());
  std::cout << "classified " << out_obs.size() << " observations, excluded "
            << excluded_total << " deaths across " << excluded_rows
            << " code groups\n";
  return 0;
}

// ---------------------------------------------------------------------------
// quality: usability, types, coverage weights

int cmd_quality(const InputFlags& in, const std::string& out_quality,
                const std::string& out_weights) {
  mcod::InputBundle bundle = in.load();
  auto profiles = mcod::quality_profiles(bundle.observations, bundle.envelopes);
  auto weights = mcod::country_weights(bundle.observations, bundle.envelopes,
                                       bundle.regions.countries);
  mcod::RunManifest m;
  m.command = "quality";
  in.record(m);

  CsvTable q;
  q.header = {"observation_id", "usability", "type", "coverage"};
  for (const auto& p : profiles)
    q.rows.push_back({p.observation_id, mcod::format_double(p.usability),
                      std::to_string(p.quality_type),
                      mcod::format_double(p.coverage)});
  mcod::write_csv(out_quality, q, m.comment());

  CsvTable w;
  w.header = {"country", "w"};
  for (int j = 0; j < mcod::kNumMainCauses; ++j)
    w.header.push_back("z_" + std::string(mcod::kMainCauseNames[j]));
  for (const auto& cw : weights) {
    std::vector<std::string> row = {cw.country, mcod::format_double(cw.w)};
    for (int j = 0; j < mcod::kNumMainCauses; ++j)
      row.push_back(mcod::format_double(cw.z[j]));
    w.rows.push_back(std::move(row));
  }
  mcod::write_csv(out_weights, w, m.comment());
  std::cout << "wrote " << profiles.size() << " quality profiles and "
            << weights.size() << " country weight rows\n";
  return 0;
}

// ---------------------------------------------------------------------------
// fit: main + three subcategory models

int cmd_fit(const InputFlags& in, const SamplerFlags& sf,
            const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  mcod::InputBundle bundle = in.load();
  mcod::PreparedInputs prepared = mcod::prepare_inputs(bundle);
  const mcod::SamplerConfig cfg = sf.resolved();

  // Flat intercept priors need every category observed somewhere.
  {
    std::array<bool, mcod::kNumMainCauses> seen{};
    for (const auto& obs : prepared.observations)
      for (int j = 0; j < mcod::kNumMainCauses; ++j)
        if (!obs.missing[j] && obs.counts[j] > 0) seen[j] = true;
    for (int j = 0; j < mcod::kNumMainCauses; ++j)
      if (!seen[j])
        std::cerr << "fit: warning: no observed deaths for "
                  << mcod::kMainCauseNames[j]
                  << "; its intercept is weakly identified\n";
  }

  mcod::RunManifest m;
  m.command = "fit";
  in.record(m);
  m.seed = cfg.seed;
  m.config = {{"chains", std::to_string(cfg.chains)},
              {"warmup", std::to_string(cfg.warmup)},
              {"samples", std::to_string(cfg.samples)}};

  mcod::PipelineFit fit = mcod::fit_all(prepared, bundle.regions, cfg);
  const mcod::FitResult* results[4] = {&fit.main, &fit.hem, &fit.sep, &fit.dir};
  for (int k = 0; k < 4; ++k) {
    const std::string base = out_dir + "/" + kModelNames[k];
    write_draws_csv(base + "_draws.csv", results[k]->draws, m.comment());
    write_diagnostics_csv(base + "_diagnostics.csv", results[k]->diagnostics,
                          m.comment());
    long div = 0;
    for (int d : results[k]->draws.divergence_count) div += d;
    std::cout << kModelNames[k]
              << ": max rhat=" << results[k]->diagnostics.max_rhat
              << " min ess=" << results[k]->diagnostics.min_ess
              << " divergences=" << div
              << (results[k]->draws.max_depth_warning()
                      ? " (max tree depth saturated >10%)"
                      : "")
              << "\n";
  }
  if (!fit.all_pass()) {
    std::cerr << "fit: convergence diagnostics failed (rhat >= 1.01 or ess <= "
                 "100 somewhere)\n";
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// shared by estimate/aggregate: rebuild fits from stored draws

struct LoadedFits {
  mcod::InputBundle bundle;
  mcod::PreparedInputs prepared;
  mcod::FitResult main, hem, sep, dir;
};

LoadedFits load_fits(const InputFlags& in, const std::string& draws_dir) {
  LoadedFits lf;
  lf.bundle = in.load();
  lf.prepared = mcod::prepare_inputs(lf.bundle);
  mcod::ModelData data[4] = {
      mcod::build_main_model_data(lf.prepared, lf.bundle.regions),
      mcod::build_sub_model_data(lf.prepared, lf.bundle.regions,
                                 mcod::MainCause::HEM),
      mcod::build_sub_model_data(lf.prepared, lf.bundle.regions,
                                 mcod::MainCause::SEP),
      mcod::build_sub_model_data(lf.prepared, lf.bundle.regions,
                                 mcod::MainCause::DIR)};
  mcod::FitResult* results[4] = {&lf.main, &lf.hem, &lf.sep, &lf.dir};
  for (int k = 0; k < 4; ++k) {
    mcod::Model model(std::move(data[k]));
    results[k]->draws = read_draws_csv(
        draws_dir + "/" + kModelNames[k] + "_draws.csv",
        model.layout().names());
    results[k]->views =
        mcod::extract_draws(model, results[k]->draws.flat());
    results[k]->data = model.data();
  }
  return lf;
}

// ---------------------------------------------------------------------------
// estimate: per-country HIV-inclusive estimates and subcause estimates

int cmd_estimate(const InputFlags& in, const std::string& draws_dir,
                 const std::string& period_str, std::uint64_t seed,
                 const std::string& out_est, const std::string& out_sub) {
  auto [period_start, period_end] = parse_period(period_str);
  LoadedFits lf = load_fits(in, draws_dir);
  const mcod::RegionTable& regions = lf.bundle.regions;

  mcod::RunManifest m;
  m.command = "estimate";
  in.record(m);
  m.seed = seed;
  m.config = {{"period", period_str}};

  auto p_star = mcod::country_p_star(lf.main, regions, lf.prepared.weights,
                                     mcod::stream_seed(seed, 0x7073));
  const double sigma_hiv = mcod::sigma_hiv_from_observations(
      lf.bundle.observations, lf.bundle.envelopes);
  mcod::EstimateSet est = mcod::build_country_year_estimates(
      p_star, regions, lf.bundle.envelopes, sigma_hiv, period_start, period_end,
      seed);

  // Country-level summary: HIV-inclusive counts summed over the period.
  CsvTable e;
  e.header = {"scope", "cause", "median", "lo95", "hi95"};
  const int n_years = period_end - period_start + 1;
  for (size_t c = 0; c < regions.countries.size(); ++c) {
    Eigen::MatrixXd d_sum = lf.main.views.empty()
                                ? Eigen::MatrixXd()
                                : Eigen::MatrixXd::Zero(
                                      est.country_years[0].d_prime.rows(),
                                      mcod::kNumMainCauses);
    for (int y = 0; y < n_years; ++y)
      d_sum += est.country_years[c * n_years + y].d_prime;
    Eigen::MatrixXd p(d_sum.rows(), d_sum.cols());
    for (int d = 0; d < d_sum.rows(); ++d)
      p.row(d) = d_sum.row(d) / d_sum.row(d).sum();
    auto s = mcod::summarize(p);
    for (int j = 0; j < mcod::kNumMainCauses; ++j)
      e.rows.push_back({regions.countries[c],
                        std::string(mcod::kMainCauseNames[j]),
                        mcod::format_double(s[j].median),
                        mcod::format_double(s[j].lo95),
                        mcod::format_double(s[j].hi95)});
  }
  mcod::write_csv(out_est, e, m.comment() + ", sigma_hiv " +
                                  mcod::format_double(sigma_hiv));

  // Subcause estimates: within-parent subdistributions weighted by z * w.
  CsvTable se;
  se.header = {"scope", "cause", "median", "lo95", "hi95"};
  const mcod::FitResult* subs[3] = {&lf.hem, &lf.sep, &lf.dir};
  const mcod::MainCause sub_causes[3] = {
      mcod::MainCause::HEM, mcod::MainCause::SEP, mcod::MainCause::DIR};
  for (size_t c = 0; c < regions.countries.size(); ++c) {
    for (int k = 0; k < 3; ++k) {
      auto [a, b] = mcod::sub_range(sub_causes[k]);
      const int mj = static_cast<int>(sub_causes[k]);
      Eigen::MatrixXd dist = mcod::subcause_distribution(
          subs[k]->views, static_cast<int>(c),
          regions.model_region_of_country[c], lf.prepared.weights[c].z[mj],
          lf.prepared.weights[c].w, mcod::stream_seed(seed, 0x7375, k));
      auto s = mcod::summarize(dist);
      for (int j = a; j < b; ++j)
        se.rows.push_back({regions.countries[c],
                           std::string(mcod::kSubCauseNames[j]),
                           mcod::format_double(s[j - a].median),
                           mcod::format_double(s[j - a].lo95),
                           mcod::format_double(s[j - a].hi95)});
    }
  }
  mcod::write_csv(out_sub, se, m.comment());
  std::cout << "wrote estimates for " << regions.countries.size()
            << " countries, period " << period_start << "-" << period_end
            << ", sigma_hiv=" << sigma_hiv << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// aggregate: SDG-region and global distributions

int cmd_aggregate(const InputFlags& in, const std::string& draws_dir,
                  const std::string& period_str, std::uint64_t seed,
                  const std::string& out) {
  auto [period_start, period_end] = parse_period(period_str);
  LoadedFits lf = load_fits(in, draws_dir);
  const mcod::RegionTable& regions = lf.bundle.regions;

  auto p_star = mcod::country_p_star(lf.main, regions, lf.prepared.weights,
                                     mcod::stream_seed(seed, 0x7073));
  const double sigma_hiv = mcod::sigma_hiv_from_observations(
      lf.bundle.observations, lf.bundle.envelopes);
  mcod::EstimateSet est = mcod::build_country_year_estimates(
      p_star, regions, lf.bundle.envelopes, sigma_hiv, period_start, period_end,
      seed);
  auto aggs = mcod::aggregate(est.country_years, est.sdg_of_dist,
                              regions.sdg_regions, period_start, period_end);

  mcod::RunManifest m;
  m.command = "aggregate";
  in.record(m);
  m.seed = seed;
  m.config = {{"period", period_str}};

  CsvTable t;
  t.header = {"scope", "cause", "median", "lo95", "hi95"};
  for (const auto& a : aggs) {
    auto s = mcod::summarize(a.p_prime);
    for (int j = 0; j < mcod::kNumMainCauses; ++j)
      t.rows.push_back({a.scope, std::string(mcod::kMainCauseNames[j]),
                        mcod::format_double(s[j].median),
                        mcod::format_double(s[j].lo95),
                        mcod::format_double(s[j].hi95)});
  }
  mcod::write_csv(out, t, m.comment());
  std::cout << "wrote " << aggs.size() << " aggregate scopes\n";
  return 0;
}

// ---------------------------------------------------------------------------
// validate: leave-out experiments

int cmd_validate(const InputFlags& in, const SamplerFlags& sf,
                 const std::string& scenario_str, std::uint64_t val_seed,
                 const std::string& out) {
  mcod::InputBundle bundle = in.load();
  mcod::ValidationConfig vcfg;
  vcfg.scenario = mcod::scenario_from_string(scenario_str);
  vcfg.seed = val_seed;
  mcod::ValidationReport report =
      mcod::run_validation(bundle, sf.resolved(), vcfg);

  mcod::RunManifest m;
  m.command = "validate";
  in.record(m);
  m.seed = val_seed;
  m.config = {{"scenario", scenario_str}};

  CsvTable t;
  t.header = {"scenario", "sdg_region", "cause", "mad"};
  for (size_t h = 0; h < report.sdg_regions.size(); ++h)
    for (int j = 0; j < mcod::kNumMainCauses; ++j)
      t.rows.push_back({std::string(mcod::to_string(report.scenario)),
                        report.sdg_regions[h],
                        std::string(mcod::kMainCauseNames[j]),
                        mcod::format_double(report.mad(h, j))});
  mcod::write_csv(out, t, m.comment() + ", excluded " +
                              std::to_string(report.n_excluded) +
                              " observations");
  std::cout << "scenario " << scenario_str << ": excluded "
            << report.n_excluded << " observations, max MAD "
            << report.mad.maxCoeff() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// simulate: synthetic inputs plus ground truth sidecar

int cmd_simulate(const mcod::SimConfig& sc, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  mcod::Simulated sim = mcod::simulate_dataset(sc);

  mcod::RunManifest m;
  m.command = "simulate";
  m.seed = sc.seed;
  m.config = {{"n_region", std::to_string(sc.n_region)},
              {"n_country", std::to_string(sc.n_country)},
              {"obs_per_country", std::to_string(sc.obs_per_country)},
              {"deaths_per_obs", mcod::format_double(sc.deaths_per_obs)},
              {"missing_rate", mcod::format_double(sc.missing_rate)},
              {"coverage", mcod::format_double(sc.coverage)}};
  const std::string c = m.comment();

  mcod::write_observations_csv(out_dir + "/observations.csv",
                               sim.inputs.observations, c);
  mcod::write_envelopes_csv(out_dir + "/envelopes.csv", sim.inputs.envelopes, c);
  mcod::write_regions_csv(out_dir + "/regions.csv", sim.inputs.regions, c);

  nlohmann::json truth;
  truth["manifest_hash"] = m.hash();
  truth["beta0"] = std::vector<double>(
      sim.truth.beta0.data(), sim.truth.beta0.data() + sim.truth.beta0.size());
  truth["sigma_beta"] = sim.truth.sigma_beta;
  truth["v"] = std::vector<double>(sim.truth.v.data(),
                                   sim.truth.v.data() + sim.truth.v.size());
  truth["sigma_type"] = sim.truth.sigma_type;
  for (int cc = 0; cc < sim.truth.country_p.rows(); ++cc)
    truth["country_p"][sim.inputs.regions.countries[cc]] =
        std::vector<double>(sim.truth.country_p.row(cc).data(),
                            sim.truth.country_p.row(cc).data() +
                                sim.truth.country_p.cols());
  std::ofstream tf(out_dir + "/truth.json");
  tf << truth.dump(2) << "\n";

  std::cout << "wrote synthetic dataset (" << sim.inputs.observations.size()
            << " observations) to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maternal cause-of-death estimation pipeline"};
  app.require_subcommand(1);

  // classify
  std::string raw_path, causemap_path, cls_envelopes, cls_out;
  CLI::App* classify = app.add_subcommand(
      "classify", "Map coded counts to cause categories and adjust them");
  classify->add_option("--raw", raw_path, "Coded input rows")->required();
  classify->add_option("--causemap", causemap_path, "causemap.csv")->required();
  classify->add_option("--envelopes", cls_envelopes, "envelopes.csv")
      ->required();
  classify->add_option("--out", cls_out, "Output observations.csv")->required();

  // quality
  InputFlags q_in;
  std::string out_quality = "quality.csv", out_weights = "weights.csv";
  CLI::App* quality =
      app.add_subcommand("quality", "Usability, quality types, weights");
  q_in.attach(quality);
  quality->add_option("--out-quality", out_quality, "Output quality.csv")
      ->capture_default_str();
  quality->add_option("--out-weights", out_weights, "Output weights.csv")
      ->capture_default_str();

  // fit
  InputFlags f_in;
  SamplerFlags f_sf;
  std::string fit_out_dir = "fit";
  CLI::App* fit = app.add_subcommand("fit", "Sample the posterior");
  f_in.attach(fit);
  f_sf.attach(fit);
  fit->add_option("--out-dir", fit_out_dir, "Directory for draws/diagnostics")
      ->capture_default_str();

  // estimate
  InputFlags e_in;
  std::string e_draws_dir = "fit", e_period = "2009:2017";
  std::uint64_t e_seed = 1;
  std::string out_est = "estimates.csv", out_sub = "subestimates.csv";
  CLI::App* estimate =
      app.add_subcommand("estimate", "Country-level estimates from draws");
  e_in.attach(estimate);
  estimate->add_option("--draws-dir", e_draws_dir, "Directory written by fit")
      ->capture_default_str();
  estimate->add_option("--period", e_period, "Aggregation window START:END")
      ->capture_default_str();
  estimate->add_option("--seed", e_seed, "Posterior-construction RNG seed")
      ->capture_default_str();
  estimate->add_option("--out", out_est, "Output estimates.csv")
      ->capture_default_str();
  estimate->add_option("--out-sub", out_sub, "Output subestimates.csv")
      ->capture_default_str();

  // aggregate
  InputFlags a_in;
  std::string a_draws_dir = "fit", a_period = "2009:2017";
  std::uint64_t a_seed = 1;
  std::string out_agg = "aggregates.csv";
  CLI::App* aggregate =
      app.add_subcommand("aggregate", "SDG-region and global estimates");
  a_in.attach(aggregate);
  aggregate->add_option("--draws-dir", a_draws_dir, "Directory written by fit")
      ->capture_default_str();
  aggregate->add_option("--period", a_period, "Aggregation window START:END")
      ->capture_default_str();
  aggregate->add_option("--seed", a_seed, "Posterior-construction RNG seed")
      ->capture_default_str();
  aggregate->add_option("--out", out_agg, "Output aggregates.csv")
      ->capture_default_str();

  // validate
  InputFlags v_in;
  SamplerFlags v_sf;
  std::string scenario = "leave-out-studies", out_val = "validation.csv";
  std::uint64_t val_seed = 1;
  CLI::App* validate =
      app.add_subcommand("validate", "Leave-out validation experiment");
  v_in.attach(validate);
  v_sf.attach(validate);
  validate
      ->add_option("--scenario", scenario,
                   "leave-out-studies | leave-out-developed | "
                   "leave-out-20-percent")
      ->capture_default_str();
  validate->add_option("--validation-seed", val_seed, "Exclusion shuffle seed")
      ->capture_default_str();
  validate->add_option("--out", out_val, "Output validation.csv")
      ->capture_default_str();

  // simulate
  mcod::SimConfig sc;
  std::string sim_out_dir = "simulated";
  CLI::App* simulate =
      app.add_subcommand("simulate", "Generate a synthetic dataset");
  simulate->add_option("--out-dir", sim_out_dir, "Output directory")
      ->capture_default_str();
  simulate->add_option("--seed", sc.seed, "RNG seed")->capture_default_str();
  simulate->add_option("--n-region", sc.n_region, "Modeling regions")
      ->capture_default_str();
  simulate->add_option("--n-country", sc.n_country, "Countries")
      ->capture_default_str();
  simulate
      ->add_option("--obs-per-country", sc.obs_per_country,
                   "Observations per country")
      ->capture_default_str();
  simulate->add_option("--deaths-per-obs", sc.deaths_per_obs,
                       "Total deaths per observation")
      ->capture_default_str();
  simulate->add_option("--missing-rate", sc.missing_rate,
                       "Per-category missingness probability")
      ->capture_default_str();
  simulate->add_option("--coverage", sc.coverage, "Envelope coverage d/d_ring")
      ->capture_default_str();
  simulate->add_option("--beta0-sd", sc.beta0_sd, "Intercept prior sd")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
    if (*classify)
      return cmd_classify(raw_path, causemap_path, cls_envelopes, cls_out);
    if (*quality) return cmd_quality(q_in, out_quality, out_weights);
    if (*fit) return cmd_fit(f_in, f_sf, fit_out_dir);
    if (*estimate)
      return cmd_estimate(e_in, e_draws_dir, e_period, e_seed, out_est, out_sub);
    if (*aggregate)
      return cmd_aggregate(a_in, a_draws_dir, a_period, a_seed, out_agg);
    if (*validate) return cmd_validate(v_in, v_sf, scenario, val_seed, out_val);
    if (*simulate) return cmd_simulate(sc, sim_out_dir);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const mcod::Error& e) {
    nlohmann::json j;
    j["error"] = e.code();
    j["message"] = e.what();
    std::cerr << j.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    nlohmann::json j;
    j["error"] = "Internal";
    j["message"] = e.what();
    std::cerr << j.dump() << "\n";
    return 2;
  }
  return 0;
}
