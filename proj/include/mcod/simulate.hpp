#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "mcod/causes.hpp"
#include "mcod/model.hpp"
#include "mcod/pipeline.hpp"
#include "mcod/records.hpp"
#include "mcod/stats.hpp"

namespace mcod {

struct SimConfig {
  int n_region = 3;
  int n_country = 9;
  int obs_per_country = 4;
  int year_start = 2010;
  double deaths_per_obs = 100;   // fixed observation total
  double beta0_sd = 1.0;         // proper intercept prior for generation
  double missing_rate = 0.0;     // per (observation, category)
  double coverage = 0.8;         // envelope scale: d_ring = d_i / coverage
  std::array<double, 4> type_probs{0.25, 0.25, 0.25, 0.25};
  bool generate_subs = true;
  std::uint64_t seed = 1;
};

struct SimTruth {
  Eigen::VectorXd beta0;
  double sigma_beta = 0;
  Eigen::MatrixXd beta_region;
  Eigen::VectorXd v;
  Eigen::MatrixXd L;
  Eigen::MatrixXd u;
  std::array<double, 3> sigma_type{};
  Eigen::MatrixXd country_p;  // C x 7: softmax of beta0 + beta_region + u
};

struct Simulated {
  InputBundle inputs;
  SimTruth truth;
  ModelData model_data;  // exactly the instance the counts were drawn from
};

namespace sim_detail {

inline double half_normal(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  return std::fabs(n(rng));
}

// Canonical partial correlations for LKJ(1): z in column j (0-based) follows
// 2 Beta(a, a) - 1 with a = (K - j) / 2, which makes the implied correlation
// matrix uniform.
inline Eigen::VectorXd lkj_cpc(std::mt19937_64& rng, int K) {
  Eigen::VectorXd z(K * (K - 1) / 2);
  int idx = 0;
  for (int i = 1; i < K; ++i)
    for (int j = 0; j < i; ++j) {
      const double a = 0.5 * (K - j);
      std::gamma_distribution<double> g(a, 1.0);
      const double x = g(rng), y = g(rng);
      z(idx++) = 2.0 * x / (x + y) - 1.0;
    }
  return z;
}

// Multinomial via sequential binomials.
inline std::vector<long> multinomial(std::mt19937_64& rng, long n,
                                     const Eigen::VectorXd& p) {
  std::vector<long> out(p.size(), 0);
  double rest = p.sum();
  long left = n;
  for (int j = 0; j < p.size() && left > 0; ++j) {
    if (j + 1 == p.size()) {
      out[j] = left;
      break;
    }
    const double pj = std::min(1.0, rest > 0 ? p(j) / rest : 1.0);
    std::binomial_distribution<long> bin(left, pj);
    out[j] = bin(rng);
    left -= out[j];
    rest -= p(j);
  }
  return out;
}

}  // namespace sim_detail

// Draws all model parameters from their priors, then counts from the implied
// multinomials. The same seed gives byte-identical output. The ground truth
// is returned alongside the input files for recovery and calibration tests.
inline Simulated simulate_dataset(const SimConfig& cfg) {
  using namespace sim_detail;
  if (cfg.beta0_sd <= 0)
    throw domain_error("simulation needs a proper intercept prior");
  std::mt19937_64 rng(stream_seed(cfg.seed, 0x73696d));
  std::normal_distribution<double> norm(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int K = kNumMainCauses - 1;

  Simulated sim;
  SimTruth& truth = sim.truth;
  truth.beta0.resize(K);
  for (int j = 0; j < K; ++j) truth.beta0(j) = cfg.beta0_sd * norm(rng);
  truth.sigma_beta = half_normal(rng, 1.0);
  truth.beta_region.resize(cfg.n_region, K);
  for (int r = 0; r < cfg.n_region; ++r)
    for (int j = 0; j < K; ++j)
      truth.beta_region(r, j) = truth.sigma_beta * norm(rng);
  truth.v.resize(K);
  for (int j = 0; j < K; ++j) truth.v(j) = half_normal(rng, 3.0);
  truth.L = Model::cholesky_from_cpc(lkj_cpc(rng, K), K);
  truth.u.resize(cfg.n_country, K);
  for (int c = 0; c < cfg.n_country; ++c) {
    Eigen::VectorXd raw(K);
    for (int j = 0; j < K; ++j) raw(j) = norm(rng);
    truth.u.row(c) = truth.v.cwiseProduct(truth.L * raw).transpose();
  }
  for (int t = 0; t < 3; ++t) truth.sigma_type[t] = half_normal(rng, 0.25);

  truth.country_p.resize(cfg.n_country, kNumMainCauses);
  RegionTable& regions = sim.inputs.regions;
  for (int c = 0; c < cfg.n_country; ++c) {
    const int r = c % cfg.n_region;
    Eigen::VectorXd eta =
        truth.beta0 + truth.beta_region.row(r).transpose() +
        truth.u.row(c).transpose();
    truth.country_p.row(c) = softmax_with_reference(eta).transpose();
    regions.countries.push_back("C" + std::to_string(c + 1));
    regions.model_region_of_country.push_back(r);
    regions.sdg_region_of_country.push_back(r);
  }
  for (int r = 0; r < cfg.n_region; ++r) {
    regions.model_regions.push_back("MR" + std::to_string(r + 1));
    regions.sdg_regions.push_back("SR" + std::to_string(r + 1));
  }

  ModelData& md = sim.model_data;
  md.n_cat = kNumMainCauses;
  md.n_region = cfg.n_region;
  md.n_country = cfg.n_country;
  md.quality_terms = true;
  md.beta0_prior_sd = cfg.beta0_sd;
  md.region_of_country = regions.model_region_of_country;

  std::discrete_distribution<int> type_dist(cfg.type_probs.begin(),
                                            cfg.type_probs.end());
  std::vector<Eigen::RowVectorXd> count_rows;
  const long d_total = static_cast<long>(std::llround(cfg.deaths_per_obs));
  for (int c = 0; c < cfg.n_country; ++c) {
    for (int o = 0; o < cfg.obs_per_country; ++o) {
      const int type = 1 + type_dist(rng);
      Eigen::VectorXd eta = truth.beta0 +
                            truth.beta_region.row(c % cfg.n_region).transpose() +
                            truth.u.row(c).transpose();
      if (type >= 2) {
        const double st = truth.sigma_type[type - 2];
        for (int j = 0; j < K; ++j) eta(j) += st * norm(rng);
      }
      Eigen::VectorXd p = softmax_with_reference(eta);
      std::vector<long> y = multinomial(rng, d_total, p);

      ObservationRecord obs;
      obs.observation_id =
          "C" + std::to_string(c + 1) + "_obs" + std::to_string(o + 1);
      obs.country = regions.countries[c];
      obs.year_start = obs.year_end = cfg.year_start + o;
      obs.source_kind =
          type == 1 ? SourceKind::GreyLiterature : SourceKind::CRVS;
      obs.type_override = type;
      std::vector<bool> miss(kNumMainCauses, false);
      for (int j = 0; j < kNumMainCauses; ++j)
        if (unif(rng) < cfg.missing_rate) miss[j] = true;
      bool all_missing = true;
      for (int j = 0; j < kNumMainCauses; ++j)
        if (!miss[j]) all_missing = false;
      if (all_missing) miss[kReferenceCause] = false;
      Eigen::RowVectorXd row(kNumMainCauses);
      for (int j = 0; j < kNumMainCauses; ++j) {
        obs.missing[j] = miss[j];
        obs.counts[j] = miss[j] ? 0.0 : static_cast<double>(y[j]);
        row(j) = obs.counts[j];
      }

      if (cfg.generate_subs) {
        for (MainCause mc : {MainCause::HEM, MainCause::SEP, MainCause::DIR}) {
          const int m = static_cast<int>(mc);
          if (obs.missing[m] || obs.counts[m] <= 0) continue;
          auto [a, b] = sub_range(mc);
          Eigen::VectorXd dir_p(b - a);
          double total = 0;
          for (int s = 0; s < b - a; ++s) {
            std::gamma_distribution<double> g(1.0, 1.0);
            dir_p(s) = g(rng);
            total += dir_p(s);
          }
          dir_p /= total;
          std::vector<long> ys =
              multinomial(rng, static_cast<long>(obs.counts[m]), dir_p);
          for (int s = a; s < b; ++s) {
            obs.sub_counts[s] = static_cast<double>(ys[s - a]);
            obs.sub_missing[s] = false;
          }
        }
      }

      EnvelopeEstimate env;
      env.country = obs.country;
      env.year = obs.year_start;
      env.d_ring = obs.total() / cfg.coverage;
      env.d_ring_hiv = 0.0;
      env.wpp_female_deaths = 10.0 * env.d_ring;
      sim.inputs.envelopes.add(std::move(env));

      sim.inputs.observations.push_back(std::move(obs));
      count_rows.push_back(row);
      md.country_of_obs.push_back(c);
      md.type_of_obs.push_back(type);
      md.missing.push_back(miss);
    }
  }
  md.counts.resize(static_cast<int>(count_rows.size()), kNumMainCauses);
  for (size_t i = 0; i < count_rows.size(); ++i) md.counts.row(i) = count_rows[i];
  return sim;
}

}  // namespace mcod
