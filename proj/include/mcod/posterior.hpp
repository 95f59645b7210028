#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "mcod/errors.hpp"
#include "mcod/model.hpp"
#include "mcod/records.hpp"
#include "mcod/stats.hpp"

namespace mcod {

// Constrained per-draw quantities needed to build estimates.
struct DrawView {
  Eigen::VectorXd beta0;        // K
  Eigen::MatrixXd beta_region;  // R x K
  Eigen::VectorXd v;            // K
  Eigen::MatrixXd L;            // K x K
  Eigen::MatrixXd u;            // C x K
};

inline std::vector<DrawView> extract_draws(const Model& model,
                                           const Eigen::MatrixXd& flat) {
  std::vector<DrawView> out;
  out.reserve(flat.rows());
  for (int d = 0; d < flat.rows(); ++d) {
    UnpackedParams up = model.unpack(flat.row(d).transpose());
    DrawView v;
    v.beta0 = std::move(up.beta0);
    v.beta_region = std::move(up.beta_region);
    v.v = std::move(up.v);
    v.L = std::move(up.L);
    v.u = std::move(up.u);
    out.push_back(std::move(v));
  }
  return out;
}

inline Eigen::VectorXd softmax_with_reference(const Eigen::VectorXd& eta) {
  const int K = static_cast<int>(eta.size());
  Eigen::VectorXd g(K + 1);
  const double m = std::max(0.0, eta.maxCoeff());
  for (int j = 0; j < K; ++j) g(j) = std::exp(eta(j) - m);
  g(K) = std::exp(-m);  // reference category, eta = 0
  return g / g.sum();
}

// Coverage-weighted true country distribution: the fitted country effect
// enters with weight `weight`, a fresh generic realization of the country
// effect (drawn from that draw's Sigma) with weight 1 - weight. One fresh
// realization per (draw, country), RNG streams keyed so results are
// order-independent.
inline Eigen::MatrixXd true_country_proportions(
    const std::vector<DrawView>& draws, int country, int region, double weight,
    std::uint64_t seed) {
  if (draws.empty()) return {};
  const int K = static_cast<int>(draws[0].beta0.size());
  Eigen::MatrixXd out(static_cast<int>(draws.size()), K + 1);
  std::normal_distribution<double> norm(0.0, 1.0);
  for (size_t d = 0; d < draws.size(); ++d) {
    const DrawView& dv = draws[d];
    Eigen::VectorXd eta =
        dv.beta0 + dv.beta_region.row(region).transpose() +
        weight * dv.u.row(country).transpose();
    if (weight < 1.0) {
      std::mt19937_64 rng(stream_seed(seed, d, country));
      Eigen::VectorXd xi(K);
      for (int j = 0; j < K; ++j) xi(j) = norm(rng);
      Eigen::VectorXd u_tilde = dv.v.cwiseProduct(dv.L * xi);
      eta += (1.0 - weight) * u_tilde;
    }
    out.row(d) = softmax_with_reference(eta);
  }
  return out;
}

// Subcause version: identical construction with weight z * w.
inline Eigen::MatrixXd subcause_distribution(const std::vector<DrawView>& draws,
                                             int country, int region, double z,
                                             double w, std::uint64_t seed) {
  return true_country_proportions(draws, country, region, z * w, seed);
}

// sd over observations of (observed HIV proportion - MMEIG HIV proportion).
inline double sigma_hiv_from_observations(
    const std::vector<ObservationRecord>& obs_list, const EnvelopeSet& envs) {
  std::vector<double> diffs;
  for (const auto& obs : obs_list) {
    if (!obs.hiv_deaths_reported) continue;
    const EnvelopeEstimate env = envs.for_observation(obs);
    const double denom_ring = env.d_ring + env.d_ring_hiv;
    if (denom_ring <= 0) continue;
    const double p_ring = env.d_ring_hiv / denom_ring;
    const double d = obs.total();
    const double d_hiv = *obs.hiv_deaths_reported;
    if (d + d_hiv <= 0) continue;
    diffs.push_back(d_hiv / (d + d_hiv) - p_ring);
  }
  if (diffs.size() < 2) return 0.0;
  double mean = 0;
  for (double x : diffs) mean += x;
  mean /= diffs.size();
  double ss = 0;
  for (double x : diffs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (diffs.size() - 1));
}

struct CountryYearDistribution {
  std::string country;
  int year = 0;
  Eigen::MatrixXd d_prime;  // draws x 7, HIV-inclusive death counts
  Eigen::MatrixXd p_prime;  // draws x 7, normalized proportions
};

// Folds the externally estimated HIV/AIDS deaths into the IND category:
// counts are reconstructed from the HIV-omitted proportions and the envelope,
// a (truncated-normal) HIV proportion draw is added to IND, and the counts
// renormalized.
inline CountryYearDistribution incorporate_hiv(const Eigen::MatrixXd& p_star,
                                               const EnvelopeEstimate& env,
                                               double sigma_hiv,
                                               std::uint64_t seed) {
  const int n_draws = static_cast<int>(p_star.rows());
  const int n_cat = static_cast<int>(p_star.cols());
  const int ind = static_cast<int>(MainCause::IND);
  const double denom = env.d_ring_hiv + env.d_ring;
  const double p_ring_hiv = denom > 0 ? env.d_ring_hiv / denom : 0.0;

  CountryYearDistribution out;
  out.country = env.country;
  out.year = env.year;
  out.d_prime.resize(n_draws, n_cat);
  out.p_prime.resize(n_draws, n_cat);
  for (int d = 0; d < n_draws; ++d) {
    std::mt19937_64 rng(stream_seed(seed, d, mix64(env.year)));
    const double p_hiv =
        truncated_normal(rng, p_ring_hiv, p_ring_hiv * sigma_hiv, 0.0, 1.0);
    const double d_hiv = p_hiv * (env.d_ring_hiv + env.d_ring);
    Eigen::VectorXd counts = p_star.row(d).transpose() * env.d_ring;
    counts(ind) += d_hiv;
    out.d_prime.row(d) = counts;
    const double total = counts.sum();
    out.p_prime.row(d) = total > 0 ? (counts / total).transpose().eval()
                                   : p_star.row(d);
  }
  return out;
}

struct AggregateDistribution {
  std::string scope;        // SDG region name or "global"
  int period_start = 0, period_end = 0;
  Eigen::MatrixXd d_prime;  // draws x 7, aggregated counts
  Eigen::MatrixXd p_prime;  // draws x 7
};

// Sums country-year HIV-inclusive counts within each SDG region over the
// period, then normalizes; the global distribution aggregates the regional
// counts. `sdg_of_country` maps each CountryYearDistribution's country.
inline std::vector<AggregateDistribution> aggregate(
    const std::vector<CountryYearDistribution>& dists,
    const std::vector<int>& sdg_of_dist,
    const std::vector<std::string>& sdg_names, int period_start,
    int period_end) {
  if (dists.empty()) throw missing_country_year("no country-year distributions");
  const int n_draws = static_cast<int>(dists[0].d_prime.rows());
  const int n_cat = static_cast<int>(dists[0].d_prime.cols());
  std::vector<AggregateDistribution> out(sdg_names.size() + 1);
  for (size_t h = 0; h < sdg_names.size(); ++h) {
    out[h].scope = sdg_names[h];
    out[h].d_prime = Eigen::MatrixXd::Zero(n_draws, n_cat);
  }
  out.back().scope = "global";
  out.back().d_prime = Eigen::MatrixXd::Zero(n_draws, n_cat);
  for (auto& a : out) {
    a.period_start = period_start;
    a.period_end = period_end;
  }
  for (size_t i = 0; i < dists.size(); ++i) {
    if (dists[i].year < period_start || dists[i].year > period_end) continue;
    out[sdg_of_dist[i]].d_prime += dists[i].d_prime;
  }
  for (size_t h = 0; h < sdg_names.size(); ++h)
    out.back().d_prime += out[h].d_prime;
  for (auto& a : out) {
    a.p_prime.resize(n_draws, n_cat);
    for (int d = 0; d < n_draws; ++d) {
      const double total = a.d_prime.row(d).sum();
      a.p_prime.row(d) = total > 0
                             ? (a.d_prime.row(d) / total).eval()
                             : Eigen::RowVectorXd::Constant(n_cat, 1.0 / n_cat);
    }
  }
  return out;
}

struct SummaryRow {
  double median = 0, lo95 = 0, hi95 = 0;
};

inline double quantile(std::vector<double> x, double p) {
  if (x.empty()) return 0;
  std::sort(x.begin(), x.end());
  const double pos = p * (x.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, x.size() - 1);
  const double frac = pos - lo;
  return x[lo] * (1 - frac) + x[hi] * frac;
}

// Pointwise median and 95% credible interval per column of a draws matrix.
inline std::vector<SummaryRow> summarize(const Eigen::MatrixXd& draws) {
  std::vector<SummaryRow> out;
  for (int j = 0; j < draws.cols(); ++j) {
    std::vector<double> col(draws.col(j).data(),
                            draws.col(j).data() + draws.rows());
    SummaryRow s;
    s.median = quantile(col, 0.5);
    s.lo95 = quantile(col, 0.025);
    s.hi95 = quantile(col, 0.975);
    out.push_back(s);
  }
  return out;
}

}  // namespace mcod
