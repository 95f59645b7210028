#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "mcod/errors.hpp"
#include "mcod/sampler.hpp"
#include "mcod/stats.hpp"

namespace mcod {

struct DiagnosticRow {
  std::string parameter;
  double rhat = 0;
  double ess = 0;
};

struct Diagnostics {
  std::vector<DiagnosticRow> rows;
  double max_rhat = 0;
  double min_ess = 0;
  bool pass = false;  // all R-hat < 1.01 and ESS > 100
};

namespace diag_detail {

// Split each chain in half; returns M sequences of equal length.
inline std::vector<Eigen::VectorXd> split_chains(
    const std::vector<Eigen::VectorXd>& chains) {
  std::vector<Eigen::VectorXd> out;
  const int half = static_cast<int>(chains[0].size()) / 2;
  for (const auto& c : chains) {
    out.push_back(c.head(half));
    out.push_back(c.segment(half, half));
  }
  return out;
}

// Pooled average ranks -> normal quantiles (blom offset).
inline std::vector<Eigen::VectorXd> rank_normalize(
    const std::vector<Eigen::VectorXd>& seqs) {
  const int m = static_cast<int>(seqs.size());
  const int n = static_cast<int>(seqs[0].size());
  const long total = static_cast<long>(m) * n;
  std::vector<std::pair<double, long>> vals;
  vals.reserve(total);
  for (int c = 0; c < m; ++c)
    for (int i = 0; i < n; ++i)
      vals.push_back({seqs[c](i), static_cast<long>(c) * n + i});
  std::sort(vals.begin(), vals.end());
  std::vector<double> rank(total);
  long i = 0;
  while (i < total) {
    long j = i;
    while (j + 1 < total && vals[j + 1].first == vals[i].first) ++j;
    const double avg = 0.5 * (i + j) + 1.0;  // average 1-based rank for ties
    for (long k = i; k <= j; ++k) rank[vals[k].second] = avg;
    i = j + 1;
  }
  std::vector<Eigen::VectorXd> out(m, Eigen::VectorXd(n));
  for (int c = 0; c < m; ++c)
    for (int k = 0; k < n; ++k)
      out[c](k) = normal_quantile((rank[static_cast<long>(c) * n + k] - 0.375) /
                                  (total + 0.25));
  return out;
}

struct ChainStats {
  double w = 0;         // mean within-chain variance
  double var_plus = 0;  // marginal posterior variance estimate
  double rhat = 0;
};

inline ChainStats basic_stats(const std::vector<Eigen::VectorXd>& seqs) {
  const int m = static_cast<int>(seqs.size());
  const int n = static_cast<int>(seqs[0].size());
  Eigen::VectorXd means(m), vars(m);
  for (int c = 0; c < m; ++c) {
    means(c) = seqs[c].mean();
    vars(c) = (seqs[c].array() - means(c)).square().sum() / (n - 1);
  }
  const double grand = means.mean();
  const double b = n * (means.array() - grand).square().sum() / (m - 1);
  ChainStats s;
  s.w = vars.mean();
  s.var_plus = (n - 1.0) / n * s.w + b / n;
  s.rhat = s.w > 0 ? std::sqrt(s.var_plus / s.w)
                   : (b > 0 ? std::numeric_limits<double>::infinity() : 1.0);
  return s;
}

// Bulk ESS on rank-normalized split chains, Geyer initial-monotone-sequence
// truncation of the combined autocorrelation.
inline double ess_bulk(const std::vector<Eigen::VectorXd>& seqs) {
  const int m = static_cast<int>(seqs.size());
  const int n = static_cast<int>(seqs[0].size());
  ChainStats s = basic_stats(seqs);
  if (s.var_plus <= 0) return 0.0;
  std::vector<Eigen::VectorXd> centered(m);
  for (int c = 0; c < m; ++c) centered[c] = seqs[c].array() - seqs[c].mean();
  auto mean_acov = [&](int t) {
    double acc = 0;
    for (int c = 0; c < m; ++c)
      acc += centered[c].head(n - t).dot(centered[c].tail(n - t)) / n;
    return acc / m;
  };
  // rho_t paired (Geyer), truncated at the first negative pair and made
  // monotone non-increasing.
  double tau = 0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (int t = 0; t + 1 < n; t += 2) {
    const double rho_even =
        t == 0 ? 1.0 : 1.0 - (s.w - mean_acov(t)) / s.var_plus;
    const double rho_odd = 1.0 - (s.w - mean_acov(t + 1)) / s.var_plus;
    double pair = rho_even + rho_odd;
    if (pair < 0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += pair;
  }
  tau = std::max(2.0 * tau - 1.0, 1.0 / std::log10(static_cast<double>(m) * n + 10));
  return static_cast<double>(m) * n / tau;
}

}  // namespace diag_detail

// Rank-normalized split-chain R-hat and bulk ESS for every parameter.
inline Diagnostics diagnose(const PosteriorDraws& draws) {
  if (draws.n_chains() < 2)
    throw insufficient_draws("need >= 2 chains for diagnostics");
  if (draws.n_samples() < 4)
    throw insufficient_draws("need >= 4 post-warmup draws per chain");

  Diagnostics d;
  d.max_rhat = 0;
  d.min_ess = std::numeric_limits<double>::infinity();
  for (int p = 0; p < draws.dim(); ++p) {
    std::vector<Eigen::VectorXd> chains;
    for (int c = 0; c < draws.n_chains(); ++c)
      chains.push_back(draws.chains[c].col(p));
    auto split = diag_detail::split_chains(chains);
    auto z = diag_detail::rank_normalize(split);
    DiagnosticRow row;
    row.parameter = p < static_cast<int>(draws.parameter_names.size())
                        ? draws.parameter_names[p]
                        : "theta[" + std::to_string(p + 1) + "]";
    row.rhat = diag_detail::basic_stats(z).rhat;
    row.ess = diag_detail::ess_bulk(z);
    d.max_rhat = std::max(d.max_rhat, row.rhat);
    d.min_ess = std::min(d.min_ess, row.ess);
    d.rows.push_back(std::move(row));
  }
  d.pass = d.max_rhat < 1.01 && d.min_ess > 100.0;
  return d;
}

}  // namespace mcod
