#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "mcod/diagnostics.hpp"
#include "mcod/sampler.hpp"
#include "mcod/stats.hpp"

using namespace mcod;

namespace {

// Gaussian target with precision matrix P.
struct GaussianTarget {
  Eigen::MatrixXd P;
  LogDensityResult operator()(const Eigen::VectorXd& q) const {
    LogDensityResult r;
    r.gradient = -P * q;
    r.value = 0.5 * q.dot(r.gradient);
    return r;
  }
};

PosteriorDraws sample_gaussian(const Eigen::MatrixXd& P, std::uint64_t seed) {
  GaussianTarget t{P};
  return sample(t, static_cast<int>(P.rows()), desk_scale_config(seed));
}

}  // namespace

TEST_CASE("standard multivariate normal target") {
  PosteriorDraws d = sample_gaussian(Eigen::MatrixXd::Identity(5, 5), 1);
  Eigen::MatrixXd flat = d.flat();
  Eigen::VectorXd mean = flat.colwise().mean();
  for (int j = 0; j < 5; ++j)
    CHECK_THAT(mean(j), Catch::Matchers::WithinAbs(0.0, 0.05));
  Eigen::MatrixXd centered = flat.rowwise() - mean.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / (flat.rows() - 1);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      CHECK_THAT(cov(i, j),
                 Catch::Matchers::WithinAbs(i == j ? 1.0 : 0.0, 0.1));
}

TEST_CASE("correlated Gaussian target recovers rho = 0.9") {
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 0.9, 0.9, 1.0;
  PosteriorDraws d = sample_gaussian(cov.inverse(), 2);
  Eigen::MatrixXd flat = d.flat();
  Eigen::VectorXd mean = flat.colwise().mean();
  Eigen::MatrixXd centered = flat.rowwise() - mean.transpose();
  Eigen::MatrixXd s = centered.transpose() * centered / (flat.rows() - 1);
  const double rho = s(0, 1) / std::sqrt(s(0, 0) * s(1, 1));
  CHECK_THAT(rho, Catch::Matchers::WithinAbs(0.9, 0.05));
}

TEST_CASE("draws pass a KS test against the analytic CDF") {
  PosteriorDraws d = sample_gaussian(Eigen::MatrixXd::Identity(1, 1), 3);
  std::vector<double> x;
  Eigen::MatrixXd flat = d.flat();
  for (int i = 0; i < flat.rows(); ++i) x.push_back(flat(i, 0));
  std::sort(x.begin(), x.end());
  double ks = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double f = normal_cdf(x[i]);
    ks = std::max(ks, std::fabs(f - static_cast<double>(i) / x.size()));
    ks = std::max(ks, std::fabs(static_cast<double>(i + 1) / x.size() - f));
  }
  // 1% critical value, n = 2000
  CHECK(ks < 1.63 / std::sqrt(static_cast<double>(x.size())));
}

TEST_CASE("seeded determinism") {
  PosteriorDraws a = sample_gaussian(Eigen::MatrixXd::Identity(3, 3), 7);
  PosteriorDraws b = sample_gaussian(Eigen::MatrixXd::Identity(3, 3), 7);
  REQUIRE(a.n_chains() == b.n_chains());
  for (int c = 0; c < a.n_chains(); ++c)
    CHECK(a.chains[c] == b.chains[c]);

  SECTION("thread count does not change results") {
    GaussianTarget t{Eigen::MatrixXd::Identity(3, 3)};
    SamplerConfig cfg = desk_scale_config(7);
    cfg.threads = 1;
    PosteriorDraws serial = sample(t, 3, cfg);
    for (int c = 0; c < a.n_chains(); ++c)
      CHECK(serial.chains[c] == a.chains[c]);
  }
  SECTION("different seed gives different draws") {
    PosteriorDraws c = sample_gaussian(Eigen::MatrixXd::Identity(3, 3), 8);
    CHECK(a.chains[0] != c.chains[0]);
  }
}

TEST_CASE("leapfrog energy error shrinks quadratically") {
  GaussianTarget t{Eigen::MatrixXd::Identity(2, 2)};
  SamplerConfig cfg = desk_scale_config(1);
  nuts_detail::ChainWorker<GaussianTarget> w(t, 2, cfg, 42);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> norm(0.0, 1.0);
  auto mean_abs_dh = [&](double eps) {
    w.eps = eps;
    double acc = 0;
    const int n = 200;
    for (int i = 0; i < n; ++i) {
      nuts_detail::PhasePoint z;
      z.q = Eigen::VectorXd::NullaryExpr(2, [&](int) { return norm(rng); });
      z.p = Eigen::VectorXd::NullaryExpr(2, [&](int) { return norm(rng); });
      LogDensityResult r = t(z.q);
      z.logp = r.value;
      z.grad = r.gradient;
      const double h0 = w.hamiltonian(z);
      w.leapfrog(z, 1.0);
      acc += std::fabs(w.hamiltonian(z) - h0);
    }
    return acc / n;
  };
  CHECK(mean_abs_dh(0.2) >= 3.0 * mean_abs_dh(0.1));
}

TEST_CASE("diagnostics oracle behavior") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> norm(0.0, 1.0);
  auto noise_chains = [&](int m, int n, double mean_shift_last) {
    PosteriorDraws d;
    d.parameter_names = {"x"};
    for (int c = 0; c < m; ++c) {
      Eigen::MatrixXd chain(n, 1);
      const double shift = (c == m - 1) ? mean_shift_last : 0.0;
      for (int i = 0; i < n; ++i) chain(i, 0) = norm(rng) + shift;
      d.chains.push_back(chain);
    }
    d.divergence_count.assign(m, 0);
    d.max_depth_count.assign(m, 0);
    d.step_size.assign(m, 1.0);
    return d;
  };

  SECTION("white-noise chains are clean") {
    Diagnostics diag = diagnose(noise_chains(4, 500, 0.0));
    CHECK(diag.max_rhat >= 0.99);
    CHECK(diag.max_rhat < 1.01);
    CHECK(diag.min_ess > 100);
    CHECK(diag.pass);
  }
  SECTION("shifted chain is flagged") {
    Diagnostics diag = diagnose(noise_chains(4, 500, 5.0));
    CHECK(diag.max_rhat > 1.1);
    CHECK_FALSE(diag.pass);
  }
  SECTION("single chain is rejected") {
    CHECK_THROWS_MATCHES(diagnose(noise_chains(1, 500, 0.0)), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == "InsufficientDraws";
                         }));
  }
  SECTION("too-short chains are rejected") {
    CHECK_THROWS_AS(diagnose(noise_chains(2, 2, 0.0)), Error);
  }
}
