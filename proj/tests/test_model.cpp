#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "mcod/model.hpp"
#include "mcod/sampler.hpp"
#include "mcod/simulate.hpp"

using namespace mcod;

namespace {

// Small generic instance builder.
ModelData make_data(int n_cat, int n_region, int n_country, int n_obs,
                    bool quality, std::uint64_t seed, double missing_rate = 0.0) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> count(0, 20);
  std::uniform_real_distribution<double> unif(0, 1);
  ModelData d;
  d.n_cat = n_cat;
  d.n_region = n_region;
  d.n_country = n_country;
  d.quality_terms = quality;
  for (int c = 0; c < n_country; ++c)
    d.region_of_country.push_back(c % n_region);
  d.counts.resize(n_obs, n_cat);
  for (int i = 0; i < n_obs; ++i) {
    d.country_of_obs.push_back(i % n_country);
    d.type_of_obs.push_back(1 + i % 4);
    std::vector<bool> miss(n_cat, false);
    for (int j = 0; j < n_cat; ++j) {
      miss[j] = unif(rng) < missing_rate;
      d.counts(i, j) = count(rng);
    }
    bool all = true;
    for (int j = 0; j < n_cat; ++j)
      if (!miss[j]) all = false;
    if (all) miss[0] = false;
    d.missing.push_back(miss);
  }
  return d;
}

Eigen::VectorXd random_theta(const Model& m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> norm(0.0, 0.5);
  Eigen::VectorXd th(m.dim());
  for (int i = 0; i < m.dim(); ++i) th(i) = norm(rng);
  return th;
}

// Poisson likelihood with the per-observation normalizers profiled out in
// closed form: exp(phi_hat) = d_i / sum of non-missing g.
double profiled_poisson(const Model& m, Eigen::VectorXd th) {
  const ParameterLayout& l = m.layout();
  const ModelData& d = m.data();
  UnpackedParams up = m.unpack(th);
  for (int i = 0; i < l.n_obs; ++i) {
    double total = 0, gsum = 0;
    for (int j = 0; j < d.n_cat; ++j) {
      if (d.missing[i][j]) continue;
      total += d.counts(i, j);
      gsum += std::exp(j == d.n_cat - 1 ? 0.0 : m.eta(up, i, j));
    }
    th(l.phi_off + i) = total > 0 ? std::log(total / gsum) : -30.0;
  }
  return m.log_likelihood_poisson(m.unpack(th));
}

}  // namespace

TEST_CASE("eta composes the documented terms") {
  ModelData d = make_data(3, 1, 1, 2, true, 1);
  d.type_of_obs = {1, 3};
  Model m(d);
  const ParameterLayout& l = m.layout();
  Eigen::VectorXd th = Eigen::VectorXd::Zero(m.dim());
  th(l.beta0_off) = 0.5;
  th(l.braw_off) = -0.2;  // sigma_beta = exp(0) = 1, so beta_region = -0.2
  th(l.uraw_off) = 0.1;   // v = 1, L = I, so u = 0.1
  UnpackedParams up = m.unpack(th);

  SECTION("type 1: no quality term") {
    CHECK_THAT(m.eta(up, 0, 0), Catch::Matchers::WithinAbs(0.4, 1e-12));
  }
  SECTION("type 3: quality term included") {
    th(l.lst_off + 1) = std::log(0.3);  // sigma_3
    th(l.qraw_off) = 1.0;               // q block of obs 1
    up = m.unpack(th);
    CHECK_THAT(m.eta(up, 1, 0), Catch::Matchers::WithinAbs(0.7, 1e-12));
  }
  SECTION("all parameters zero give uniform proportions") {
    up = m.unpack(Eigen::VectorXd::Zero(m.dim()));
    for (int j = 0; j < 2; ++j) CHECK(m.eta(up, 0, j) == 0.0);
  }
}

TEST_CASE("Poisson likelihood hand value") {
  ModelData d = make_data(2, 1, 1, 1, false, 1);
  d.counts(0, 0) = 3;
  d.counts(0, 1) = 1;
  Model m(d);
  UnpackedParams up = m.unpack(Eigen::VectorXd::Zero(m.dim()));
  // y=(3,1), eta=0, phi=0: value = 0 - 2*1 = -2
  CHECK_THAT(m.log_likelihood_poisson(up), Catch::Matchers::WithinAbs(-2.0, 1e-12));
}

TEST_CASE("missing categories are omitted entirely") {
  ModelData d = make_data(4, 2, 3, 5, true, 7, 0.3);
  d.missing[2][1] = true;
  Model m(d);
  Eigen::VectorXd th = random_theta(m, 3);
  LogDensityResult base = m.log_posterior_and_gradient(th);
  ModelData d2 = d;
  d2.counts(2, 1) += 17.0;  // perturb a missing count
  Model m2(d2);
  LogDensityResult pert = m2.log_posterior_and_gradient(th);
  CHECK(base.value == pert.value);
  CHECK((base.gradient - pert.gradient).norm() == 0.0);
}

TEST_CASE("reduced multinomial reference cases") {
  ModelData d = make_data(7, 1, 1, 1, false, 1);
  for (int j = 0; j < 7; ++j) d.counts(0, j) = 2;
  SECTION("uniform case") {
    Model m(d);
    UnpackedParams up = m.unpack(Eigen::VectorXd::Zero(m.dim()));
    CHECK_THAT(m.log_likelihood_multinomial_reference(up),
               Catch::Matchers::WithinAbs(14.0 * std::log(1.0 / 7.0), 1e-10));
  }
  SECTION("renormalization over 6 categories when one is missing") {
    d.missing[0][0] = true;
    d.counts(0, 0) = 0;
    Model m(d);
    UnpackedParams up = m.unpack(Eigen::VectorXd::Zero(m.dim()));
    CHECK_THAT(m.log_likelihood_multinomial_reference(up),
               Catch::Matchers::WithinAbs(12.0 * std::log(1.0 / 6.0), 1e-10));
  }
}

TEST_CASE("profiled Poisson differs from the multinomial by a constant") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    ModelData d = make_data(4, 2, 3, 4, false, seed, 0.25);
    Model m(d);
    Eigen::VectorXd th1 = random_theta(m, seed * 7 + 1);
    Eigen::VectorXd th2 = random_theta(m, seed * 7 + 2);
    const double dp = profiled_poisson(m, th1) - profiled_poisson(m, th2);
    const double dm = m.log_likelihood_multinomial_reference(m.unpack(th1)) -
                      m.log_likelihood_multinomial_reference(m.unpack(th2));
    CHECK_THAT(dp, Catch::Matchers::WithinAbs(dm, 1e-8));
  }
}

TEST_CASE("scale prior log-density ratio") {
  ModelData d = make_data(7, 1, 1, 2, true, 1);
  d.type_of_obs = {2, 2};
  Model m(d);
  const ParameterLayout& l = m.layout();
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(m.dim());
  Eigen::VectorXd hi = lo;
  lo(l.lst_off) = std::log(0.25);
  hi(l.lst_off) = std::log(0.5);
  // Normal(0, 0.25^2) density ratio, after removing the log-scale Jacobian:
  // log p(0.25) - log p(0.5) = (0.5^2 - 0.25^2) / (2 * 0.25^2) = 1.5
  const double diff = (m.log_prior(lo) - lo(l.lst_off)) -
                      (m.log_prior(hi) - hi(l.lst_off));
  CHECK_THAT(diff, Catch::Matchers::WithinAbs(1.5, 1e-10));
}

TEST_CASE("analytic gradient matches finite differences") {
  ModelData d = make_data(3, 2, 2, 4, true, 5, 0.2);
  Model m(d);
  std::mt19937_64 rng(99);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd th = random_theta(m, 100 + rep);
    LogDensityResult r = m.log_posterior_and_gradient(th);
    CHECK_THAT(r.value, Catch::Matchers::WithinAbs(
                            m.log_prior(th) +
                                m.log_likelihood_poisson(m.unpack(th)),
                            1e-9));
    const double h = 1e-6;
    for (int i = 0; i < m.dim(); ++i) {
      Eigen::VectorXd tp = th, tm = th;
      tp(i) += h;
      tm(i) -= h;
      const double fd = (m.log_posterior(tp) - m.log_posterior(tm)) / (2 * h);
      const double scale = std::max({1.0, std::fabs(fd), std::fabs(r.gradient(i))});
      CHECK_THAT(r.gradient(i) / scale,
                 Catch::Matchers::WithinAbs(fd / scale, 1e-5));
    }
  }
}

TEST_CASE("log density is deterministic") {
  ModelData d = make_data(5, 2, 4, 6, true, 21, 0.1);
  Model m(d);
  Eigen::VectorXd th = random_theta(m, 77);
  LogDensityResult a = m.log_posterior_and_gradient(th);
  LogDensityResult b = m.log_posterior_and_gradient(th);
  CHECK(a.value == b.value);
  CHECK((a.gradient - b.gradient).norm() == 0.0);
}

TEST_CASE("correlation prior matches the analytic construction") {
  // Sampling the prior-only model and building correlations directly from
  // independent canonical partial correlations must agree in distribution
  // (LKJ(1) = uniform over correlation matrices).
  ModelData d;
  d.n_cat = 4;  // K = 3
  d.n_region = 1;
  d.n_country = 0;
  d.quality_terms = false;
  d.beta0_prior_sd = 1.0;  // keep the prior proper for sampling
  d.counts.resize(0, 4);
  Model m(d);
  auto target = [&m](const Eigen::VectorXd& th) {
    return m.log_posterior_and_gradient(th);
  };
  SamplerConfig cfg = desk_scale_config(1234);
  cfg.samples = 1000;
  PosteriorDraws draws = sample(target, m.dim(), cfg);
  Eigen::MatrixXd flat = draws.flat();

  std::mt19937_64 rng(555);
  const int n_direct = 4000;
  for (int entry = 0; entry < 3; ++entry) {
    std::vector<double> sampled, direct;
    for (int i = 0; i < flat.rows(); ++i) {
      Eigen::VectorXd z =
          flat.row(i).segment(m.layout().omega_off, 3).array().tanh();
      Eigen::MatrixXd L = Model::cholesky_from_cpc(z, 3);
      Eigen::MatrixXd corr = L * L.transpose();
      sampled.push_back(entry == 0 ? corr(1, 0)
                                   : entry == 1 ? corr(2, 0) : corr(2, 1));
    }
    for (int i = 0; i < n_direct; ++i) {
      Eigen::VectorXd z = sim_detail::lkj_cpc(rng, 3);
      Eigen::MatrixXd L = Model::cholesky_from_cpc(z, 3);
      Eigen::MatrixXd corr = L * L.transpose();
      direct.push_back(entry == 0 ? corr(1, 0)
                                  : entry == 1 ? corr(2, 0) : corr(2, 1));
    }
    std::sort(sampled.begin(), sampled.end());
    std::sort(direct.begin(), direct.end());
    // two-sample KS on the correlation marginal
    double ks = 0;
    size_t a = 0, b = 0;
    while (a < sampled.size() && b < direct.size()) {
      if (sampled[a] <= direct[b]) ++a;
      else ++b;
      ks = std::max(ks, std::fabs(static_cast<double>(a) / sampled.size() -
                                  static_cast<double>(b) / direct.size()));
    }
    const double crit = 1.63 * std::sqrt(1.0 / sampled.size() +
                                         1.0 / direct.size());
    INFO("entry " << entry << " ks " << ks << " crit " << crit);
    CHECK(ks < crit);
  }
}

TEST_CASE("model data validation") {
  ModelData d = make_data(3, 1, 1, 1, false, 1);
  SECTION("all-missing observation rejected") {
    d.missing[0] = {true, true, true};
    CHECK_THROWS_AS(Model(d), Error);
  }
  SECTION("negative count rejected") {
    d.counts(0, 0) = -1;
    CHECK_THROWS_AS(Model(d), Error);
  }
  SECTION("bad type rejected when quality terms active") {
    d.quality_terms = true;
    d.type_of_obs = {5};
    CHECK_THROWS_AS(Model(d), Error);
  }
}
