#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mcod/errors.hpp"

namespace mcod {

// Data for one multinomial model instance: the 7-category main model
// (quality_terms = true) or one of the subcause models (3 or 4 categories,
// no quality terms). The last category is always the log-ratio reference.
struct ModelData {
  int n_cat = 0;
  int n_region = 0;
  int n_country = 0;
  bool quality_terms = false;
  // 0 => flat (improper) prior on the intercepts; > 0 => Normal(0, sd^2).
  // The proper option exists for generative self-consistency checks.
  double beta0_prior_sd = 0.0;
  std::vector<int> region_of_country;        // size n_country
  std::vector<int> country_of_obs;           // size n_obs
  std::vector<int> type_of_obs;              // size n_obs, values 1..4
  Eigen::MatrixXd counts;                    // n_obs x n_cat, y_{i,j} >= 0
  std::vector<std::vector<bool>> missing;    // n_obs x n_cat, true = in J_i

  int n_obs() const { return static_cast<int>(counts.rows()); }

  void validate() const {
    if (n_cat < 2) throw domain_error("model needs at least 2 categories");
    if (static_cast<int>(region_of_country.size()) != n_country)
      throw domain_error("region_of_country size mismatch");
    if (static_cast<int>(country_of_obs.size()) != n_obs() ||
        static_cast<int>(missing.size()) != n_obs())
      throw domain_error("observation index size mismatch");
    for (int r : region_of_country)
      if (r < 0 || r >= n_region) throw domain_error("region index out of range");
    for (int i = 0; i < n_obs(); ++i) {
      if (country_of_obs[i] < 0 || country_of_obs[i] >= n_country)
        throw domain_error("country index out of range");
      bool any = false;
      for (int j = 0; j < n_cat; ++j) {
        if (!missing[i][j]) {
          any = true;
          if (counts(i, j) < 0) throw domain_error("negative count");
        }
      }
      if (!any) throw domain_error("observation with all categories missing");
    }
    if (quality_terms)
      for (int t : type_of_obs)
        if (t < 1 || t > 4) throw domain_error("quality type out of range");
  }
};

// Layout of the unconstrained parameter vector. Scales enter on the log
// scale; the correlation matrix through the canonical partial-correlation
// bijection to its Cholesky factor; country and region effects are
// non-centered.
struct ParameterLayout {
  int K = 0;  // n_cat - 1 non-reference categories
  int n_region = 0, n_country = 0, n_obs = 0;
  bool quality_terms = false;
  int n_corr = 0;   // K*(K-1)/2
  int n_q_obs = 0;  // observations carrying a q block (types 2-4)
  std::vector<int> q_block_of_obs;  // -1 when none

  int beta0_off = 0, lsb_off = 0, braw_off = 0, lv_off = 0, omega_off = 0,
      uraw_off = 0, lst_off = 0, qraw_off = 0, phi_off = 0;
  int size = 0;

  static ParameterLayout create(const ModelData& d) {
    ParameterLayout l;
    l.K = d.n_cat - 1;
    l.n_region = d.n_region;
    l.n_country = d.n_country;
    l.n_obs = d.n_obs();
    l.quality_terms = d.quality_terms;
    l.n_corr = l.K * (l.K - 1) / 2;
    l.q_block_of_obs.assign(l.n_obs, -1);
    if (d.quality_terms)
      for (int i = 0; i < l.n_obs; ++i)
        if (d.type_of_obs[i] >= 2) l.q_block_of_obs[i] = l.n_q_obs++;

    int off = 0;
    l.beta0_off = off; off += l.K;
    l.lsb_off = off; off += 1;
    l.braw_off = off; off += l.n_region * l.K;
    l.lv_off = off; off += l.K;
    l.omega_off = off; off += l.n_corr;
    l.uraw_off = off; off += l.n_country * l.K;
    l.lst_off = off; off += d.quality_terms ? 3 : 0;
    l.qraw_off = off; off += l.n_q_obs * l.K;
    l.phi_off = off; off += l.n_obs;
    l.size = off;
    return l;
  }

  int corr_index(int i, int j) const { return i * (i - 1) / 2 + j; }

  std::vector<std::string> names() const {
    std::vector<std::string> n;
    n.reserve(size);
    auto idx = [](const std::string& base, int a) {
      return base + "[" + std::to_string(a + 1) + "]";
    };
    auto idx2 = [](const std::string& base, int a, int b) {
      return base + "[" + std::to_string(a + 1) + "," + std::to_string(b + 1) +
             "]";
    };
    for (int j = 0; j < K; ++j) n.push_back(idx("beta0", j));
    n.push_back("log_sigma_beta");
    for (int r = 0; r < n_region; ++r)
      for (int j = 0; j < K; ++j) n.push_back(idx2("beta_region_raw", r, j));
    for (int j = 0; j < K; ++j) n.push_back(idx("log_v", j));
    for (int i = 1; i < K; ++i)
      for (int j = 0; j < i; ++j) n.push_back(idx2("omega_raw", i, j));
    for (int c = 0; c < n_country; ++c)
      for (int j = 0; j < K; ++j) n.push_back(idx2("u_raw", c, j));
    if (quality_terms)
      for (int t = 2; t <= 4; ++t)
        n.push_back("log_sigma_type[" + std::to_string(t) + "]");
    for (int b = 0; b < n_q_obs; ++b)
      for (int j = 0; j < K; ++j) n.push_back(idx2("q_raw", b, j));
    for (int i = 0; i < n_obs; ++i) n.push_back(idx("phi", i));
    return n;
  }
};

// Constrained-space view of a parameter vector.
struct UnpackedParams {
  Eigen::VectorXd beta0;       // K
  double sigma_beta = 0;
  Eigen::MatrixXd braw;        // n_region x K
  Eigen::MatrixXd beta_region; // n_region x K, sigma_beta * braw
  Eigen::VectorXd v;           // K
  Eigen::VectorXd z;           // canonical partial correlations, tanh(omega_raw)
  Eigen::MatrixXd L;           // K x K Cholesky factor of the correlation matrix
  Eigen::MatrixXd uraw;        // n_country x K
  Eigen::MatrixXd u;           // n_country x K, diag-scaled L * uraw
  std::array<double, 3> sigma_type{};  // types 2, 3, 4
  Eigen::MatrixXd qraw;        // n_q_obs x K
  Eigen::MatrixXd q;           // n_q_obs x K, sigma_type-scaled
  Eigen::VectorXd phi;         // n_obs
};

struct LogDensityResult {
  double value = 0;
  Eigen::VectorXd gradient;
};

class Model {
 public:
  explicit Model(ModelData data)
      : data_(std::move(data)), layout_(ParameterLayout::create(data_)) {
    data_.validate();
    ref_ = data_.n_cat - 1;
  }

  const ModelData& data() const { return data_; }
  const ParameterLayout& layout() const { return layout_; }
  int dim() const { return layout_.size; }

  UnpackedParams unpack(const Eigen::VectorXd& th) const {
    const ParameterLayout& l = layout_;
    UnpackedParams up;
    up.beta0 = th.segment(l.beta0_off, l.K);
    up.sigma_beta = std::exp(th(l.lsb_off));
    up.braw = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                             Eigen::Dynamic, Eigen::RowMajor>>(
        th.data() + l.braw_off, l.n_region, l.K);
    up.beta_region = up.sigma_beta * up.braw;
    up.v = th.segment(l.lv_off, l.K).array().exp();
    up.z = th.segment(l.omega_off, l.n_corr).array().tanh();
    up.L = cholesky_from_cpc(up.z, l.K);
    up.uraw = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                             Eigen::Dynamic, Eigen::RowMajor>>(
        th.data() + l.uraw_off, l.n_country, l.K);
    up.u.resize(l.n_country, l.K);
    for (int c = 0; c < l.n_country; ++c)
      up.u.row(c) =
          (up.v.array() * (up.L * up.uraw.row(c).transpose()).array()).matrix();
    if (l.quality_terms)
      for (int t = 0; t < 3; ++t)
        up.sigma_type[t] = std::exp(th(l.lst_off + t));
    up.qraw = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                             Eigen::Dynamic, Eigen::RowMajor>>(
        th.data() + l.qraw_off, l.n_q_obs, l.K);
    up.q.resize(l.n_q_obs, l.K);
    for (int i = 0; i < layout_.n_obs; ++i) {
      int b = l.q_block_of_obs[i];
      if (b >= 0)
        up.q.row(b) = up.sigma_type[data_.type_of_obs[i] - 2] * up.qraw.row(b);
    }
    up.phi = th.segment(l.phi_off, l.n_obs);
    return up;
  }

  // Log-ratio log(p_{i,j} / p_{i,ref}) for non-reference category j.
  double eta(const UnpackedParams& up, int obs, int j) const {
    const int c = data_.country_of_obs[obs];
    const int r = data_.region_of_country[c];
    double e = up.beta0(j) + up.beta_region(r, j) + up.u(c, j);
    int b = layout_.q_block_of_obs[obs];
    if (b >= 0) e += up.q(b, j);
    return e;
  }

  // Poisson form of the multinomial likelihood: per observation, non-missing
  // counts are independent Poissons with mean g_{i,j} exp(phi_i); missing
  // categories are simply omitted. Log-gamma normalizers are dropped.
  double log_likelihood_poisson(const UnpackedParams& up) const {
    double lp = 0;
    for (int i = 0; i < layout_.n_obs; ++i) {
      const double phi = up.phi(i);
      for (int j = 0; j < data_.n_cat; ++j) {
        if (data_.missing[i][j]) continue;
        const double e = (j == ref_) ? 0.0 : eta(up, i, j);
        lp += data_.counts(i, j) * (e + phi) - std::exp(e + phi);
      }
    }
    return lp;
  }

  // Reduced-multinomial reference likelihood: probabilities renormalized over
  // the non-missing categories. Test oracle for the Poisson form.
  double log_likelihood_multinomial_reference(const UnpackedParams& up) const {
    double lp = 0;
    for (int i = 0; i < layout_.n_obs; ++i) {
      double denom = 0;
      for (int j = 0; j < data_.n_cat; ++j) {
        if (data_.missing[i][j]) continue;
        denom += std::exp(j == ref_ ? 0.0 : eta(up, i, j));
      }
      for (int j = 0; j < data_.n_cat; ++j) {
        if (data_.missing[i][j]) continue;
        const double e = (j == ref_) ? 0.0 : eta(up, i, j);
        lp += data_.counts(i, j) * (e - std::log(denom));
      }
    }
    return lp;
  }

  // Log prior in the unconstrained space, including all change-of-variable
  // Jacobians. Additive constants are dropped throughout.
  double log_prior(const Eigen::VectorXd& th) const {
    const ParameterLayout& l = layout_;
    const UnpackedParams up = unpack(th);
    double lp = 0;
    if (data_.beta0_prior_sd > 0)
      lp -= 0.5 * up.beta0.squaredNorm() /
            (data_.beta0_prior_sd * data_.beta0_prior_sd);
    // beta_region non-centered: raw ~ N(0,1), sigma_beta ~ half-Normal(0,1)
    lp -= 0.5 * up.braw.squaredNorm();
    lp += -0.5 * up.sigma_beta * up.sigma_beta + th(l.lsb_off);
    // country effects: raw ~ N(0,1), v ~ half-Normal(0,3), Omega ~ LKJ(1)
    lp -= 0.5 * up.uraw.squaredNorm();
    for (int j = 0; j < l.K; ++j)
      lp += -up.v(j) * up.v(j) / 18.0 + th(l.lv_off + j);
    lp += lkj_and_jacobian(up);
    if (l.quality_terms) {
      for (int t = 0; t < 3; ++t) {
        const double s = up.sigma_type[t];
        lp += -s * s / (2.0 * 0.25 * 0.25) + th(l.lst_off + t);
      }
      lp -= 0.5 * up.qraw.squaredNorm();
    }
    // beta0 (when flat) and phi carry improper flat priors.
    return lp;
  }

  double log_posterior(const Eigen::VectorXd& th) const {
    const UnpackedParams up = unpack(th);
    return log_prior(th) + log_likelihood_poisson(up);
  }

  // Value and exact analytic gradient of the unnormalized log posterior.
  // Non-finite values (overflow at extreme step sizes) are reported as -inf
  // with a zero gradient; the sampler treats these as divergent states.
  LogDensityResult log_posterior_and_gradient(const Eigen::VectorXd& th) const {
    const ParameterLayout& l = layout_;
    const int K = l.K;
    LogDensityResult res;
    res.gradient = Eigen::VectorXd::Zero(l.size);
    const UnpackedParams up = unpack(th);

    double lp = 0;
    Eigen::VectorXd gbeta0 = Eigen::VectorXd::Zero(K);
    Eigen::MatrixXd gb = Eigen::MatrixXd::Zero(l.n_region, K);   // d/d eta by region
    Eigen::MatrixXd gu = Eigen::MatrixXd::Zero(l.n_country, K);  // d/d u(c,j)
    Eigen::MatrixXd gq = Eigen::MatrixXd::Zero(l.n_q_obs, K);    // d/d q(b,j)

    for (int i = 0; i < l.n_obs; ++i) {
      const int c = data_.country_of_obs[i];
      const int r = data_.region_of_country[c];
      const int b = l.q_block_of_obs[i];
      const double phi = up.phi(i);
      double gphi = 0;
      for (int j = 0; j < data_.n_cat; ++j) {
        if (data_.missing[i][j]) continue;
        const double y = data_.counts(i, j);
        const double e = (j == ref_) ? 0.0 : eta(up, i, j);
        const double mean = std::exp(e + phi);
        lp += y * (e + phi) - mean;
        const double s = y - mean;
        gphi += s;
        if (j == ref_) continue;
        gbeta0(j) += s;
        gb(r, j) += s;
        gu(c, j) += s;
        if (b >= 0) gq(b, j) += s;
      }
      res.gradient(l.phi_off + i) = gphi;
    }

    if (!std::isfinite(lp)) {
      res.value = -std::numeric_limits<double>::infinity();
      res.gradient.setZero();
      return res;
    }

    // Intercepts.
    res.gradient.segment(l.beta0_off, K) = gbeta0;
    if (data_.beta0_prior_sd > 0) {
      const double isd2 = 1.0 / (data_.beta0_prior_sd * data_.beta0_prior_sd);
      lp -= 0.5 * up.beta0.squaredNorm() * isd2;
      res.gradient.segment(l.beta0_off, K) -= isd2 * up.beta0;
    }

    // Region effects (non-centered) and their pooled scale.
    lp -= 0.5 * up.braw.squaredNorm();
    const double sb = up.sigma_beta;
    lp += -0.5 * sb * sb + th(l.lsb_off);
    double glsb = -sb * sb + 1.0;
    for (int r = 0; r < l.n_region; ++r)
      for (int j = 0; j < K; ++j) {
        res.gradient(l.braw_off + r * K + j) = sb * gb(r, j) - up.braw(r, j);
        glsb += sb * gb(r, j) * up.braw(r, j);
      }
    res.gradient(l.lsb_off) = glsb;

    // Country effects: u(c,.) = diag(v) L uraw(c,.).
    lp -= 0.5 * up.uraw.squaredNorm();
    Eigen::MatrixXd gu_v = gu;  // gu scaled columnwise by v
    for (int j = 0; j < K; ++j) gu_v.col(j) *= up.v(j);
    // u_raw adjoint: (gu_v * L)(c,k), minus the standard-normal prior pull.
    Eigen::MatrixXd guraw = gu_v * up.L - up.uraw;
    for (int c = 0; c < l.n_country; ++c)
      for (int k = 0; k < K; ++k)
        res.gradient(l.uraw_off + c * K + k) = guraw(c, k);
    // v adjoint (log scale): du(c,j)/dlog v_j = u(c,j); half-Normal(0,3) prior.
    for (int j = 0; j < K; ++j) {
      double g = gu.col(j).dot(up.u.col(j));
      lp += -up.v(j) * up.v(j) / 18.0 + th(l.lv_off + j);
      g += -up.v(j) * up.v(j) / 9.0 + 1.0;
      res.gradient(l.lv_off + j) = g;
    }
    // Cholesky factor adjoint.
    if (K > 1) {
      Eigen::MatrixXd gL = gu_v.transpose() * up.uraw;  // d/dL(j,k), j >= k
      lp += corr_terms_and_gradient(up, gL, res.gradient);
    }

    // Quality error terms.
    if (l.quality_terms) {
      std::array<double, 3> glst{};
      for (int t = 0; t < 3; ++t) {
        const double s = up.sigma_type[t];
        lp += -s * s / 0.125 + th(l.lst_off + t);
        glst[t] = -s * s / 0.0625 + 1.0;
      }
      lp -= 0.5 * up.qraw.squaredNorm();
      for (int i = 0; i < l.n_obs; ++i) {
        const int b = l.q_block_of_obs[i];
        if (b < 0) continue;
        const int t = data_.type_of_obs[i] - 2;
        for (int j = 0; j < K; ++j) {
          res.gradient(l.qraw_off + b * K + j) =
              up.sigma_type[t] * gq(b, j) - up.qraw(b, j);
          glst[t] += up.sigma_type[t] * gq(b, j) * up.qraw(b, j);
        }
      }
      for (int t = 0; t < 3; ++t) res.gradient(l.lst_off + t) = glst[t];
    }

    res.value = lp;
    if (!std::isfinite(lp) || !res.gradient.allFinite()) {
      res.value = -std::numeric_limits<double>::infinity();
      res.gradient.setZero();
    }
    return res;
  }

  // Builds the correlation Cholesky factor from canonical partial
  // correlations z (row-major strictly-lower entries).
  static Eigen::MatrixXd cholesky_from_cpc(const Eigen::VectorXd& z, int K) {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(K, K);
    L(0, 0) = 1.0;
    int idx = 0;
    for (int i = 1; i < K; ++i) {
      double prod = 1.0;
      for (int j = 0; j < i; ++j) {
        const double zij = z(idx++);
        L(i, j) = zij * prod;
        prod *= std::sqrt(1.0 - zij * zij);
      }
      L(i, i) = prod;
    }
    return L;
  }

 private:
  // LKJ(1) density on the Cholesky factor plus the log-Jacobians of
  // (unconstrained x) -> tanh -> (partial correlations z) -> L.
  double lkj_and_jacobian(const UnpackedParams& up) const {
    const int K = layout_.K;
    double lp = 0;
    for (int i = 1; i < K; ++i) lp += (K - 1 - i) * std::log(up.L(i, i));
    int idx = 0;
    for (int i = 1; i < K; ++i)
      for (int j = 0; j < i; ++j) {
        const double z2 = up.z(idx) * up.z(idx);
        // tanh Jacobian, plus the z->L Jacobian for entries with j <= i-2.
        lp += std::log1p(-z2) * (1.0 + 0.5 * (i - 1 - j));
        ++idx;
      }
    return lp;
  }

  // Same terms as lkj_and_jacobian, fused with the adjoint L -> z -> x.
  // `gL` holds d(log posterior)/dL from the likelihood path; the gradient
  // w.r.t. the unconstrained omega entries is written into `grad`.
  double corr_terms_and_gradient(const UnpackedParams& up, Eigen::MatrixXd gL,
                                 Eigen::VectorXd& grad) const {
    const ParameterLayout& l = layout_;
    const int K = l.K;
    double lp = 0;
    for (int i = 1; i < K; ++i) {
      lp += (K - 1 - i) * std::log(up.L(i, i));
      gL(i, i) += (K - 1 - i) / up.L(i, i);
    }
    for (int i = 1; i < K; ++i) {
      // Suffix sums S_j = sum_{m > j, m <= i} gL(i,m) L(i,m).
      std::vector<double> suffix(i + 2, 0.0);
      for (int m = i; m >= 1; --m)
        suffix[m] = suffix[m + 1] + gL(i, m) * up.L(i, m);
      double prefix = 1.0;  // prod_{k < j} sqrt(1 - z_{i,k}^2)
      for (int j = 0; j < i; ++j) {
        const int idx = l.corr_index(i, j);
        const double zij = up.z(idx);
        const double omz2 = 1.0 - zij * zij;
        double gz = gL(i, j) * prefix - zij / omz2 * suffix[j + 1];
        // Jacobian terms, expressed directly in z.
        const double coeff = 1.0 + 0.5 * (i - 1 - j);
        lp += coeff * std::log1p(-zij * zij);
        gz += -2.0 * zij * coeff / omz2;
        grad(l.omega_off + idx) = gz * omz2;  // dz/dx = 1 - z^2
        prefix *= std::sqrt(omz2);
      }
    }
    return lp;
  }

  ModelData data_;
  ParameterLayout layout_;
  int ref_ = 0;
};

}  // namespace mcod
