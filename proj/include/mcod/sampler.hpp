#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "mcod/errors.hpp"
#include "mcod/model.hpp"
#include "mcod/stats.hpp"

namespace mcod {

struct SamplerConfig {
  int chains = 4;
  int warmup = 6000;
  int samples = 4000;
  std::uint64_t seed = 1;
  double target_accept = 0.8;
  int max_tree_depth = 10;
  int threads = 0;  // 0 = one thread per chain, capped at hardware concurrency
  // Optional initialization center (size must equal the target dimension).
  // Chains start from a jittered copy; empty = random inits in (-2, 2).
  // Useful when the posterior mode is far from the origin (e.g. Poisson
  // rate offsets with very large counts).
  Eigen::VectorXd init;
};

// Desk-scale profile for tests and validation runs.
inline SamplerConfig desk_scale_config(std::uint64_t seed) {
  SamplerConfig c;
  c.warmup = 500;
  c.samples = 500;
  c.seed = seed;
  return c;
}

struct PosteriorDraws {
  std::vector<std::string> parameter_names;
  std::vector<Eigen::MatrixXd> chains;  // post-warmup draws, samples x dim
  std::vector<int> divergence_count;
  std::vector<int> max_depth_count;
  std::vector<double> step_size;

  int n_chains() const { return static_cast<int>(chains.size()); }
  int n_samples() const { return chains.empty() ? 0 : static_cast<int>(chains[0].rows()); }
  int dim() const { return chains.empty() ? 0 : static_cast<int>(chains[0].cols()); }

  // All chains stacked, (chains * samples) x dim.
  Eigen::MatrixXd flat() const {
    Eigen::MatrixXd out(n_chains() * n_samples(), dim());
    for (int c = 0; c < n_chains(); ++c)
      out.middleRows(c * n_samples(), n_samples()) = chains[c];
    return out;
  }

  // Fraction of sampling iterations that saturated the tree depth.
  bool max_depth_warning() const {
    long hits = 0, total = 0;
    for (size_t c = 0; c < chains.size(); ++c) {
      hits += max_depth_count[c];
      total += chains[c].rows();
    }
    return total > 0 && hits > total / 10;
  }
};

namespace nuts_detail {

struct PhasePoint {
  Eigen::VectorXd q, p, grad;
  double logp = 0;
};

template <class F>
struct ChainWorker {
  const F& target;
  int dim;
  SamplerConfig cfg;
  std::mt19937_64 rng;
  Eigen::VectorXd inv_mass;  // estimated posterior variances (M^{-1} diagonal)
  double eps = 1.0;
  int divergences = 0, depth_hits = 0;

  // dual-averaging state
  double da_mu = 0, da_log_eps_bar = 0, da_h = 0;
  int da_count = 0;

  // tree-building scratch
  double h0 = 0;
  int n_divergent_tree = 0;
  double sum_alpha = 0;
  int n_alpha = 0;

  ChainWorker(const F& t, int d, const SamplerConfig& c, std::uint64_t chain_seed)
      : target(t), dim(d), cfg(c), rng(chain_seed) {
    inv_mass = Eigen::VectorXd::Ones(dim);
  }

  // Momentum draw from N(0, M) with M = diag(1 / inv_mass).
  void sample_momentum(PhasePoint& z) {
    std::normal_distribution<double> norm(0.0, 1.0);
    z.p.resize(dim);
    for (int i = 0; i < dim; ++i)
      z.p(i) = norm(rng) / std::sqrt(std::max(inv_mass(i), 1e-300));
  }

  double hamiltonian(const PhasePoint& z) const {
    return -z.logp + 0.5 * z.p.dot(inv_mass.cwiseProduct(z.p));
  }

  bool leapfrog(PhasePoint& z, double direction) {
    const double e = direction * eps;
    z.p += 0.5 * e * z.grad;
    z.q += e * inv_mass.cwiseProduct(z.p);
    LogDensityResult r = target(z.q);
    z.logp = r.value;
    z.grad = std::move(r.gradient);
    z.p += 0.5 * e * z.grad;
    return std::isfinite(z.logp);
  }

  struct Tree {
    PhasePoint minus, plus;
    Eigen::VectorXd q_prop, grad_prop;
    double logp_prop = 0;
    double log_sum_w = -std::numeric_limits<double>::infinity();
    bool ok = false;  // false once divergent or U-turned
  };

  static double log_add(double a, double b) {
    if (a < b) std::swap(a, b);
    if (b == -std::numeric_limits<double>::infinity()) return a;
    return a + std::log1p(std::exp(b - a));
  }

  bool no_uturn(const PhasePoint& minus, const PhasePoint& plus) const {
    Eigen::VectorXd dq = plus.q - minus.q;
    return dq.dot(inv_mass.cwiseProduct(minus.p)) > 0 &&
           dq.dot(inv_mass.cwiseProduct(plus.p)) > 0;
  }

  Tree build_tree(const PhasePoint& z, int depth, double direction) {
    if (depth == 0) {
      Tree t;
      PhasePoint z1 = z;
      bool finite = leapfrog(z1, direction);
      const double h = finite ? hamiltonian(z1)
                              : std::numeric_limits<double>::infinity();
      const double log_w = h0 - h;
      const double alpha = std::isfinite(log_w) ? std::min(1.0, std::exp(log_w)) : 0.0;
      sum_alpha += alpha;
      ++n_alpha;
      if (!finite || log_w < -1000.0) {
        ++n_divergent_tree;
        t.ok = false;
        return t;
      }
      t.q_prop = z1.q;
      t.grad_prop = z1.grad;
      t.logp_prop = z1.logp;
      t.minus = z1;
      t.plus = std::move(z1);
      t.log_sum_w = log_w;
      t.ok = true;
      return t;
    }
    Tree first = build_tree(z, depth - 1, direction);
    if (!first.ok) return first;
    const PhasePoint& edge = direction > 0 ? first.plus : first.minus;
    Tree second = build_tree(edge, depth - 1, direction);
    if (!second.ok) {
      first.ok = false;
      return first;
    }
    Tree merged;
    Tree& t = merged;
    t.minus = direction > 0 ? first.minus : second.minus;
    t.plus = direction > 0 ? second.plus : first.plus;
    t.log_sum_w = log_add(first.log_sum_w, second.log_sum_w);
    // multinomial sampling within the merged subtree
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double p_second = std::exp(second.log_sum_w - t.log_sum_w);
    const Tree& chosen = unif(rng) < p_second ? second : first;
    t.q_prop = chosen.q_prop;
    t.grad_prop = chosen.grad_prop;
    t.logp_prop = chosen.logp_prop;
    t.ok = no_uturn(t.minus, t.plus);
    return t;
  }

  // One NUTS transition from q; returns the new position.
  Eigen::VectorXd transition(const Eigen::VectorXd& q0, double logp0,
                             const Eigen::VectorXd& grad0, double& logp_out,
                             Eigen::VectorXd& grad_out) {
    PhasePoint z;
    z.q = q0;
    z.logp = logp0;
    z.grad = grad0;
    sample_momentum(z);
    h0 = hamiltonian(z);
    n_divergent_tree = 0;
    sum_alpha = 0;
    n_alpha = 0;

    PhasePoint minus = z, plus = z;
    Eigen::VectorXd q_sel = z.q;
    double logp_sel = z.logp;
    Eigen::VectorXd grad_sel = z.grad;
    double log_sum_w = 0.0;  // weight of the initial point

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    bool saturated = true;
    for (int depth = 0; depth < cfg.max_tree_depth; ++depth) {
      const double direction = unif(rng) < 0.5 ? 1.0 : -1.0;
      Tree t = build_tree(direction > 0 ? plus : minus, depth, direction);
      if (!t.ok) {
        saturated = false;
        break;
      }
      // biased progressive sampling towards the new subtree
      if (std::log(unif(rng)) < t.log_sum_w - log_sum_w) {
        q_sel = t.q_prop;
        logp_sel = t.logp_prop;
        grad_sel = t.grad_prop;
      }
      log_sum_w = log_add(log_sum_w, t.log_sum_w);
      if (direction > 0) plus = t.plus;
      else minus = t.minus;
      if (!no_uturn(minus, plus)) {
        saturated = false;
        break;
      }
    }
    if (saturated) ++depth_hits;
    if (n_divergent_tree > 0) ++divergences;
    logp_out = logp_sel;
    grad_out = std::move(grad_sel);
    return q_sel;
  }

  double accept_stat() const {
    return n_alpha > 0 ? sum_alpha / n_alpha : 0.0;
  }

  void da_init(double eps0) {
    eps = eps0;
    da_mu = std::log(10.0 * eps0);
    da_log_eps_bar = std::log(eps0);
    da_h = 0;
    da_count = 0;
  }

  void da_update(double alpha) {
    constexpr double gamma = 0.05, t0 = 10.0, kappa = 0.75;
    ++da_count;
    da_h = (1.0 - 1.0 / (da_count + t0)) * da_h +
           (cfg.target_accept - alpha) / (da_count + t0);
    const double log_eps = da_mu - std::sqrt(da_count) / gamma * da_h;
    const double w = std::pow(da_count, -kappa);
    da_log_eps_bar = w * log_eps + (1.0 - w) * da_log_eps_bar;
    eps = std::exp(log_eps);
  }

  void da_finish() { eps = std::exp(da_log_eps_bar); }
};

// Doubling/halving heuristic for the initial step size.
template <class F>
double find_initial_step(ChainWorker<F>& w, const Eigen::VectorXd& q,
                         double logp, const Eigen::VectorXd& grad) {
  w.eps = 1.0;
  PhasePoint z;
  z.q = q;
  z.logp = logp;
  z.grad = grad;
  w.sample_momentum(z);
  const double h_start = w.hamiltonian(z);
  auto log_accept = [&]() {
    PhasePoint z1 = z;
    if (!w.leapfrog(z1, 1.0)) return -std::numeric_limits<double>::infinity();
    return h_start - w.hamiltonian(z1);
  };
  double la = log_accept();
  const double dir = la > std::log(0.5) ? 1.0 : -1.0;
  for (int iter = 0; iter < 50; ++iter) {
    w.eps *= dir > 0 ? 2.0 : 0.5;
    la = log_accept();
    if (dir > 0 ? la <= std::log(0.5) : la > std::log(0.5)) break;
    if (w.eps > 1e7 || w.eps < 1e-10) break;
  }
  return std::min(w.eps, 10.0);
}

struct Welford {
  Eigen::VectorXd mean, m2;
  long n = 0;
  void init(int dim) {
    mean = Eigen::VectorXd::Zero(dim);
    m2 = Eigen::VectorXd::Zero(dim);
    n = 0;
  }
  void add(const Eigen::VectorXd& x) {
    ++n;
    Eigen::VectorXd d = x - mean;
    mean += d / n;
    m2 += d.cwiseProduct(x - mean);
  }
  Eigen::VectorXd variance() const { return m2 / std::max<long>(n - 1, 1); }
};

}  // namespace nuts_detail

// Dynamic-trajectory HMC (NUTS) with dual-averaging step-size adaptation and
// a diagonal mass matrix estimated during warmup. The mass matrix is pooled
// across chains at each adaptation window (all chains share the information
// from every chain's warmup draws), which stabilizes adaptation at short
// warmup lengths. Chains use independent RNG streams derived from the seed
// and the pooling is order-deterministic: identical seed and config give
// bit-identical draws regardless of threading.
template <class F>
PosteriorDraws sample(const F& target, int dim, const SamplerConfig& cfg,
                      std::vector<std::string> parameter_names = {}) {
  using nuts_detail::ChainWorker;
  using nuts_detail::Welford;
  const int n_chains = cfg.chains;

  PosteriorDraws out;
  out.parameter_names = std::move(parameter_names);
  out.chains.resize(n_chains);
  out.divergence_count.assign(n_chains, 0);
  out.max_depth_count.assign(n_chains, 0);
  out.step_size.assign(n_chains, 0.0);

  int threads = cfg.threads > 0
                    ? cfg.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, n_chains));

  std::vector<ChainWorker<F>> workers;
  workers.reserve(n_chains);
  for (int c = 0; c < n_chains; ++c)
    workers.emplace_back(target, dim, cfg, stream_seed(cfg.seed, 0x6368, c));
  std::vector<Eigen::VectorXd> q(n_chains), grad(n_chains);
  std::vector<double> logp(n_chains,
                           -std::numeric_limits<double>::infinity());

  // Runs fn(chain) for every chain, possibly in parallel; each phase joins
  // before the next starts so cross-chain pooling sees completed windows.
  auto parallel = [&](auto&& fn) {
    std::vector<std::exception_ptr> errors(n_chains);
    std::atomic<int> next{0};
    auto work = [&]() {
      while (true) {
        int c = next.fetch_add(1);
        if (c >= n_chains) return;
        try {
          fn(c);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      }
    };
    if (threads == 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < threads; ++t) pool.emplace_back(work);
      for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  };

  // Randomized initialization, retried until the density is finite. With a
  // configured init center, chains start from jittered copies of it.
  const bool centered_init = cfg.init.size() == dim;
  parallel([&](int c) {
    ChainWorker<F>& w = workers[c];
    std::uniform_real_distribution<double> init_unif(-2.0, 2.0);
    std::uniform_real_distribution<double> jitter_unif(-0.2, 0.2);
    q[c].resize(dim);
    for (int attempt = 0; attempt < 100; ++attempt) {
      if (centered_init && attempt < 50)
        for (int i = 0; i < dim; ++i) q[c](i) = cfg.init(i) + jitter_unif(w.rng);
      else
        for (int i = 0; i < dim; ++i) q[c](i) = init_unif(w.rng);
      LogDensityResult r = target(q[c]);
      if (std::isfinite(r.value)) {
        logp[c] = r.value;
        grad[c] = std::move(r.gradient);
        break;
      }
    }
    if (!std::isfinite(logp[c])) throw all_inits_failed();
    w.da_init(find_initial_step(w, q[c], logp[c], grad[c]));
  });

  // Stan-style warmup schedule: step-size-only buffers around expanding
  // covariance-estimation windows.
  const int warmup = cfg.warmup;
  const int init_buffer = 75, term_buffer = 50, base_window = 25;
  const bool adapt_mass = warmup >= init_buffer + term_buffer + base_window;
  std::vector<int> window_ends;
  if (adapt_mass) {
    int start = init_buffer, width = base_window;
    while (true) {
      int end = start + width;
      if (end + 2 * width > warmup - term_buffer) end = warmup - term_buffer;
      window_ends.push_back(end);
      if (end >= warmup - term_buffer) break;
      start = end;
      width *= 2;
    }
  }

  std::vector<Welford> acc(n_chains);
  auto warmup_phase = [&](int from, int to, bool accumulate) {
    if (to <= from) return;
    parallel([&](int c) {
      ChainWorker<F>& w = workers[c];
      for (int it = from; it < to; ++it) {
        q[c] = w.transition(q[c], logp[c], grad[c], logp[c], grad[c]);
        w.da_update(w.accept_stat());
        if (accumulate) acc[c].add(q[c]);
      }
    });
  };

  if (adapt_mass) {
    warmup_phase(0, init_buffer, false);
    int start = init_buffer;
    for (int end : window_ends) {
      for (int c = 0; c < n_chains; ++c) acc[c].init(dim);
      warmup_phase(start, end, true);
      start = end;
      // pooled variance over all chains' window draws (fixed merge order)
      Eigen::VectorXd mean = acc[0].mean, m2 = acc[0].m2;
      long n = acc[0].n;
      for (int c = 1; c < n_chains; ++c) {
        const Eigen::VectorXd delta = acc[c].mean - mean;
        const long nc = acc[c].n, nn = n + nc;
        if (nn == 0) continue;
        mean += delta * (static_cast<double>(nc) / nn);
        m2 += acc[c].m2 + delta.cwiseProduct(delta) *
                              (static_cast<double>(n) * nc / nn);
        n = nn;
      }
      const double dn = static_cast<double>(std::max<long>(n, 2));
      Eigen::VectorXd var = m2 / (dn - 1.0);
      Eigen::VectorXd inv_mass =
          ((dn / (dn + 5.0)) * var.array() + 1e-3 * (5.0 / (dn + 5.0)))
              .matrix();
      parallel([&](int c) {
        workers[c].inv_mass = inv_mass;
        workers[c].da_init(
            find_initial_step(workers[c], q[c], logp[c], grad[c]));
      });
    }
    warmup_phase(start, warmup, false);
  } else {
    warmup_phase(0, warmup, false);
  }

  parallel([&](int c) {
    ChainWorker<F>& w = workers[c];
    w.da_finish();
    w.divergences = 0;
    w.depth_hits = 0;
    out.chains[c].resize(cfg.samples, dim);
    for (int iter = 0; iter < cfg.samples; ++iter) {
      q[c] = w.transition(q[c], logp[c], grad[c], logp[c], grad[c]);
      out.chains[c].row(iter) = q[c];
    }
    out.divergence_count[c] = w.divergences;
    out.max_depth_count[c] = w.depth_hits;
    out.step_size[c] = w.eps;
  });
  return out;
}

}  // namespace mcod
