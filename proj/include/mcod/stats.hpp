#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace mcod {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Inverse standard normal CDF (Wichura's AS 241, double precision).
inline double normal_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  const double q = p - 0.5;
  double r, val;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    val = q *
          (((((((2509.0809287301226727 * r + 33430.575583588128105) * r +
                67265.770927008700853) *
                   r +
               45921.953931549871457) *
                  r +
              13731.693765509461125) *
                 r +
             1971.5909503065514427) *
                r +
            133.14166789178437745) *
               r +
           3.387132872796366608) /
          (((((((5226.495278852545703 * r + 28729.085735721942674) * r +
                39307.89580009271061) *
                   r +
               21213.794301586595867) *
                  r +
              5394.1960214247511077) *
                 r +
             687.1870074920579083) *
                r +
            42.313330701600911252) *
               r +
           1.0);
    return val;
  }
  r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r +
                0.24178072517745061177) *
                   r +
               1.27045825245236838258) *
                  r +
              3.64784832476320460504) *
                 r +
             5.7694972214606914055) *
                r +
            4.6303378461565452959) *
               r +
           1.42343711074968357734) /
          (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r +
                0.0151986665636164571966) *
                   r +
               0.14810397642748007459) *
                  r +
              0.68976733498510000455) *
                 r +
             1.6763848301838038494) *
                r +
            2.05319162663775882187) *
               r +
           1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                0.0012426609473880784386) *
                   r +
               0.026532189526576123093) *
                  r +
              0.29656057182850489123) *
                 r +
             1.7848265399172913358) *
                r +
            5.4637849111641143699) *
               r +
           6.6579046435011037772) /
          (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r +
                1.8463183175100546818e-5) *
                   r +
               7.868691311456132591e-4) *
                  r +
              0.0148753612908506148525) *
                 r +
             0.13692988092273580531) *
                r +
            0.59983220655588793769) *
               r +
           1.0);
  }
  return q < 0.0 ? -val : val;
}

// Inverse-CDF draw from Normal(mu, sigma^2) truncated to (lo, hi). Exact at
// extreme means, unlike rejection sampling.
template <class Rng>
double truncated_normal(Rng& rng, double mu, double sigma, double lo, double hi) {
  if (sigma <= 0.0) return std::clamp(mu, lo, hi);
  const double a = normal_cdf((lo - mu) / sigma);
  const double b = normal_cdf((hi - mu) / sigma);
  if (b <= a) return std::clamp(mu, lo, hi);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = a + (b - a) * unif(rng);
  return mu + sigma * normal_quantile(u);
}

// splitmix64; used to derive independent RNG streams from (seed, key...) so
// results do not depend on evaluation order or thread scheduling.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b = 0) {
  return mix64(mix64(seed ^ 0x8e2ab5f0a1c3d77bULL) + mix64(a) + 3 * mix64(b));
}

}  // namespace mcod
