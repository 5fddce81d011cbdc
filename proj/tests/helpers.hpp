#ifndef MJP_TEST_HELPERS_HPP
#define MJP_TEST_HELPERS_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mjp/generator.hpp"
#include "mjp/rng.hpp"

namespace mjp::test {

/// Regularized lower incomplete gamma P(a, x) (series / continued fraction).
inline double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p domain");
  if (x == 0.0) return 0.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  // Lentz continued fraction for Q(a, x)
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - lg) * h;
}

inline double chi2_cdf(double x, int df) { return gamma_p(df / 2.0, x / 2.0); }

inline double chi2_quantile(double p, int df) {
  double lo = 0.0, hi = 10.0 * df + 100.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (chi2_cdf(mid, df) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Goodness-of-fit statistic against fully specified cell probabilities.
inline double chi2_statistic(const std::vector<long>& counts,
                             const std::vector<double>& probs, long total) {
  double stat = 0.0;
  for (size_t k = 0; k < counts.size(); ++k) {
    const double expected = probs[k] * total;
    if (expected > 0.0)
      stat += (counts[k] - expected) * (counts[k] - expected) / expected;
  }
  return stat;
}

/// Two-sample homogeneity statistic over shared cells.
inline double chi2_two_sample(const std::vector<long>& c1,
                              const std::vector<long>& c2) {
  double n1 = 0.0, n2 = 0.0;
  for (size_t k = 0; k < c1.size(); ++k) {
    n1 += c1[k];
    n2 += c2[k];
  }
  double stat = 0.0;
  for (size_t k = 0; k < c1.size(); ++k) {
    const double pooled = (c1[k] + c2[k]) / (n1 + n2);
    if (pooled == 0.0) continue;
    const double e1 = pooled * n1, e2 = pooled * n2;
    stat += (c1[k] - e1) * (c1[k] - e1) / e1;
    stat += (c2[k] - e2) * (c2[k] - e2) / e2;
  }
  return stat;
}

struct RunningMoments {
  double sum = 0.0, sumsq = 0.0;
  long count = 0;
  void add(double x) {
    sum += x;
    sumsq += x * x;
    ++count;
  }
  double mean() const { return sum / count; }
  double variance() const {
    const double m = mean();
    return std::max(sumsq / count - m * m, 0.0) * count / (count - 1.0);
  }
  double se() const { return std::sqrt(variance() / count); }
};

/// Standard error of a correlated chain mean via batch means.
inline double batch_means_se(const std::vector<double>& chain, int batches) {
  const int len = static_cast<int>(chain.size()) / batches;
  RunningMoments m;
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (int k = 0; k < len; ++k) s += chain[b * len + k];
    m.add(s / len);
  }
  return std::sqrt(m.variance() / batches);
}

/// Random ergodic generator: a directed ring for irreducibility plus a
/// random subset of the remaining edges.
inline Generator random_generator(RandomStream& rng, int n) {
  Eigen::MatrixXd rates = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    rates(i, (i + 1) % n) = 0.5 + rng.uniform();
    for (int j = 0; j < n; ++j) {
      if (j == i || j == (i + 1) % n) continue;
      if (rng.uniform() < 0.6) rates(i, j) = 0.1 + 1.9 * rng.uniform();
    }
    rates(i, i) = -rates.row(i).sum();
  }
  return Generator::validate(rates);
}

}  // namespace mjp::test

#endif
