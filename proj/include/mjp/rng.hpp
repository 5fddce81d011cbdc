#ifndef MJP_RNG_HPP
#define MJP_RNG_HPP

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

namespace mjp {

/// Splittable random stream: xoshiro256++ seeded through the splitmix64
/// finalizer. substream(key) derives an independent child stream from the
/// parent's root identity and the key, never from the parent's draw state,
/// so the substream tree is reproducible regardless of consumption order.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : root_(seed) { reseed(); }

  RandomStream substream(std::uint64_t key) const {
    return RandomStream(mix64(root_ + 0x9e3779b97f4a7c15ULL * (key + 1)));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on the open interval (0,1); never returns 0 or 1.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  /// Marsaglia-Tsang; shape < 1 is boosted through Gamma(shape+1).
  double gamma(double shape, double rate) {
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0, rate);
      return g * std::pow(uniform(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
        return d * v / rate;
    }
  }

  /// Index drawn proportionally to nonnegative weights (not normalized).
  int categorical(const Eigen::VectorXd& weights) {
    const double total = weights.sum();
    double target = uniform() * total;
    const int n = static_cast<int>(weights.size());
    for (int k = 0; k < n; ++k) {
      target -= weights[k];
      if (target <= 0.0) return k;
    }
    for (int k = n - 1; k >= 0; --k)
      if (weights[k] > 0.0) return k;
    return n - 1;
  }

 private:
  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  void reseed() {
    std::uint64_t acc = root_;
    for (auto& word : s_) {
      acc += 0x9e3779b97f4a7c15ULL;
      word = mix64(acc);
    }
  }

  std::uint64_t root_;
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mjp

#endif
