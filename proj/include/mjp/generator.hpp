#ifndef MJP_GENERATOR_HPP
#define MJP_GENERATOR_HPP

#include <iosfwd>
#include <string>

#include <Eigen/Dense>

namespace mjp {

/// Validated infinitesimal generator of an ergodic Markov jump process.
/// Construction enforces: nonnegative off-diagonal rates, zero row sums
/// (within 1e-12), strictly positive exit rates, and an irreducible jump
/// chain. The stationary distribution is solved once at construction.
class Generator {
 public:
  /// Validates a raw rate matrix; throws Error on any violation.
  static Generator validate(const Eigen::MatrixXd& raw);

  int size() const { return static_cast<int>(rates_.rows()); }
  const Eigen::MatrixXd& rates() const { return rates_; }
  double rate(int i, int j) const { return rates_(i, j); }

  /// Exit rate of state i (negated diagonal).
  double exit_rate(int i) const { return exit_rates_[i]; }
  const Eigen::VectorXd& exit_rates() const { return exit_rates_; }

  /// Uniformization rate, the maximum exit rate.
  double uniformization_rate() const { return mu_; }

  const Eigen::VectorXd& stationary() const { return pi_; }

 private:
  Generator(Eigen::MatrixXd rates, Eigen::VectorXd exit_rates,
            Eigen::VectorXd pi, double mu)
      : rates_(std::move(rates)),
        exit_rates_(std::move(exit_rates)),
        pi_(std::move(pi)),
        mu_(mu) {}

  friend Generator reversed_generator(const Generator& g);

  Eigen::MatrixXd rates_;
  Eigen::VectorXd exit_rates_;
  Eigen::VectorXd pi_;
  double mu_;
};

/// P(t) = exp(t Lambda), entries clamped to [0,1] on output.
Eigen::MatrixXd transition_matrix(const Generator& g, double t);

/// Stationary distribution pi with pi Lambda = 0, sum 1.
const Eigen::VectorXd& stationary_distribution(const Generator& g);

enum class MatrixNorm { MaxAbs, OneNorm };

struct StationaryTimeOptions {
  MatrixNorm norm = MatrixNorm::MaxAbs;
  double time_cap = 1e4;
};

/// Smallest t (2 decimal places) with ||Pi - P(t)|| < eps, located by a
/// geometric bracket followed by bisection.
double stationary_time(const Generator& g, double eps,
                       const StationaryTimeOptions& opts = {});

/// Time-reversed generator: rev_ij = pi_j * rate_ji / pi_i. Shares the
/// original stationary distribution and exit rates.
Generator reversed_generator(const Generator& g);

/// Plain-text generator format: first token n, then n*n rates row-major;
/// '#' starts a comment that runs to end of line.
Generator parse_generator_text(const std::string& text);
Generator load_generator_file(const std::string& path);
void write_generator(std::ostream& os, const Generator& g);

}  // namespace mjp

#endif
