#ifndef MJP_INFERENCE_HPP
#define MJP_INFERENCE_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mjp/bridge.hpp"
#include "mjp/stats.hpp"

namespace mjp {

/// Discrete observations (t_k, x_k) of one MJP path; states 0-indexed.
struct ObservationSeries {
  std::vector<double> times;
  std::vector<int> states;
  std::optional<double> delta;  // common spacing, when equally spaced

  int gap_count() const { return static_cast<int>(times.size()) - 1; }
  void validate() const;
  void detect_delta(double tol = 1e-9);

  /// CSV with header "time,state"; states 1-indexed on disk.
  static ObservationSeries from_csv(std::istream& is);
  void to_csv(std::ostream& os) const;
};

/// Independent Gamma(a_ij, b_i) priors on the off-diagonal rates.
struct GammaPrior {
  Eigen::MatrixXd shape;  // a_ij, diagonal ignored
  Eigen::VectorXd rate;   // b_i

  static GammaPrior flat(int n, double a = 1.0, double b = 1.0);
  void validate() const;
};

struct BridgeChoice {
  Method method = Method::TimeReverse;
  TirMode tir_mode = TirMode::ReversedGenerator;
  long max_attempts = 1000000;
};

struct EstimationTrace {
  std::vector<Eigen::MatrixXd> iterates;
  int burn_in = 0;
  Method method = Method::TimeReverse;
  std::uint64_t seed = 0;
  double seconds = 0.0;

  Eigen::MatrixXd posterior_mean() const;  // mean over iterates past burn_in
};

Eigen::MatrixXd draw_from_prior(const GammaPrior& prior, RandomStream& rng);

/// One Gibbs rate draw: off-diagonals Gamma(N_ij + a_ij, R_i + b_i),
/// diagonal the negated row sums.
Eigen::MatrixXd sample_posterior_generator(const SufficientStats& s,
                                           const GammaPrior& prior,
                                           RandomStream& rng);

/// Gibbs sampler: alternates bridge-sampled latent paths with posterior
/// rate draws. The trace holds the K post-initialization iterates.
EstimationTrace gibbs_estimate(const Eigen::MatrixXd& initial,
                               const ObservationSeries& obs,
                               const GammaPrior& prior, int iterations,
                               int burn_in, const BridgeChoice& choice,
                               RandomStream& rng);

/// MCEM: per gap, the E-step averages sufficient statistics over
/// bridges_per_gap sampled bridges; the M-step applies the complete-data
/// MLE. Off-diagonals are floored at 1e-12 so every iterate stays a valid
/// generator.
EstimationTrace mcem_estimate(const Eigen::MatrixXd& initial,
                              const ObservationSeries& obs, int iterations,
                              int bridges_per_gap, const BridgeChoice& choice,
                              RandomStream& rng);

struct ParamSummary {
  int i, j;  // 0-indexed off-diagonal position
  double mean, q025, q975;
};

/// Per-parameter mean and nearest-rank 0.025/0.975 quantiles over the last
/// `tail` iterates.
std::vector<ParamSummary> summarize_trace(const EstimationTrace& trace,
                                          int tail);

/// Exact observed-data log-likelihood sum_k log p_{x_{k-1} x_k}(dt_k).
double observed_log_likelihood(const Eigen::MatrixXd& rates,
                               const ObservationSeries& obs);

/// Trace CSV: header "iter,i,j,value", 1-indexed states.
void write_trace_csv(std::ostream& os, const EstimationTrace& trace);

}  // namespace mjp

#endif
