#ifndef MJP_BRIDGE_HPP
#define MJP_BRIDGE_HPP

#include <string>
#include <vector>

#include "mjp/path.hpp"

namespace mjp {

enum class Method {
  Rejection,
  ModifiedRejection,
  Direct,
  Uniformization,
  Bisection,
  TimeReverse,
};

enum class TirMode { PaperFaithful, ReversedGenerator };

Method method_from_string(const std::string& name);
const char* method_name(Method m);
TirMode tir_mode_from_string(const std::string& name);
const char* tir_mode_name(TirMode mode);
std::vector<Method> all_methods();

/// Endpoint specification of a (0, a, T, b)-Markov bridge plus the sampler
/// choice and attempt budget. States are 0-indexed here.
struct BridgeProblem {
  int a = 0;
  int b = 0;
  double T = 1.0;
  Method method = Method::TimeReverse;
  TirMode tir_mode = TirMode::ReversedGenerator;
  long max_attempts = 1000000;
};

struct BridgeSample {
  Path path;
  long attempts;
  Method method;
};

/// Quantile of the first-jump time conditioned on a jump before T:
/// tau = -log(1 - u(1 - e^{-rate T}))/rate, always inside (0, T).
double truncated_first_jump_time(double rate, double T, double u);

/// Quantile of the single-jump time on (0, T) with density proportional to
/// e^{-(rate_i - rate_j)s}; exactly uniform when the rates coincide.
double single_jump_time(double rate_i, double rate_j, double T, double u);

/// Discrete uniformized chain Gamma = I + Lambda/mu.
Eigen::MatrixXd uniformization_matrix(const Generator& g);

/// Distribution of the virtual-inclusive step count of a uniformized
/// (a, b, T) bridge, truncated at the series cap; normalized to the
/// accumulated mass.
std::vector<double> uniformization_step_pmf(const Generator& g, int a, int b,
                                            double T);

BridgeSample sample_rejection(const Generator& g, const BridgeProblem& prob,
                              RandomStream& rng);
BridgeSample sample_modified_rejection(const Generator& g,
                                       const BridgeProblem& prob,
                                       RandomStream& rng);
BridgeSample sample_direct(const Generator& g, const BridgeProblem& prob,
                           RandomStream& rng, double condition_cap = 1e8);
BridgeSample sample_uniformization(const Generator& g,
                                   const BridgeProblem& prob,
                                   RandomStream& rng);
BridgeSample sample_bisection(const Generator& g, const BridgeProblem& prob,
                              RandomStream& rng, int depth_cap = 60);
BridgeSample sample_time_reverse(const Generator& g, const BridgeProblem& prob,
                                 RandomStream& rng, TirMode mode);

/// Dispatch on prob.method.
BridgeSample sample_bridge(const Generator& g, const BridgeProblem& prob,
                           RandomStream& rng);

}  // namespace mjp

#endif
