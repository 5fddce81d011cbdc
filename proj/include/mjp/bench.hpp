#ifndef MJP_BENCH_HPP
#define MJP_BENCH_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mjp/bridge.hpp"

namespace mjp {

/// Paper model matrices: "uniform" (exit rate 1, off-diagonals 1/(n-1),
/// 3 <= n <= 20), "model2" (3 states), "study4" (4 states).
Generator builtin_generator(const std::string& name,
                            std::optional<int> n = std::nullopt);

struct ExperimentConfig {
  std::string generator_name = "uniform";
  std::string generator_file;          // overrides the builtin when set
  std::vector<int> state_counts = {3};
  std::vector<double> horizons;        // speed experiment
  std::vector<Method> methods = all_methods();
  TirMode tir_mode = TirMode::ReversedGenerator;
  int samples = 1000;                  // bridges per cell
  int replicates = 3;                  // timing repetitions
  double eps = 0.005;                  // stationary-time tolerance
  std::uint64_t seed = 42;
  long max_attempts = 1000000;
};

struct BenchRecord {
  std::string experiment;
  std::string method;
  int n = 0;
  double T = 0.0;
  std::string metric;
  double value = 0.0;
  double stderr_value = 0.0;
  double seconds = 0.0;
  std::uint64_t seed = 0;
};

/// Per (n, method): samples bridges at T = stationary_time(n) with shared
/// random endpoints and reports the 1-norm gap between Monte Carlo stats
/// and the closed-form conditional expectations (metrics "N_norm1",
/// "R_norm1").
std::vector<BenchRecord> accuracy_experiment(const ExperimentConfig& cfg);

/// Per (T, method): per-bridge wall-clock over `samples` bridges with
/// shared random endpoints, median over replicates (metric
/// "seconds_per_bridge"; failures reported as "failure_rate").
std::vector<BenchRecord> speed_experiment(const ExperimentConfig& cfg);

/// Stationary time of the uniform family per n (metric "stationary_time").
std::vector<BenchRecord> stationary_time_table(const ExperimentConfig& cfg);

/// CSV: experiment,method,n,T,metric,value,stderr,seconds,seed. Records are
/// sorted before writing so emission order never matters.
void write_records_csv(std::ostream& os, std::vector<BenchRecord> records);

/// Companion matplotlib script for the CSV written above.
std::string plot_script_text();

}  // namespace mjp

#endif
