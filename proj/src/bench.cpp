#include "mjp/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <tuple>

#include "mjp/errors.hpp"
#include "mjp/stats.hpp"

namespace mjp {

Generator builtin_generator(const std::string& name, std::optional<int> n) {
  if (name == "uniform") {
    const int size = n.value_or(3);
    if (size < 3 || size > 20)
      throw Error(Err::BadDimension,
                  "uniform family supports 3 <= n <= 20, got " +
                      std::to_string(size));
    const double off = 1.0 / (size - 1);
    Eigen::MatrixXd rates = Eigen::MatrixXd::Constant(size, size, off);
    rates.diagonal().setConstant(-1.0);
    return Generator::validate(rates);
  }
  if (name == "model2") {
    Eigen::MatrixXd rates(3, 3);
    rates << -2, 1, 1, 0, -10, 10, 4, 1, -5;
    return Generator::validate(rates);
  }
  if (name == "study4") {
    Eigen::MatrixXd rates(4, 4);
    rates << -4, 2, 1, 1, 0, -3, 2, 1, 1, 0, -3, 2, 2, 1, 1, -4;
    return Generator::validate(rates);
  }
  throw Error(Err::UnknownName, "unknown builtin generator '" + name + "'");
}

namespace {

constexpr std::uint64_t kAccuracyKey = 0xACC;
constexpr std::uint64_t kSpeedKey = 0x5BD;

Generator config_generator(const ExperimentConfig& cfg, int n) {
  if (!cfg.generator_file.empty()) return load_generator_file(cfg.generator_file);
  return builtin_generator(cfg.generator_name, n);
}

std::vector<std::pair<int, int>> draw_endpoints(int n, int count,
                                                RandomStream rng) {
  std::vector<std::pair<int, int>> pairs(count);
  for (auto& [a, b] : pairs) {
    a = static_cast<int>(rng.uniform() * n);
    b = static_cast<int>(rng.uniform() * n);
    a = std::min(a, n - 1);
    b = std::min(b, n - 1);
  }
  return pairs;
}

double elapsed_seconds(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

}  // namespace

std::vector<BenchRecord> accuracy_experiment(const ExperimentConfig& cfg) {
  if (cfg.samples < 1) throw Error(Err::BadInput, "samples must be >= 1");
  if (cfg.generator_name != "uniform" || !cfg.generator_file.empty())
    throw Error(Err::BadInput,
                "accuracy experiment needs the uniform family (its closed "
                "form is the reference)");
  std::vector<BenchRecord> records;
  const RandomStream master = RandomStream(cfg.seed).substream(kAccuracyKey);

  for (int n : cfg.state_counts) {
    const Generator g = builtin_generator("uniform", n);
    const double horizon = stationary_time(g, cfg.eps);
    const auto endpoints =
        draw_endpoints(n, cfg.samples, master.substream(n).substream(0));
    // Closed-form targets per endpoint pair, computed once.
    std::vector<std::vector<std::optional<ConditionalStats>>> truth(
        n, std::vector<std::optional<ConditionalStats>>(n));
    for (const auto& [a, b] : endpoints)
      if (!truth[a][b])
        truth[a][b] = expected_stats_uniform_closed_form(n, horizon, a, b);

    int method_index = 0;
    for (Method method : cfg.methods) {
      ++method_index;
      const auto start = std::chrono::steady_clock::now();
      RandomStream rng = master.substream(n).substream(method_index);
      const int entries_n = n * n - n;
      Eigen::VectorXd sum_n = Eigen::VectorXd::Zero(entries_n);
      Eigen::VectorXd sumsq_n = Eigen::VectorXd::Zero(entries_n);
      Eigen::VectorXd sum_r = Eigen::VectorXd::Zero(n);
      Eigen::VectorXd sumsq_r = Eigen::VectorXd::Zero(n);
      bool failed = false;
      try {
        for (int l = 0; l < cfg.samples; ++l) {
          BridgeProblem prob;
          prob.a = endpoints[l].first;
          prob.b = endpoints[l].second;
          prob.T = horizon;
          prob.method = method;
          prob.tir_mode = cfg.tir_mode;
          prob.max_attempts = cfg.max_attempts;
          const SufficientStats s =
              accumulate(sample_bridge(g, prob, rng).path, n);
          const ConditionalStats& t = *truth[prob.a][prob.b];
          int e = 0;
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
              if (i == j) continue;
              const double err = s.jump_counts(i, j) - t.jumps(i, j);
              sum_n[e] += err;
              sumsq_n[e] += err * err;
              ++e;
            }
          for (int i = 0; i < n; ++i) {
            const double err = s.holding_times[i] - t.holding[i];
            sum_r[i] += err;
            sumsq_r[i] += err * err;
          }
        }
      } catch (const Error&) {
        failed = true;
      }
      const double secs = elapsed_seconds(start);
      if (failed) {
        records.push_back({"accuracy", method_name(method), n, horizon,
                           "failed", 1.0, 0.0, secs, cfg.seed});
        continue;
      }
      const double m = cfg.samples;
      auto emit = [&](const char* metric, const Eigen::VectorXd& sum,
                      const Eigen::VectorXd& sumsq) {
        double value = 0.0, se = 0.0;
        for (int e = 0; e < sum.size(); ++e) {
          const double mean = sum[e] / m;
          value += std::abs(mean);
          if (m > 1) {
            const double var =
                std::max(sumsq[e] / m - mean * mean, 0.0) * m / (m - 1);
            se += std::sqrt(var / m);
          }
        }
        records.push_back({"accuracy", method_name(method), n, horizon, metric,
                           value, se, secs, cfg.seed});
      };
      emit("N_norm1", sum_n, sumsq_n);
      emit("R_norm1", sum_r, sumsq_r);
    }
  }
  return records;
}

std::vector<BenchRecord> speed_experiment(const ExperimentConfig& cfg) {
  if (cfg.replicates < 3)
    throw Error(Err::BadInput, "need at least 3 timing replicates");
  if (cfg.horizons.empty())
    throw Error(Err::BadInput, "speed experiment needs a horizon list");
  std::vector<BenchRecord> records;
  const RandomStream master = RandomStream(cfg.seed).substream(kSpeedKey);

  for (size_t ti = 0; ti < cfg.horizons.size(); ++ti) {
    const double horizon = cfg.horizons[ti];
    const int n = cfg.state_counts.empty() ? 3 : cfg.state_counts.front();
    const Generator g = config_generator(cfg, n);
    const auto endpoints = draw_endpoints(
        g.size(), cfg.samples, master.substream(ti).substream(0));

    int method_index = 0;
    for (Method method : cfg.methods) {
      ++method_index;
      const auto cell_start = std::chrono::steady_clock::now();
      long failures = 0;
      auto run_pass = [&](RandomStream rng) {
        for (int l = 0; l < cfg.samples; ++l) {
          BridgeProblem prob;
          prob.a = endpoints[l].first;
          prob.b = endpoints[l].second;
          prob.T = horizon;
          prob.method = method;
          prob.tir_mode = cfg.tir_mode;
          prob.max_attempts = cfg.max_attempts;
          try {
            sample_bridge(g, prob, rng);
          } catch (const Error&) {
            ++failures;
          }
        }
      };
      RandomStream cell = master.substream(ti).substream(method_index);
      run_pass(cell.substream(0));  // warm-up, untimed
      std::vector<double> per_bridge(cfg.replicates);
      for (int r = 0; r < cfg.replicates; ++r) {
        const auto start = std::chrono::steady_clock::now();
        run_pass(cell.substream(r + 1));
        per_bridge[r] = elapsed_seconds(start) / cfg.samples;
      }
      std::sort(per_bridge.begin(), per_bridge.end());
      const double median = per_bridge[cfg.replicates / 2];
      const double spread =
          0.5 * (per_bridge.back() - per_bridge.front());
      records.push_back({"speed", method_name(method), g.size(), horizon,
                         "seconds_per_bridge", median, spread,
                         elapsed_seconds(cell_start), cfg.seed});
      if (failures > 0)
        records.push_back({"speed", method_name(method), g.size(), horizon,
                           "failure_rate",
                           static_cast<double>(failures) /
                               (cfg.samples * (cfg.replicates + 1.0)),
                           0.0, 0.0, cfg.seed});
    }
  }
  return records;
}

std::vector<BenchRecord> stationary_time_table(const ExperimentConfig& cfg) {
  std::vector<BenchRecord> records;
  for (int n : cfg.state_counts) {
    const auto start = std::chrono::steady_clock::now();
    try {
      const Generator g = config_generator(cfg, n);
      const double rho = stationary_time(g, cfg.eps);
      records.push_back({"stationary", "", n, rho, "stationary_time", rho,
                         0.0, elapsed_seconds(start), cfg.seed});
    } catch (const Error&) {
      records.push_back({"stationary", "", n, 0.0, "failed", 1.0, 0.0,
                         elapsed_seconds(start), cfg.seed});
    }
  }
  return records;
}

void write_records_csv(std::ostream& os, std::vector<BenchRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const BenchRecord& x, const BenchRecord& y) {
              return std::tie(x.experiment, x.method, x.n, x.T, x.metric) <
                     std::tie(y.experiment, y.method, y.n, y.T, y.metric);
            });
  os << "experiment,method,n,T,metric,value,stderr,seconds,seed\n";
  char buf[256];
  for (const BenchRecord& r : records) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%d,%.17g,%s,%.17g,%.17g,%.6g,%llu",
                  r.experiment.c_str(), r.method.c_str(), r.n, r.T,
                  r.metric.c_str(), r.value, r.stderr_value, r.seconds,
                  static_cast<unsigned long long>(r.seed));
    os << buf << "\n";
  }
}

std::string plot_script_text() {
  return R"(#!/usr/bin/env python3
"""Plot bench CSV produced by mjpbridge: accuracy, speed, or stationary."""
import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "bench.csv"
rows = list(csv.DictReader(open(path)))
by_metric = defaultdict(list)
for r in rows:
    by_metric[r["metric"]].append(r)

for metric, data in by_metric.items():
    if metric in ("failed", "failure_rate"):
        continue
    series = defaultdict(list)
    x_key = "T" if metric == "seconds_per_bridge" else "n"
    for r in data:
        series[r["method"] or "-"].append((float(r[x_key]), float(r["value"])))
    plt.figure()
    for method, pts in sorted(series.items()):
        pts.sort()
        plt.plot([p[0] for p in pts], [p[1] for p in pts], marker="o",
                 label=method)
    plt.xlabel(x_key)
    plt.ylabel(metric)
    if metric == "seconds_per_bridge":
        plt.yscale("log")
    plt.legend()
    plt.title(metric)
    plt.savefig(f"{metric}.png", dpi=150)
    print(f"wrote {metric}.png")
)";
}

}  // namespace mjp
