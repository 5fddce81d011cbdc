// mjpbridge: Markov-bridge sampling, generator estimation, and benchmark
// experiments for finite-state Markov jump processes.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mjp/bench.hpp"
#include "mjp/errors.hpp"
#include "mjp/inference.hpp"

namespace {

using namespace mjp;

struct GeneratorArgs {
  std::string builtin;
  std::string file;
  int n = 3;
};

void add_generator_options(CLI::App* cmd, GeneratorArgs& args) {
  auto* builtin = cmd->add_option("--generator", args.builtin,
                                  "builtin generator: uniform|model2|study4");
  auto* file = cmd->add_option("--generator-file", args.file,
                               "generator file (first line n, then the rates)");
  cmd->add_option("--n", args.n, "state count for the uniform family");
  builtin->excludes(file);
}

Generator make_generator(const GeneratorArgs& args) {
  if (!args.file.empty()) return load_generator_file(args.file);
  if (args.builtin.empty())
    throw Error(Err::BadInput, "need --generator or --generator-file");
  return builtin_generator(args.builtin, args.n);
}

struct SeedArg {
  std::uint64_t value = 42;
  CLI::Option* option = nullptr;
};

void add_seed_option(CLI::App* cmd, SeedArg& seed) {
  seed.option = cmd->add_option("--seed", seed.value,
                                "master seed (default 42, reported on stderr)");
}

RandomStream resolve_seed(const SeedArg& seed) {
  if (seed.option->count() == 0)
    std::cerr << "note: using default seed 42; pass --seed to change the "
                 "random stream\n";
  return RandomStream(seed.value);
}

class OutputFile {
 public:
  explicit OutputFile(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw Error(Err::BadInput, "cannot open output " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::string fmt(double x, const char* spec = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, x);
  return buf;
}

void print_path_csv(std::ostream& os, const Path& path) {
  os << "0," << (path.initial_state() + 1) << "\n";
  for (const Jump& jump : path.jumps())
    os << fmt(jump.time) << "," << (jump.state + 1) << "\n";
  os << fmt(path.horizon()) << "," << (path.end_state() + 1) << "\n";
}

/// "4", "1:6", or "0.5,1,2" -> list of values.
std::vector<double> parse_value_list(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    const auto pos = text.find(':');
    const double lo = std::stod(text.substr(0, pos));
    const double hi = std::stod(text.substr(pos + 1));
    for (double v = lo; v <= hi + 1e-12; v += 1.0) out.push_back(v);
    return out;
  }
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(std::stod(item));
  if (out.empty()) throw Error(Err::BadInput, "empty value list");
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (double v : parse_value_list(text)) out.push_back(static_cast<int>(v));
  return out;
}

std::vector<Method> parse_methods(const std::string& text) {
  if (text.empty() || text == "all") return all_methods();
  std::vector<Method> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(method_from_string(item));
  return out;
}

/// Expands "--config <file>" into the file's key=value pairs, inserted
/// right after the subcommand token so that real command-line flags,
/// arriving later, take precedence under the TakeLast policy.
void expand_config_args(std::vector<std::string>& args) {
  std::string path;
  for (size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config" && k + 1 < args.size()) {
      path = args[k + 1];
      break;
    }
    if (args[k].rfind("--config=", 0) == 0) {
      path = args[k].substr(9);
      break;
    }
  }
  if (path.empty() || args.empty()) return;
  std::ifstream in(path);
  if (!in) throw Error(Err::BadInput, "cannot open config file " + path);
  std::vector<std::string> expanded;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto from = s.find_first_not_of(" \t\r");
      const auto to = s.find_last_not_of(" \t\r");
      return from == std::string::npos ? std::string()
                                       : s.substr(from, to - from + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) continue;
    expanded.push_back("--" + key);
    expanded.push_back(value);
  }
  args.insert(args.begin() + 1, expanded.begin(), expanded.end());
}

ObservationSeries observe_path(const Path& path, double delta) {
  ObservationSeries obs;
  for (double t = 0.0; t <= path.horizon() + 1e-12; t += delta) {
    const double clamped = std::min(t, path.horizon());
    obs.times.push_back(clamped);
    obs.states.push_back(path.state_at(clamped));
  }
  obs.detect_delta();
  return obs;
}

// ---------------------------------------------------------------------------
// estimate / table1 shared pieces

const char* kTable1Params[12] = {"lambda_21", "lambda_31", "lambda_41",
                                 "lambda_12", "lambda_32", "lambda_42",
                                 "lambda_13", "lambda_23", "lambda_43",
                                 "lambda_14", "lambda_24", "lambda_34"};

const ParamSummary* find_summary(const std::vector<ParamSummary>& all, int i,
                                 int j) {
  for (const auto& s : all)
    if (s.i == i && s.j == j) return &s;
  return nullptr;
}

/// Column-major off-diagonal order (the paper's Table 1 row order).
std::vector<std::pair<int, int>> table_order(int n) {
  std::vector<std::pair<int, int>> order;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (i != j) order.emplace_back(i, j);
  return order;
}

void emit_table1(std::ostream& csv, std::ostream& text,
                 const Eigen::MatrixXd& truth,
                 const std::vector<ParamSummary>& mcem,
                 const std::vector<ParamSummary>& gibbs) {
  csv << "parameter,true,mcem_est,mcem_cii,mcem_cis,mcmc_est,mcmc_cii,"
         "mcmc_cis\n";
  text << "Parameter     True    MCEM est    CII      CIS     MCMC est    "
          "CII      CIS\n";
  const auto order = table_order(static_cast<int>(truth.rows()));
  for (size_t row = 0; row < order.size(); ++row) {
    const auto [i, j] = order[row];
    const ParamSummary* m = find_summary(mcem, i, j);
    const ParamSummary* g = find_summary(gibbs, i, j);
    const std::string name = row < 12 ? kTable1Params[row]
                                      : "lambda_" + std::to_string(i + 1) +
                                            std::to_string(j + 1);
    csv << name << "," << fmt(truth(i, j)) << "," << fmt(m->mean) << ","
        << fmt(m->q025) << "," << fmt(m->q975) << "," << fmt(g->mean) << ","
        << fmt(g->q025) << "," << fmt(g->q975) << "\n";
    char line[160];
    std::snprintf(line, sizeof(line),
                  "%-12s %6.3g   %8.3f %8.3f %8.3f   %8.3f %8.3f %8.3f",
                  name.c_str(), truth(i, j), m->mean, m->q025, m->q975,
                  g->mean, g->q025, g->q975);
    text << line << "\n";
  }
}

// ---------------------------------------------------------------------------
// subcommand runners

struct SimulateArgs {
  GeneratorArgs gen;
  SeedArg seed;
  int a = 1;
  double T = 1.0;
  double observe_delta = 0.0;
  std::string out, stats_out;
};

int run_simulate(const SimulateArgs& args) {
  const Generator g = make_generator(args.gen);
  RandomStream rng = resolve_seed(args.seed);
  if (args.a < 1 || args.a > g.size())
    throw Error(Err::BadInput, "--a out of range");
  const Path path = simulate_forward(g, args.a - 1, args.T, rng);
  OutputFile out(args.out);
  if (args.observe_delta > 0.0)
    observe_path(path, args.observe_delta).to_csv(out.stream());
  else
    print_path_csv(out.stream(), path);
  if (!args.stats_out.empty()) {
    std::ofstream sf(args.stats_out);
    write_stats_csv(sf, accumulate(path, g.size()));
  }
  return 0;
}

struct BridgeArgs {
  GeneratorArgs gen;
  SeedArg seed;
  int a = 1, b = 1;
  double T = 1.0;
  std::string method = "tir";
  std::string tir_mode = "reversed";
  long max_attempts = 1000000;
  std::string out, stats_out;
};

int run_bridge(const BridgeArgs& args) {
  const Generator g = make_generator(args.gen);
  RandomStream rng = resolve_seed(args.seed);
  BridgeProblem prob;
  prob.a = args.a - 1;
  prob.b = args.b - 1;
  prob.T = args.T;
  prob.method = method_from_string(args.method);
  prob.tir_mode = tir_mode_from_string(args.tir_mode);
  prob.max_attempts = args.max_attempts;
  if (prob.method == Method::TimeReverse &&
      prob.tir_mode == TirMode::PaperFaithful) {
    try {
      const double rho = stationary_time(g, 0.005);
      if (args.T < rho)
        std::cerr << "warning: tir paper mode below the stationary time "
                  << fmt(rho, "%.2f") << "; distribution may be off\n";
    } catch (const Error&) {
    }
  }
  const BridgeSample sample = sample_bridge(g, prob, rng);
  OutputFile out(args.out);
  print_path_csv(out.stream(), sample.path);
  std::cerr << "attempts: " << sample.attempts << "\n";
  if (!args.stats_out.empty()) {
    std::ofstream sf(args.stats_out);
    write_stats_csv(sf, accumulate(sample.path, g.size()));
  }
  return 0;
}

struct EstimateArgs {
  SeedArg seed;
  std::string algo = "mcem";
  std::string obs_file;
  int n = 0;
  int iters = 0;
  int bridges = 100;
  int burn_in = -1;
  double init = 0.5;
  double prior_a = 1.0, prior_b = 1.0;
  std::string method = "tir";
  std::string tir_mode = "reversed";
  long max_attempts = 1000000;
  int tail = 0;
  std::string out, summary_out;
};

int run_estimate(const EstimateArgs& args) {
  std::ifstream in(args.obs_file);
  if (!in) throw Error(Err::BadInput, "cannot open " + args.obs_file);
  ObservationSeries obs = ObservationSeries::from_csv(in);
  int n = args.n;
  for (int s : obs.states) n = std::max(n, s + 1);
  if (n < 2) throw Error(Err::BadInput, "need at least 2 states");

  RandomStream master = resolve_seed(args.seed);
  BridgeChoice choice{method_from_string(args.method),
                      tir_mode_from_string(args.tir_mode), args.max_attempts};

  EstimationTrace trace;
  int tail = args.tail;
  if (args.algo == "mcem") {
    const int iters = args.iters > 0 ? args.iters : 150;
    Eigen::MatrixXd init = Eigen::MatrixXd::Constant(n, n, args.init);
    for (int i = 0; i < n; ++i) {
      init(i, i) = 0.0;
      init(i, i) = -init.row(i).sum();
    }
    RandomStream rng = master.substream(1);
    trace = mcem_estimate(init, obs, iters, args.bridges, choice, rng);
    trace.seed = args.seed.value;
    if (tail <= 0) tail = std::min(100, iters);
  } else if (args.algo == "gibbs") {
    const int iters = args.iters > 0 ? args.iters : 500;
    const int burn_in = args.burn_in >= 0 ? args.burn_in : 300;
    const GammaPrior prior = GammaPrior::flat(n, args.prior_a, args.prior_b);
    RandomStream init_rng = master.substream(0);
    const Eigen::MatrixXd init = draw_from_prior(prior, init_rng);
    RandomStream rng = master.substream(1);
    trace = gibbs_estimate(init, obs, prior, iters, burn_in, choice, rng);
    trace.seed = args.seed.value;
    if (tail <= 0) tail = iters - burn_in;
  } else {
    throw Error(Err::BadInput, "--algo must be mcem or gibbs");
  }

  OutputFile out(args.out);
  write_trace_csv(out.stream(), trace);
  if (!args.summary_out.empty()) {
    std::ofstream sf(args.summary_out);
    sf << "i,j,mean,q025,q975\n";
    for (const ParamSummary& s : summarize_trace(trace, tail))
      sf << (s.i + 1) << "," << (s.j + 1) << "," << fmt(s.mean) << ","
         << fmt(s.q025) << "," << fmt(s.q975) << "\n";
  }
  return 0;
}

struct BenchArgs {
  SeedArg seed;
  std::string experiment = "speed";
  std::string model = "uniform";
  std::string n_list = "3";
  std::string t_list;
  std::string methods = "all";
  int samples = 1000;
  int replicates = 3;
  double eps = 0.005;
  long max_attempts = 1000000;
  std::string tir_mode = "reversed";
  // table1 study knobs
  double study_T = 10.0;
  double delta = 0.1;
  int mcem_iters = 150, mcem_bridges = 100;
  int gibbs_iters = 500, burn_in = 300;
  double init = 0.5;
  std::string method = "tir";
  std::string out;
  std::string plot_script;
};

int run_table1(const BenchArgs& args) {
  const Generator g = builtin_generator("study4");
  RandomStream master = resolve_seed(args.seed);

  RandomStream data_rng = master.substream(10);
  const int x0 = std::min(static_cast<int>(data_rng.uniform() * g.size()),
                          g.size() - 1);
  const Path path = simulate_forward(g, x0, args.study_T, data_rng);
  const ObservationSeries obs = observe_path(path, args.delta);

  BridgeChoice choice{method_from_string(args.method),
                      tir_mode_from_string(args.tir_mode), args.max_attempts};
  const int n = g.size();

  Eigen::MatrixXd init = Eigen::MatrixXd::Constant(n, n, args.init);
  for (int i = 0; i < n; ++i) {
    init(i, i) = 0.0;
    init(i, i) = -init.row(i).sum();
  }
  RandomStream mcem_rng = master.substream(11);
  const EstimationTrace mcem = mcem_estimate(init, obs, args.mcem_iters,
                                             args.mcem_bridges, choice,
                                             mcem_rng);

  const GammaPrior prior = GammaPrior::flat(n, 1.0, 1.0);
  RandomStream prior_rng = master.substream(12);
  RandomStream gibbs_rng = master.substream(13);
  const EstimationTrace gibbs =
      gibbs_estimate(draw_from_prior(prior, prior_rng), obs, prior,
                     args.gibbs_iters, args.burn_in, choice, gibbs_rng);

  OutputFile out(args.out);
  emit_table1(out.stream(), std::cerr, g.rates(),
              summarize_trace(mcem, std::min(100, args.mcem_iters)),
              summarize_trace(gibbs, args.gibbs_iters - args.burn_in));
  return 0;
}

int run_bench(const BenchArgs& args) {
  if (args.experiment == "table1") return run_table1(args);

  ExperimentConfig cfg;
  cfg.generator_name = args.model;
  cfg.state_counts = parse_int_list(args.n_list);
  if (!args.t_list.empty()) cfg.horizons = parse_value_list(args.t_list);
  cfg.methods = parse_methods(args.methods);
  cfg.tir_mode = tir_mode_from_string(args.tir_mode);
  cfg.samples = args.samples;
  cfg.replicates = args.replicates;
  cfg.eps = args.eps;
  cfg.seed = args.seed.value;
  cfg.max_attempts = args.max_attempts;
  resolve_seed(args.seed);

  std::vector<BenchRecord> records;
  if (args.experiment == "accuracy")
    records = accuracy_experiment(cfg);
  else if (args.experiment == "speed")
    records = speed_experiment(cfg);
  else
    throw Error(Err::BadInput,
                "--experiment must be accuracy, speed, or table1");

  OutputFile out(args.out);
  write_records_csv(out.stream(), records);
  if (!args.plot_script.empty()) {
    std::ofstream pf(args.plot_script);
    pf << plot_script_text();
  }
  return 0;
}

struct StationaryArgs {
  GeneratorArgs gen;
  SeedArg seed;
  double eps = 0.005;
  std::string n_list;
  std::string out;
};

int run_stationary(const StationaryArgs& args) {
  OutputFile out(args.out);
  if (!args.n_list.empty()) {
    ExperimentConfig cfg;
    cfg.generator_name =
        args.gen.builtin.empty() ? "uniform" : args.gen.builtin;
    cfg.generator_file = args.gen.file;
    cfg.state_counts = parse_int_list(args.n_list);
    cfg.eps = args.eps;
    cfg.seed = args.seed.value;
    write_records_csv(out.stream(), stationary_time_table(cfg));
    return 0;
  }
  const Generator g = make_generator(args.gen);
  out.stream() << fmt(stationary_time(g, args.eps), "%.2f") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Markov-bridge sampling and inference for Markov jump "
               "processes"};
  app.require_subcommand(1);
  std::string config_path;
  auto configure = [&config_path](CLI::App* cmd) {
    // command-line flags override config values
    cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->add_option("--config", config_path,
                    "flat key=value config file; flags win over the file");
  };

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "unconditioned forward path");
  configure(sim_cmd);
  add_generator_options(sim_cmd, sim.gen);
  add_seed_option(sim_cmd, sim.seed);
  sim_cmd->add_option("--a", sim.a, "start state (1-indexed)")->required();
  sim_cmd->add_option("--T", sim.T, "horizon")->required();
  sim_cmd->add_option("--observe", sim.observe_delta,
                      "emit observations at this spacing instead of the path");
  sim_cmd->add_option("--out", sim.out, "output CSV (default stdout)");
  sim_cmd->add_option("--stats", sim.stats_out, "also write sufficient stats");

  BridgeArgs bridge;
  auto* bridge_cmd = app.add_subcommand("bridge", "endpoint-conditioned path");
  configure(bridge_cmd);
  add_generator_options(bridge_cmd, bridge.gen);
  add_seed_option(bridge_cmd, bridge.seed);
  bridge_cmd->add_option("--a", bridge.a, "start state")->required();
  bridge_cmd->add_option("--b", bridge.b, "end state")->required();
  bridge_cmd->add_option("--T", bridge.T, "horizon")->required();
  bridge_cmd->add_option("--method", bridge.method,
                         "rej|mor|dir|uni|bis|tir (default tir)");
  bridge_cmd->add_option("--tir-mode", bridge.tir_mode, "paper|reversed");
  bridge_cmd->add_option("--max-attempts", bridge.max_attempts,
                         "attempt budget");
  bridge_cmd->add_option("--out", bridge.out, "output CSV (default stdout)");
  bridge_cmd->add_option("--stats", bridge.stats_out,
                         "also write sufficient stats");

  EstimateArgs est;
  auto* est_cmd =
      app.add_subcommand("estimate", "estimate the generator from data");
  configure(est_cmd);
  add_seed_option(est_cmd, est.seed);
  est_cmd->add_option("--algo", est.algo, "mcem|gibbs")->required();
  est_cmd->add_option("--obs", est.obs_file, "observations CSV")->required();
  est_cmd->add_option("--n", est.n, "state count (default: max observed)");
  est_cmd->add_option("--iters", est.iters,
                      "iterations (default 150 mcem / 500 gibbs)");
  est_cmd->add_option("--bridges", est.bridges,
                      "mcem bridges per gap (default 100)");
  est_cmd->add_option("--burn-in", est.burn_in, "gibbs burn-in (default 300)");
  est_cmd->add_option("--init", est.init,
                      "mcem initial off-diagonal rate (default 0.5)");
  est_cmd->add_option("--prior-a", est.prior_a, "gamma prior shape");
  est_cmd->add_option("--prior-b", est.prior_b, "gamma prior rate");
  est_cmd->add_option("--method", est.method, "bridge sampler");
  est_cmd->add_option("--tir-mode", est.tir_mode, "paper|reversed");
  est_cmd->add_option("--max-attempts", est.max_attempts, "attempt budget");
  est_cmd->add_option("--tail", est.tail, "summary tail length");
  est_cmd->add_option("--out", est.out, "trace CSV (default stdout)");
  est_cmd->add_option("--summary", est.summary_out, "summary CSV path");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "paper experiments");
  configure(bench_cmd);
  add_seed_option(bench_cmd, bench.seed);
  bench_cmd->add_option("--experiment", bench.experiment,
                        "accuracy|speed|table1")
      ->required();
  bench_cmd->add_option("--model", bench.model, "uniform|model2|study4");
  bench_cmd->add_option("--n", bench.n_list, "state counts, e.g. 3:20");
  bench_cmd->add_option("--T", bench.t_list, "horizons, e.g. 1:6");
  bench_cmd->add_option("--methods", bench.methods, "comma list or 'all'");
  bench_cmd->add_option("--m", bench.samples, "bridges per cell");
  bench_cmd->add_option("--replicates", bench.replicates,
                        "timing replicates (>= 3)");
  bench_cmd->add_option("--eps", bench.eps, "stationary tolerance");
  bench_cmd->add_option("--max-attempts", bench.max_attempts,
                        "attempt budget");
  bench_cmd->add_option("--tir-mode", bench.tir_mode, "paper|reversed");
  bench_cmd->add_option("--study-T", bench.study_T, "table1 horizon");
  bench_cmd->add_option("--delta", bench.delta, "table1 spacing");
  bench_cmd->add_option("--mcem-iters", bench.mcem_iters, "table1 mcem iters");
  bench_cmd->add_option("--mcem-bridges", bench.mcem_bridges,
                        "table1 mcem bridges per gap");
  bench_cmd->add_option("--gibbs-iters", bench.gibbs_iters,
                        "table1 gibbs iters");
  bench_cmd->add_option("--burn-in", bench.burn_in, "table1 gibbs burn-in");
  bench_cmd->add_option("--init", bench.init, "table1 mcem initial rate");
  bench_cmd->add_option("--method", bench.method, "table1 bridge sampler");
  bench_cmd->add_option("--out", bench.out, "output CSV (default stdout)");
  bench_cmd->add_option("--plot-script", bench.plot_script,
                        "also write a matplotlib script here");

  StationaryArgs stat;
  auto* stat_cmd =
      app.add_subcommand("stationary", "stationary time of a generator");
  configure(stat_cmd);
  add_generator_options(stat_cmd, stat.gen);
  add_seed_option(stat_cmd, stat.seed);
  stat_cmd->add_option("--eps", stat.eps, "tolerance (default 0.005)");
  stat_cmd->add_option("--n-list", stat.n_list,
                       "sweep n and emit records, e.g. 3:20");
  stat_cmd->add_option("--out", stat.out, "output (default stdout)");

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    expand_config_args(args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
    if (sim_cmd->parsed()) return run_simulate(sim);
    if (bridge_cmd->parsed()) return run_bridge(bridge);
    if (est_cmd->parsed()) return run_estimate(est);
    if (bench_cmd->parsed()) return run_bench(bench);
    if (stat_cmd->parsed()) return run_stationary(stat);
    return 2;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const mjp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
