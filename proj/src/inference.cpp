#include "mjp/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "mjp/errors.hpp"

namespace mjp {

void ObservationSeries::validate() const {
  if (times.size() != states.size())
    throw Error(Err::BadInput, "times/states length mismatch");
  if (times.size() < 2)
    throw Error(Err::BadInput, "need at least two observations");
  for (size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1]))
      throw Error(Err::BadInput, "observation times must strictly increase");
  for (int s : states)
    if (s < 0) throw Error(Err::BadInput, "negative observed state");
  if (delta) {
    for (size_t k = 1; k < times.size(); ++k)
      if (std::abs(times[k] - times[k - 1] - *delta) > 1e-12 * std::max(1.0, *delta))
        throw Error(Err::BadInput, "declared spacing is inconsistent");
  }
}

void ObservationSeries::detect_delta(double tol) {
  delta.reset();
  if (times.size() < 2) return;
  const double d = times[1] - times[0];
  for (size_t k = 1; k + 1 < times.size(); ++k)
    if (std::abs(times[k + 1] - times[k] - d) > tol) return;
  delta = d;
}

ObservationSeries ObservationSeries::from_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("time,state", 0) != 0)
    throw Error(Err::BadInput, "observations CSV must start with 'time,state'");
  ObservationSeries obs;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string t, s;
    if (!std::getline(row, t, ',') || !std::getline(row, s, ','))
      throw Error(Err::BadInput, "malformed observation row: " + line);
    obs.times.push_back(std::stod(t));
    obs.states.push_back(std::stoi(s) - 1);
  }
  obs.detect_delta();
  obs.validate();
  return obs;
}

void ObservationSeries::to_csv(std::ostream& os) const {
  os << "time,state\n";
  char buf[64];
  for (size_t k = 0; k < times.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.17g", times[k]);
    os << buf << "," << (states[k] + 1) << "\n";
  }
}

GammaPrior GammaPrior::flat(int n, double a, double b) {
  return {Eigen::MatrixXd::Constant(n, n, a),
          Eigen::VectorXd::Constant(n, b)};
}

void GammaPrior::validate() const {
  if (shape.rows() != shape.cols() || shape.rows() != rate.size())
    throw Error(Err::BadDimension, "prior dimensions mismatch");
  for (int i = 0; i < shape.rows(); ++i) {
    if (!(rate[i] > 0.0)) throw Error(Err::BadInput, "prior rate must be > 0");
    for (int j = 0; j < shape.cols(); ++j)
      if (i != j && !(shape(i, j) > 0.0))
        throw Error(Err::BadInput, "prior shape must be > 0");
  }
}

Eigen::MatrixXd EstimationTrace::posterior_mean() const {
  if (iterates.empty()) throw Error(Err::BadInput, "empty trace");
  if (burn_in >= static_cast<int>(iterates.size()))
    throw Error(Err::BadInput, "burn-in not shorter than trace");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(iterates[0].rows(),
                                              iterates[0].cols());
  for (size_t k = burn_in; k < iterates.size(); ++k) acc += iterates[k];
  return acc / static_cast<double>(iterates.size() - burn_in);
}

namespace {

Eigen::MatrixXd with_diagonal(Eigen::MatrixXd rates) {
  for (int i = 0; i < rates.rows(); ++i) {
    rates(i, i) = 0.0;
    rates(i, i) = -rates.row(i).sum();
  }
  return rates;
}

}  // namespace

Eigen::MatrixXd draw_from_prior(const GammaPrior& prior, RandomStream& rng) {
  prior.validate();
  const int n = static_cast<int>(prior.rate.size());
  Eigen::MatrixXd rates = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j)
        rates(i, j) =
            std::max(rng.gamma(prior.shape(i, j), prior.rate[i]), 1e-300);
  return with_diagonal(std::move(rates));
}

Eigen::MatrixXd sample_posterior_generator(const SufficientStats& s,
                                           const GammaPrior& prior,
                                           RandomStream& rng) {
  prior.validate();
  const int n = static_cast<int>(prior.rate.size());
  if (s.holding_times.size() != n)
    throw Error(Err::BadDimension, "stats/prior dimension mismatch");
  Eigen::MatrixXd rates = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double rate = s.holding_times[i] + prior.rate[i];
    if (!(rate > 0.0))
      throw Error(Err::BadInput, "posterior rate must be positive");
    for (int j = 0; j < n; ++j)
      if (i != j)
        rates(i, j) = std::max(
            rng.gamma(s.jump_counts(i, j) + prior.shape(i, j), rate), 1e-300);
  }
  return with_diagonal(std::move(rates));
}

namespace {

/// Sufficient statistics of one latent path over all observation gaps,
/// each gap bridged independently under the current rates.
SufficientStats latent_path_stats(const Generator& g,
                                  const ObservationSeries& obs,
                                  const BridgeChoice& choice,
                                  RandomStream& iter_rng) {
  SufficientStats total = SufficientStats::zero(g.size());
  for (int k = 0; k < obs.gap_count(); ++k) {
    BridgeProblem prob;
    prob.a = obs.states[k];
    prob.b = obs.states[k + 1];
    prob.T = obs.times[k + 1] - obs.times[k];
    prob.method = choice.method;
    prob.tir_mode = choice.tir_mode;
    prob.max_attempts = choice.max_attempts;
    RandomStream gap_rng = iter_rng.substream(k);
    try {
      total.add(accumulate(sample_bridge(g, prob, gap_rng).path, g.size()));
    } catch (const Error& e) {
      if (e.code() == Err::AttemptsExhausted) {
        const double p = transition_matrix(g, prob.T)(prob.a, prob.b);
        if (p <= 1e-300)
          throw Error(Err::UnreachableEndpoint,
                      "observed transition at gap " + std::to_string(k + 1) +
                          " has vanishing probability");
      }
      throw Error(e.code(), std::string(e.what()) + " (gap " +
                                std::to_string(k + 1) + ")");
    }
  }
  return total;
}

}  // namespace

EstimationTrace gibbs_estimate(const Eigen::MatrixXd& initial,
                               const ObservationSeries& obs,
                               const GammaPrior& prior, int iterations,
                               int burn_in, const BridgeChoice& choice,
                               RandomStream& rng) {
  obs.validate();
  prior.validate();
  if (iterations <= burn_in || burn_in < 0)
    throw Error(Err::BadInput, "need iterations > burn_in >= 0");
  const auto start = std::chrono::steady_clock::now();

  Generator current = Generator::validate(initial);
  EstimationTrace trace;
  trace.burn_in = burn_in;
  trace.method = choice.method;
  trace.iterates.reserve(iterations);
  for (int k = 0; k < iterations; ++k) {
    RandomStream iter_rng = rng.substream(k);
    const SufficientStats stats =
        latent_path_stats(current, obs, choice, iter_rng);
    RandomStream draw_rng = iter_rng.substream(obs.gap_count());
    Eigen::MatrixXd next = sample_posterior_generator(stats, prior, draw_rng);
    current = Generator::validate(next);
    trace.iterates.push_back(std::move(next));
  }
  trace.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return trace;
}

EstimationTrace mcem_estimate(const Eigen::MatrixXd& initial,
                              const ObservationSeries& obs, int iterations,
                              int bridges_per_gap, const BridgeChoice& choice,
                              RandomStream& rng) {
  obs.validate();
  if (iterations < 1 || bridges_per_gap < 1)
    throw Error(Err::BadInput, "need iterations >= 1 and bridges >= 1");
  for (int i = 0; i < initial.rows(); ++i)
    for (int j = 0; j < initial.cols(); ++j)
      if (i != j && !(initial(i, j) > 0.0))
        throw Error(Err::BadInput,
                    "initial rates must be strictly positive off-diagonal");
  const auto start = std::chrono::steady_clock::now();

  Generator current = Generator::validate(initial);
  const int n = current.size();
  EstimationTrace trace;
  trace.burn_in = 0;
  trace.method = choice.method;
  trace.iterates.reserve(iterations);
  for (int k = 0; k < iterations; ++k) {
    RandomStream iter_rng = rng.substream(k);
    SufficientStats expected = SufficientStats::zero(n);
    for (int b = 0; b < bridges_per_gap; ++b) {
      RandomStream pass_rng = iter_rng.substream(b);
      expected.add(latent_path_stats(current, obs, choice, pass_rng));
    }
    expected.scale(1.0 / bridges_per_gap);

    Eigen::MatrixXd next = mle_from_stats(expected);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && next(i, j) < 1e-12) next(i, j) = 1e-12;
    next = with_diagonal(std::move(next));
    current = Generator::validate(next);
    trace.iterates.push_back(std::move(next));
  }
  trace.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return trace;
}

std::vector<ParamSummary> summarize_trace(const EstimationTrace& trace,
                                          int tail) {
  const int len = static_cast<int>(trace.iterates.size());
  if (tail < 1 || tail > len - trace.burn_in)
    throw Error(Err::BadInput, "tail must lie in [1, length - burn_in]");
  const int n = static_cast<int>(trace.iterates[0].rows());
  std::vector<ParamSummary> out;
  std::vector<double> values(tail);
  // nearest-rank quantile: x_(ceil(p*m)) with 1-based ranks
  auto rank = [&](double p) {
    const int r = static_cast<int>(std::ceil(p * tail));
    return std::clamp(r, 1, tail) - 1;
  };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      double mean = 0.0;
      for (int k = 0; k < tail; ++k) {
        values[k] = trace.iterates[len - tail + k](i, j);
        mean += values[k];
      }
      mean /= tail;
      std::sort(values.begin(), values.end());
      out.push_back({i, j, mean, values[rank(0.025)], values[rank(0.975)]});
    }
  }
  return out;
}

double observed_log_likelihood(const Eigen::MatrixXd& rates,
                               const ObservationSeries& obs) {
  obs.validate();
  const Generator g = Generator::validate(rates);
  double ll = 0.0;
  for (int k = 0; k < obs.gap_count(); ++k) {
    const double dt = obs.times[k + 1] - obs.times[k];
    const double p = transition_matrix(g, dt)(obs.states[k], obs.states[k + 1]);
    ll += std::log(std::max(p, 1e-300));
  }
  return ll;
}

void write_trace_csv(std::ostream& os, const EstimationTrace& trace) {
  os << "iter,i,j,value\n";
  char buf[64];
  for (size_t k = 0; k < trace.iterates.size(); ++k) {
    const auto& m = trace.iterates[k];
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) {
        if (i == j) continue;
        std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
        os << (k + 1) << "," << (i + 1) << "," << (j + 1) << "," << buf
           << "\n";
      }
  }
}

}  // namespace mjp
