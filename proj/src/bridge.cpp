#include "mjp/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>

#include "mjp/errors.hpp"

namespace mjp {

Method method_from_string(const std::string& name) {
  if (name == "rej") return Method::Rejection;
  if (name == "mor") return Method::ModifiedRejection;
  if (name == "dir") return Method::Direct;
  if (name == "uni") return Method::Uniformization;
  if (name == "bis") return Method::Bisection;
  if (name == "tir") return Method::TimeReverse;
  throw Error(Err::UnknownName, "unknown method '" + name + "'");
}

const char* method_name(Method m) {
  switch (m) {
    case Method::Rejection: return "rej";
    case Method::ModifiedRejection: return "mor";
    case Method::Direct: return "dir";
    case Method::Uniformization: return "uni";
    case Method::Bisection: return "bis";
    case Method::TimeReverse: return "tir";
  }
  return "?";
}

TirMode tir_mode_from_string(const std::string& name) {
  if (name == "paper") return TirMode::PaperFaithful;
  if (name == "reversed") return TirMode::ReversedGenerator;
  throw Error(Err::UnknownName, "unknown tir-mode '" + name + "'");
}

const char* tir_mode_name(TirMode mode) {
  return mode == TirMode::PaperFaithful ? "paper" : "reversed";
}

std::vector<Method> all_methods() {
  return {Method::Rejection,       Method::ModifiedRejection, Method::Direct,
          Method::Uniformization,  Method::Bisection,
          Method::TimeReverse};
}

namespace {

void check_problem(const Generator& g, const BridgeProblem& prob) {
  if (prob.a < 0 || prob.a >= g.size() || prob.b < 0 || prob.b >= g.size())
    throw Error(Err::BadInput, "endpoint state out of range");
  if (!(prob.T > 0.0)) throw Error(Err::BadInput, "horizon must be positive");
  if (prob.max_attempts < 1)
    throw Error(Err::BadInput, "max_attempts must be >= 1");
}

[[noreturn]] void throw_attempts(const Generator& g, const BridgeProblem& prob,
                                 Method m) {
  double pab = std::numeric_limits<double>::quiet_NaN();
  try {
    pab = transition_matrix(g, prob.T)(prob.a, prob.b);
  } catch (const Error&) {
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "%s exhausted %ld attempts; acceptance probability p_ab(T) "
                "is about %.3g",
                method_name(m), prob.max_attempts, pab);
  throw Error(Err::AttemptsExhausted, buf);
}

int draw_next_state(const Generator& g, int from, RandomStream& rng) {
  Eigen::VectorXd weights = g.rates().row(from).cwiseMax(0.0);
  weights[from] = 0.0;
  return rng.categorical(weights);
}

/// Quantile of the density proportional to e^{-delta s} on (0, T).
double truncated_exponential_quantile(double delta, double T, double u) {
  double tau;
  if (std::abs(delta) < 1e-12) {
    tau = u * T;
  } else if (delta > 0.0) {
    tau = -std::log1p(u * std::expm1(-delta * T)) / delta;
  } else {
    const double gamma = -delta;
    tau = T + std::log(u + (1.0 - u) * std::exp(-gamma * T)) / gamma;
  }
  if (tau <= 0.0) tau = std::nextafter(0.0, T);
  if (tau >= T) tau = std::nextafter(T, 0.0);
  return tau;
}

}  // namespace

double truncated_first_jump_time(double rate, double T, double u) {
  if (!(rate > 0.0) || !(T > 0.0) || !(u > 0.0 && u < 1.0))
    throw Error(Err::BadInput, "truncated_first_jump_time arguments");
  return truncated_exponential_quantile(rate, T, u);
}

double single_jump_time(double rate_i, double rate_j, double T, double u) {
  if (!(rate_i > 0.0) || !(rate_j > 0.0) || !(T > 0.0) ||
      !(u > 0.0 && u < 1.0))
    throw Error(Err::BadInput, "single_jump_time arguments");
  return truncated_exponential_quantile(rate_i - rate_j, T, u);
}

BridgeSample sample_rejection(const Generator& g, const BridgeProblem& prob,
                              RandomStream& rng) {
  check_problem(g, prob);
  for (long attempt = 1; attempt <= prob.max_attempts; ++attempt) {
    Path p = simulate_forward(g, prob.a, prob.T, rng);
    if (p.end_state() == prob.b)
      return {std::move(p), attempt, Method::Rejection};
  }
  throw_attempts(g, prob, Method::Rejection);
}

BridgeSample sample_modified_rejection(const Generator& g,
                                       const BridgeProblem& prob,
                                       RandomStream& rng) {
  check_problem(g, prob);
  if (prob.a == prob.b) {
    BridgeSample s = sample_rejection(g, prob, rng);
    s.method = Method::ModifiedRejection;
    return s;
  }

  // A crossing bridge jumps at least once, so the first jump may be forced
  // from the truncated exponential; the rest of the proposal runs forward
  // unconditionally and is accepted on its terminal state.
  for (long attempt = 1; attempt <= prob.max_attempts; ++attempt) {
    double first;
    do {
      first = truncated_first_jump_time(g.exit_rate(prob.a), prob.T,
                                        rng.uniform());
    } while (first <= 0.0 || first >= prob.T);
    const int c = draw_next_state(g, prob.a, rng);

    const double rem = prob.T - first;
    std::vector<Jump> jumps{{first, c}};
    if (rem > 0.0) {
      const Path tail = simulate_forward(g, c, rem, rng);
      if (tail.end_state() != prob.b) continue;
      bool valid = true;
      for (const Jump& jump : tail.jumps()) {
        const double at = first + jump.time;
        if (at <= jumps.back().time || at >= prob.T) {
          valid = false;
          break;
        }
        jumps.push_back({at, jump.state});
      }
      if (!valid) continue;
    } else if (c != prob.b) {
      continue;
    }
    return {Path(prob.a, std::move(jumps), prob.T), attempt,
            Method::ModifiedRejection};
  }
  throw_attempts(g, prob, Method::ModifiedRejection);
}

// ---------------------------------------------------------------------------
// Direct method: spectral waiting-time CDF plus bracketed bisection.

namespace {

struct Spectral {
  Eigen::VectorXcd values;
  Eigen::MatrixXcd vectors;   // U
  Eigen::MatrixXcd inverse;   // U^{-1}
};

Spectral decompose(const Generator& g, double condition_cap) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(g.rates());
  if (solver.info() != Eigen::Success)
    throw Error(Err::NotDiagonalizable, "eigen decomposition failed");
  Spectral s;
  s.values = solver.eigenvalues();
  s.vectors = solver.eigenvectors();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(s.vectors);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (!(smin > 0.0) || smax / smin > condition_cap)
    throw Error(Err::NotDiagonalizable,
                "eigenvector condition number above " +
                    std::to_string(condition_cap));
  s.inverse = s.vectors.inverse();
  return s;
}

double spectral_transition(const Spectral& s, int from, int to, double t) {
  std::complex<double> acc = 0.0;
  const int n = static_cast<int>(s.values.size());
  for (int k = 0; k < n; ++k)
    acc += s.vectors(from, k) * std::exp(s.values[k] * t) * s.inverse(k, to);
  return std::max(acc.real(), 0.0);
}

}  // namespace

BridgeSample sample_direct(const Generator& g, const BridgeProblem& prob,
                           RandomStream& rng, double condition_cap) {
  check_problem(g, prob);
  const Spectral spec = decompose(g, condition_cap);
  const int n = g.size();

  std::vector<Jump> jumps;
  int cur = prob.a;
  double t = 0.0;
  for (;;) {
    const double rem = prob.T - t;
    if (cur == prob.b) {
      const double pbb = spectral_transition(spec, cur, prob.b, rem);
      if (pbb <= 0.0) throw Error(Err::RootFindFailure, "vanishing p_bb");
      const double atom = std::exp(-g.exit_rate(cur) * rem) / pbb;
      if (rng.uniform() < atom) break;
    }

    // CDF of the next jump time: F(s) = Re sum_k c_k e^{d_k rem} h(lam+d_k, s)
    // with h(z, s) = (1 - e^{-z s})/z and c_k = sum_j lam_{cur,j} U_jk V_kb.
    const double lam = g.exit_rate(cur);
    Eigen::VectorXcd coeff(n);
    for (int k = 0; k < n; ++k) {
      std::complex<double> acc = 0.0;
      for (int j = 0; j < n; ++j)
        if (j != cur) acc += g.rate(cur, j) * spec.vectors(j, k);
      coeff[k] = acc * spec.inverse(k, prob.b) * std::exp(spec.values[k] * rem);
    }
    auto cdf = [&](double s) {
      std::complex<double> acc = 0.0;
      for (int k = 0; k < n; ++k) {
        const std::complex<double> z = lam + spec.values[k];
        if (std::abs(z) < 1e-12)
          acc += coeff[k] * s;
        else
          acc += coeff[k] * (1.0 - std::exp(-z * s)) / z;
      }
      return acc.real();
    };

    const double mass = cdf(rem);
    if (!(mass > 0.0))
      throw Error(Err::RootFindFailure, "waiting-time CDF has no mass");
    const double target = rng.uniform() * mass;
    double lo = 0.0, hi = rem;
    int guard = 0;
    while (hi - lo > 1e-10) {
      const double mid = 0.5 * (lo + hi);
      (cdf(mid) < target ? lo : hi) = mid;
      if (++guard > 200)
        throw Error(Err::RootFindFailure, "stall in waiting-time bisection");
    }
    double s = 0.5 * (lo + hi);
    if (s <= 0.0) s = std::nextafter(0.0, rem);
    if (s >= rem) s = std::nextafter(rem, 0.0);

    Eigen::VectorXd weights = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < n; ++j)
      if (j != cur)
        weights[j] =
            g.rate(cur, j) * spectral_transition(spec, j, prob.b, rem - s);
    if (!(weights.sum() > 0.0))
      throw Error(Err::RootFindFailure, "no admissible next state");
    const int next = rng.categorical(weights);

    double at = t + s;
    if (at <= t) at = std::nextafter(t, prob.T);
    if (at >= prob.T) at = std::nextafter(prob.T, t);
    jumps.push_back({at, next});
    cur = next;
    t = at;
  }
  return {Path(prob.a, std::move(jumps), prob.T), 1, Method::Direct};
}

// ---------------------------------------------------------------------------
// Uniformization: Poisson-mixture step count plus a discrete bridge of Gamma.

Eigen::MatrixXd uniformization_matrix(const Generator& g) {
  const int n = g.size();
  return Eigen::MatrixXd::Identity(n, n) +
         g.rates() / g.uniformization_rate();
}

namespace {

long step_count_cap(double poisson_rate) {
  return static_cast<long>(
      std::ceil(poisson_rate + 20.0 * std::sqrt(poisson_rate) + 50.0));
}

double poisson_log_pmf(long k, double rate) {
  return -rate + static_cast<double>(k) * std::log(rate) -
         std::lgamma(static_cast<double>(k) + 1.0);
}

}  // namespace

std::vector<double> uniformization_step_pmf(const Generator& g, int a, int b,
                                            double T) {
  const double pab = transition_matrix(g, T)(a, b);
  if (!(pab > 0.0)) throw Error(Err::UnreachableEndpoint, "p_ab(T) vanishes");
  const double rate = g.uniformization_rate() * T;
  const long cap = step_count_cap(rate);
  const Eigen::MatrixXd gamma = uniformization_matrix(g);
  Eigen::MatrixXd power =
      Eigen::MatrixXd::Identity(g.size(), g.size());
  std::vector<double> pmf;
  pmf.reserve(cap + 1);
  double total = 0.0;
  for (long k = 0; k <= cap; ++k) {
    if (k > 0) power = power * gamma;
    const double w = std::exp(poisson_log_pmf(k, rate)) * power(a, b) / pab;
    pmf.push_back(w);
    total += w;
  }
  if (total < 1.0 - 1e-10)
    throw Error(Err::SeriesTruncation,
                "poisson mixture mass " + std::to_string(total) +
                    " below 1-1e-10 at cap " + std::to_string(cap));
  for (double& w : pmf) w /= total;
  return pmf;
}

BridgeSample sample_uniformization(const Generator& g,
                                   const BridgeProblem& prob,
                                   RandomStream& rng) {
  check_problem(g, prob);
  const double pab = transition_matrix(g, prob.T)(prob.a, prob.b);
  if (!(pab > 0.0)) throw Error(Err::UnreachableEndpoint, "p_ab(T) vanishes");
  const double rate = g.uniformization_rate() * prob.T;
  const long cap = step_count_cap(rate);
  const Eigen::MatrixXd gamma = uniformization_matrix(g);

  std::vector<Eigen::MatrixXd> powers;
  powers.emplace_back(Eigen::MatrixXd::Identity(g.size(), g.size()));
  const double u = rng.uniform();
  double cum = 0.0;
  long steps = -1;
  for (long k = 0; k <= cap; ++k) {
    if (k > 0) powers.push_back(powers.back() * gamma);
    cum += std::exp(poisson_log_pmf(k, rate)) * powers[k](prob.a, prob.b) / pab;
    if (cum >= u) {
      steps = k;
      break;
    }
  }
  if (steps < 0) {
    if (cum >= 1.0 - 1e-10)
      steps = cap;  // u fell in the floating-point sliver above the sum
    else
      throw Error(Err::SeriesTruncation,
                  "poisson mixture mass " + std::to_string(cum) +
                      " below 1-1e-10 at cap " + std::to_string(cap));
  }

  std::vector<double> times(steps);
  bool distinct = false;
  while (!distinct) {
    for (double& x : times) x = rng.uniform() * prob.T;
    std::sort(times.begin(), times.end());
    distinct = true;
    for (size_t k = 0; k + 1 < times.size(); ++k)
      if (times[k + 1] <= times[k]) distinct = false;
    if (!times.empty() && (times.front() <= 0.0 || times.back() >= prob.T))
      distinct = false;
  }

  std::vector<int> seq(steps + 1);
  seq[0] = prob.a;
  if (steps > 0) seq[steps] = prob.b;
  for (long k = 1; k < steps; ++k) {
    Eigen::VectorXd weights(g.size());
    for (int j = 0; j < g.size(); ++j)
      weights[j] = gamma(seq[k - 1], j) * powers[steps - k](j, prob.b);
    seq[k] = rng.categorical(weights);
  }

  std::vector<Jump> jumps;
  for (long k = 1; k <= steps; ++k)
    if (seq[k] != seq[k - 1]) jumps.push_back({times[k - 1], seq[k]});
  return {Path(prob.a, std::move(jumps), prob.T), 1, Method::Uniformization};
}

// ---------------------------------------------------------------------------
// Bisection: exact 0/1-jump base cases, midpoint draw corrected for them,
// and a joint redraw of the two halves until at least two jumps remain.

namespace {

// integral_0^x e^{-li s} e^{-lj (t-s)} ds for x = t ("full") or t/2 ("low")
double one_jump_integral(double li, double lj, double t, double x) {
  const double d = li - lj;
  if (std::abs(d) < 1e-14 * std::max(1.0, li))
    return x * std::exp(-li * t);
  return std::exp(-lj * t) * (-std::expm1(-d * x)) / d;
}

struct BisectionContext {
  const Generator& g;
  RandomStream& rng;
  int depth_cap;
};

/// Probability of the segment's degenerate outcome: no jump for a returning
/// segment, exactly one jump for a crossing one.
double base_case_probability(const BisectionContext& ctx, int i, int j,
                             double t, double pij) {
  const double li = ctx.g.exit_rate(i);
  if (i == j) return std::min(std::exp(-li * t) / pij, 1.0);
  const double lj = ctx.g.exit_rate(j);
  return std::min(
      ctx.g.rate(i, j) * one_jump_integral(li, lj, t, t) / pij, 1.0);
}

void emit_base_case(BisectionContext& ctx, int i, int j, double t,
                    double offset, std::vector<Jump>& out) {
  if (i == j) return;
  const double tau = single_jump_time(ctx.g.exit_rate(i), ctx.g.exit_rate(j),
                                      t, ctx.rng.uniform());
  out.push_back({offset + tau, j});
}

/// Samples the jumps of an (i, j, t) bridge segment. With `require_two` the
/// segment is conditioned on carrying at least two jumps (its degenerate
/// base case is excluded); this is how the halves inherit the parent's
/// "not 0 or 1 jumps overall" conditioning without any rejection loop.
void bisect_segment(BisectionContext& ctx, int i, int j, double t,
                    double offset, const Eigen::MatrixXd& pt, int depth,
                    std::vector<Jump>& out, bool require_two = false) {
  if (depth > ctx.depth_cap)
    throw Error(Err::RecursionDepthExceeded,
                "bisection deeper than " + std::to_string(ctx.depth_cap));
  const double pij = pt(i, j);
  if (!(pij > 0.0))
    throw Error(Err::UnreachableEndpoint, "vanishing segment probability");
  const double li = ctx.g.exit_rate(i);
  const double lj = ctx.g.exit_rate(j);

  const double base = base_case_probability(ctx, i, j, t, pij);
  if (!require_two && ctx.rng.uniform() < base) {
    emit_base_case(ctx, i, j, t, offset, out);
    return;
  }

  // Midpoint law corrected for the excluded base case: a returning segment
  // with no jump pins the midpoint at i; a crossing segment with one jump
  // pins it at i (jump in the second half) or j (jump in the first half).
  Eigen::VectorXd atom = Eigen::VectorXd::Zero(ctx.g.size());
  if (i == j) {
    atom[i] = base;
  } else {
    const double low =
        ctx.g.rate(i, j) * one_jump_integral(li, lj, t, 0.5 * t) / pij;
    atom[j] = std::min(low, base);
    atom[i] = base - atom[j];
  }

  const Eigen::MatrixXd ph = transition_matrix(ctx.g, 0.5 * t);
  Eigen::VectorXd weights(ctx.g.size());
  for (int k = 0; k < ctx.g.size(); ++k)
    weights[k] = std::max(ph(i, k) * ph(k, j) / pij - atom[k], 0.0);
  if (!(weights.sum() > 0.0))
    for (int k = 0; k < ctx.g.size(); ++k)
      weights[k] = ph(i, k) * ph(k, j);  // fp corner: correction consumed all mass
  const int mid = ctx.rng.categorical(weights);

  const double th = 0.5 * t;
  if (mid != i && mid != j) {
    // Both halves cross, so two jumps are guaranteed.
    bisect_segment(ctx, i, mid, th, offset, ph, depth + 1, out);
    bisect_segment(ctx, mid, j, th, offset + th, ph, depth + 1, out);
    return;
  }

  // One half could realize its base case; jointly exclude the combination
  // that would leave the whole segment with fewer than two jumps.
  const double base1 = base_case_probability(ctx, i, mid, th, ph(i, mid));
  const double base2 = base_case_probability(ctx, mid, j, th, ph(mid, j));
  Eigen::VectorXd combo(3);
  combo << base1 * (1.0 - base2), (1.0 - base1) * base2,
      (1.0 - base1) * (1.0 - base2);
  if (!(combo.sum() > 0.0)) combo << 0.0, 0.0, 1.0;
  const int which = ctx.rng.categorical(combo);

  if (which == 0)
    emit_base_case(ctx, i, mid, th, offset, out);
  else
    bisect_segment(ctx, i, mid, th, offset, ph, depth + 1, out, true);
  if (which == 1)
    emit_base_case(ctx, mid, j, th, offset + th, out);
  else
    bisect_segment(ctx, mid, j, th, offset + th, ph, depth + 1, out, true);
}

}  // namespace

BridgeSample sample_bisection(const Generator& g, const BridgeProblem& prob,
                              RandomStream& rng, int depth_cap) {
  check_problem(g, prob);
  BisectionContext ctx{g, rng, depth_cap};
  std::vector<Jump> jumps;
  const Eigen::MatrixXd pt = transition_matrix(g, prob.T);
  bisect_segment(ctx, prob.a, prob.b, prob.T, 0.0, pt, 0, jumps);
  return {Path(prob.a, std::move(jumps), prob.T), 1, Method::Bisection};
}

// ---------------------------------------------------------------------------
// Time-reverse method.

namespace {

std::optional<double> first_meeting_time(const Path& p1, const Path& p2) {
  int s1 = p1.initial_state();
  int s2 = p2.initial_state();
  if (s1 == s2) return 0.0;
  size_t i1 = 0, i2 = 0;
  const auto& j1 = p1.jumps();
  const auto& j2 = p2.jumps();
  while (i1 < j1.size() || i2 < j2.size()) {
    const double t1 =
        i1 < j1.size() ? j1[i1].time : std::numeric_limits<double>::infinity();
    const double t2 =
        i2 < j2.size() ? j2[i2].time : std::numeric_limits<double>::infinity();
    const double t = std::min(t1, t2);
    if (t1 == t) s1 = j1[i1++].state;
    if (t2 == t) s2 = j2[i2++].state;
    if (s1 == s2) return t;
  }
  return std::nullopt;
}

}  // namespace

BridgeSample sample_time_reverse(const Generator& g, const BridgeProblem& prob,
                                 RandomStream& rng, TirMode mode) {
  check_problem(g, prob);
  std::optional<Generator> reversed;
  if (mode == TirMode::ReversedGenerator) reversed = reversed_generator(g);
  const Generator& backward = reversed ? *reversed : g;

  for (long attempt = 1; attempt <= prob.max_attempts; ++attempt) {
    Path forward = simulate_forward(g, prob.a, prob.T, rng);
    if (forward.end_state() == prob.b)
      return {std::move(forward), attempt, Method::TimeReverse};

    Path backward_path =
        reverse_path(simulate_forward(backward, prob.b, prob.T, rng));
    if (backward_path.initial_state() == prob.a)
      return {std::move(backward_path), attempt, Method::TimeReverse};

    const auto tau = first_meeting_time(forward, backward_path);
    if (!tau) continue;
    std::vector<Jump> jumps;
    for (const Jump& jump : forward.jumps())
      if (jump.time <= *tau) jumps.push_back(jump);
    for (const Jump& jump : backward_path.jumps())
      if (jump.time > *tau) jumps.push_back(jump);
    try {
      return {Path(prob.a, std::move(jumps), prob.T), attempt,
              Method::TimeReverse};
    } catch (const Error&) {
      // coincident jump times across the two draws; recycle the attempt
      continue;
    }
  }
  throw_attempts(g, prob, Method::TimeReverse);
}

BridgeSample sample_bridge(const Generator& g, const BridgeProblem& prob,
                           RandomStream& rng) {
  switch (prob.method) {
    case Method::Rejection: return sample_rejection(g, prob, rng);
    case Method::ModifiedRejection:
      return sample_modified_rejection(g, prob, rng);
    case Method::Direct: return sample_direct(g, prob, rng);
    case Method::Uniformization: return sample_uniformization(g, prob, rng);
    case Method::Bisection: return sample_bisection(g, prob, rng);
    case Method::TimeReverse:
      return sample_time_reverse(g, prob, rng, prob.tir_mode);
  }
  throw Error(Err::BadInput, "unknown method");
}

}  // namespace mjp
