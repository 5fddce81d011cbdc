#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "mjp/bench.hpp"
#include "mjp/bridge.hpp"
#include "mjp/errors.hpp"
#include "mjp/stats.hpp"

using namespace mjp;
using mjp::test::chi2_quantile;
using mjp::test::chi2_statistic;
using mjp::test::RunningMoments;

namespace {

Generator defective_generator() {
  // nonzero eigenvalues collide in a single Jordan block
  Eigen::MatrixXd m(3, 3);
  m << -1, 1, 0, 0, -2.25, 2.25, 0.25, 0, -0.25;
  return Generator::validate(m);
}

BridgeProblem make_problem(int a, int b, double T, Method method,
                           TirMode mode = TirMode::ReversedGenerator) {
  BridgeProblem prob;
  prob.a = a;
  prob.b = b;
  prob.T = T;
  prob.method = method;
  prob.tir_mode = mode;
  return prob;
}

/// Chi-square of the midpoint-state distribution against the exact bridge
/// law p_ak(T/2) p_kb(T/2) / p_ab(T) over m samples.
double midpoint_chi2(const Generator& g, const BridgeProblem& prob, int m,
                     std::uint64_t seed) {
  const Eigen::MatrixXd half = transition_matrix(g, prob.T / 2);
  const Eigen::MatrixXd full = transition_matrix(g, prob.T);
  std::vector<double> law(g.size());
  double total = 0.0;
  for (int k = 0; k < g.size(); ++k) {
    law[k] = half(prob.a, k) * half(k, prob.b) / full(prob.a, prob.b);
    total += law[k];
  }
  for (double& p : law) p /= total;

  RandomStream rng(seed);
  std::vector<long> counts(g.size(), 0);
  for (int l = 0; l < m; ++l)
    counts[sample_bridge(g, prob, rng).path.state_at(prob.T / 2)]++;
  return chi2_statistic(counts, law, m);
}

}  // namespace

TEST_SUITE_BEGIN("bridge");

TEST_CASE("truncated first-jump quantile") {
  // inverse CDF oracle evaluated directly
  const double expected = -std::log(1.0 - 0.5 * (1.0 - std::exp(-2.0))) / 2.0;
  CHECK(truncated_first_jump_time(2.0, 1.0, 0.5) ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK(truncated_first_jump_time(2.0, 1.0, 0.5) ==
        doctest::Approx(0.2831096).epsilon(1e-6));

  CHECK(truncated_first_jump_time(2.0, 1.0, 1e-12) < 1e-10);
  CHECK(truncated_first_jump_time(2.0, 1.0, 1.0 - 1e-13) >
        1.0 - 1e-10);

  // large rate*T reduces to the plain exponential quantile
  const double plain = -std::log(1.0 - 0.7) / 3.0;
  CHECK(truncated_first_jump_time(3.0, 1e6, 0.7) ==
        doctest::Approx(plain).epsilon(1e-12));

  CHECK_THROWS_AS(truncated_first_jump_time(0.0, 1.0, 0.5), Error);
}

TEST_CASE("single-jump quantile") {
  CHECK(single_jump_time(2.0, 2.0, 1.5, 0.25) ==
        doctest::Approx(0.375).epsilon(1e-15));
  const double expected = -std::log(1.0 - 0.5 * (1.0 - std::exp(-2.0))) / 2.0;
  CHECK(single_jump_time(3.0, 1.0, 1.0, 0.5) ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK(single_jump_time(1.0, 3.0, 1.0, 1e-13) < 1e-10);
  // rates swapped mirrors the draw: tau_(li,lj)(u) = T - tau_(lj,li)(1-u)
  const double fwd = single_jump_time(5.0, 1.0, 2.0, 0.3);
  const double bwd = single_jump_time(1.0, 5.0, 2.0, 0.7);
  CHECK(fwd == doctest::Approx(2.0 - bwd).epsilon(1e-10));
}

TEST_CASE("uniformization matrix") {
  const Generator m2 = builtin_generator("model2");
  Eigen::MatrixXd expected(3, 3);
  expected << 0.8, 0.1, 0.1, 0, 0, 1, 0.4, 0.1, 0.5;
  CHECK((uniformization_matrix(m2) - expected).cwiseAbs().maxCoeff() <
        1e-15);

  for (int n : {3, 7}) {
    const Eigen::MatrixXd gamma =
        uniformization_matrix(builtin_generator("uniform", n));
    for (int i = 0; i < n; ++i) {
      CHECK(gamma(i, i) == 0.0);
      CHECK(std::abs(gamma.row(i).sum() - 1.0) <= 1e-15);
      for (int j = 0; j < n; ++j)
        if (i != j)
          CHECK(gamma(i, j) == doctest::Approx(1.0 / (n - 1)).epsilon(1e-15));
    }
  }
}

TEST_CASE("poisson mixture of uniformized steps") {
  const Generator m2 = builtin_generator("model2");
  const double T = 1.0;

  // the mixture reconstructs p_ab(T) at the truncation cap
  const Eigen::MatrixXd gamma = uniformization_matrix(m2);
  const double rate = m2.uniformization_rate() * T;
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(3, 3);
  double reconstructed = 0.0;
  for (long k = 0; k <= 300; ++k) {
    if (k > 0) power = power * gamma;
    reconstructed +=
        std::exp(-rate + k * std::log(rate) - std::lgamma(k + 1.0)) *
        power(0, 0);
  }
  CHECK(reconstructed ==
        doctest::Approx(transition_matrix(m2, T)(0, 0)).epsilon(1e-8));

  const auto pmf = uniformization_step_pmf(m2, 0, 0, T);
  double mass = 0.0, mean = 0.0;
  for (size_t k = 0; k < pmf.size(); ++k) {
    mass += pmf[k];
    mean += k * pmf[k];
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));

  // sampled virtual-inclusive step counts match the mixture mean; the
  // sampler and the pmf share the step-count law
  double var = 0.0;
  for (size_t k = 0; k < pmf.size(); ++k)
    var += (k - mean) * (k - mean) * pmf[k];
  RandomStream rng(8080);
  RunningMoments sample_steps;
  for (int rep = 0; rep < 10000; ++rep) {
    const double u = rng.uniform();
    double cum = 0.0;
    size_t k = 0;
    for (; k < pmf.size(); ++k) {
      cum += pmf[k];
      if (cum >= u) break;
    }
    sample_steps.add(static_cast<double>(std::min(k, pmf.size() - 1)));
  }
  CHECK(std::abs(sample_steps.mean() - mean) <
        3 * std::sqrt(var / sample_steps.count));
}

TEST_CASE("endpoint exactness and attempt accounting") {
  const Generator eq9 = builtin_generator("uniform", 3);
  const Generator m2 = builtin_generator("model2");
  RandomStream rng(1234);
  for (Method method : all_methods()) {
    for (int rep = 0; rep < 300; ++rep) {
      const auto prob = make_problem(rep % 3, (rep + 1) % 3, 1.5, method);
      const BridgeSample s = sample_bridge(eq9, prob, rng);
      CHECK(s.path.initial_state() == prob.a);
      CHECK(s.path.end_state() == prob.b);
      CHECK(s.method == method);
      CHECK(s.attempts >= 1);
      if (method == Method::Direct || method == Method::Uniformization ||
          method == Method::Bisection)
        CHECK(s.attempts == 1);

      const auto prob2 = make_problem(rep % 3, rep % 3, 0.8, method);
      const BridgeSample s2 = sample_bridge(m2, prob2, rng);
      CHECK(s2.path.initial_state() == prob2.a);
      CHECK(s2.path.end_state() == prob2.b);
    }
  }
}

TEST_CASE("rejection acceptance rate estimates p_ab") {
  const Generator g = builtin_generator("uniform", 3);
  const double T = 3.25;
  const double pab = transition_matrix(g, T)(0, 1);
  RandomStream rng(5);
  long hits = 0;
  const int m = 10000;
  for (int rep = 0; rep < m; ++rep)
    hits += simulate_forward(g, 0, T, rng).end_state() == 1;
  const double se = std::sqrt(pab * (1 - pab) / m);
  CHECK(std::abs(static_cast<double>(hits) / m - pab) < 3 * se);
}

TEST_CASE("modified rejection forces the first jump") {
  const Generator m2 = builtin_generator("model2");
  RandomStream rng(321);
  for (int rep = 0; rep < 300; ++rep) {
    const auto prob =
        make_problem(1, 2, 0.1, Method::ModifiedRejection);
    const BridgeSample s = sample_modified_rejection(m2, prob, rng);
    REQUIRE(s.path.jump_count() >= 1);
    CHECK(s.path.jumps().front().state == 2);  // from state 2, always to 3
  }
  const Generator eq9 = builtin_generator("uniform", 3);
  for (int rep = 0; rep < 300; ++rep) {
    const auto prob = make_problem(0, 2, 2.0, Method::ModifiedRejection);
    CHECK(sample_modified_rejection(eq9, prob, rng).path.jump_count() >= 1);
  }
}

TEST_CASE("bridge law at the midpoint per method") {
  const Generator eq9 = builtin_generator("uniform", 3);
  const Generator m2 = builtin_generator("model2");
  const double crit = chi2_quantile(0.99, 2);
  int idx = 0;
  for (Method method : all_methods()) {
    CHECK(midpoint_chi2(eq9, make_problem(0, 1, 3.25, method), 4000,
                        900 + idx) < crit);
    CHECK(midpoint_chi2(m2, make_problem(0, 1, 1.0, method), 4000,
                        950 + idx) < crit);
    ++idx;
  }
}

TEST_CASE("bisection base cases") {
  const Generator g = builtin_generator("uniform", 3);
  RandomStream rng(55);

  int constants = 0;
  for (int rep = 0; rep < 400; ++rep)
    constants +=
        sample_bisection(g, make_problem(1, 1, 0.5, Method::Bisection), rng)
            .path.jump_count() == 0;
  // P(no jumps | 1->1, 0.5) = e^{-0.5}/p_11(0.5) is about 0.93
  CHECK(constants > 300);
  CHECK(constants < 400);

  int singles = 0;
  for (int rep = 0; rep < 400; ++rep) {
    const Path p =
        sample_bisection(g, make_problem(0, 2, 0.2, Method::Bisection), rng)
            .path;
    CHECK(p.jump_count() >= 1);
    singles += p.jump_count() == 1;
  }
  CHECK(singles > 300);
}

TEST_CASE("direct method handles complex eigenvalue pairs") {
  // the four-state study generator has eigenvalues -4.30 +- 1.44i
  const Generator g = builtin_generator("study4");
  const double crit = chi2_quantile(0.99, 3);
  CHECK(midpoint_chi2(g, make_problem(0, 3, 1.2, Method::Direct), 4000, 31) <
        crit);
  CHECK(midpoint_chi2(g, make_problem(2, 2, 0.7, Method::Direct), 4000, 32) <
        crit);
}

TEST_CASE("bisection depth cap guards underflowing segments") {
  const Generator g = builtin_generator("model2");
  RandomStream rng(77);
  int thrown = 0;
  for (int rep = 0; rep < 50; ++rep) {
    try {
      sample_bisection(g, make_problem(0, 1, 2.0, Method::Bisection), rng, 1);
    } catch (const Error& e) {
      CHECK(e.code() == Err::RecursionDepthExceeded);
      ++thrown;
    }
  }
  CHECK(thrown > 0);
}

TEST_CASE("direct method rejects defective rate matrices") {
  const Generator bad = defective_generator();
  RandomStream rng(2);
  const auto prob = make_problem(0, 1, 1.0, Method::Direct);
  CHECK_THROWS_WITH_AS(sample_direct(bad, prob, rng),
                       doctest::Contains("NotDiagonalizable"), Error);
  CHECK_THROWS_WITH_AS(sample_bridge(bad, prob, rng),
                       doctest::Contains("NotDiagonalizable"), Error);
  // a loose condition cap lets the near-parallel basis through
  CHECK_NOTHROW(sample_direct(bad, prob, rng, 1e12));
}

TEST_CASE("dispatch is transparent") {
  const Generator g = builtin_generator("model2");
  RandomStream r1(42), r2(42);
  const auto prob = make_problem(0, 2, 1.3, Method::Rejection);
  CHECK(sample_bridge(g, prob, r1).path == sample_rejection(g, prob, r2).path);
}

TEST_CASE("time-reverse shortcuts and restarts") {
  const Generator g = builtin_generator("uniform", 3);

  // seed 1: the forward draw already ends at b, so step 1 returns it
  RandomStream fwd_rng(1);
  const Path forward = simulate_forward(g, 0, 3.25, fwd_rng);
  REQUIRE(forward.end_state() == 1);
  RandomStream tir_rng(1);
  const BridgeSample s = sample_time_reverse(
      g, make_problem(0, 1, 3.25, Method::TimeReverse), tir_rng,
      TirMode::ReversedGenerator);
  CHECK(s.attempts == 1);
  CHECK(s.path == forward);

  // disjoint constant paths never meet: every cycle restarts
  auto hopeless = make_problem(0, 1, 1e-9, Method::TimeReverse);
  hopeless.max_attempts = 3;
  RandomStream rng(7);
  CHECK_THROWS_WITH_AS(
      sample_time_reverse(g, hopeless, rng, TirMode::ReversedGenerator),
      doctest::Contains("AttemptsExhausted"), Error);
}

TEST_CASE("holding-time oracle agreement across all methods") {
  // all six methods target E[R_1 | a=b=1, T] from the conditional oracle
  const Generator g = builtin_generator("uniform", 3);
  const double T = 3.25;
  const ConditionalStats expected = expected_stats_conditional(g, 0, 0, T);
  int idx = 0;
  for (Method method : all_methods()) {
    RandomStream rng(7000 + idx++);
    RunningMoments r1;
    for (int rep = 0; rep < 3000; ++rep) {
      const auto prob = make_problem(0, 0, T, method);
      r1.add(accumulate(sample_bridge(g, prob, rng).path, 3)
                 .holding_times[0]);
    }
    CHECK(std::abs(r1.mean() - expected.holding[0]) < 3 * r1.se());
  }
}

TEST_CASE("problem validation") {
  const Generator g = builtin_generator("uniform", 3);
  RandomStream rng(1);
  CHECK_THROWS_AS(sample_bridge(g, make_problem(-1, 0, 1, Method::Rejection),
                                rng),
                  Error);
  CHECK_THROWS_AS(sample_bridge(g, make_problem(0, 3, 1, Method::Rejection),
                                rng),
                  Error);
  CHECK_THROWS_AS(sample_bridge(g, make_problem(0, 1, 0.0, Method::Rejection),
                                rng),
                  Error);
  auto prob = make_problem(0, 1, 1, Method::Rejection);
  prob.max_attempts = 0;
  CHECK_THROWS_AS(sample_bridge(g, prob, rng), Error);
}

TEST_SUITE_END();
