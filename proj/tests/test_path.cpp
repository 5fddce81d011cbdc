#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mjp/bench.hpp"
#include "mjp/errors.hpp"
#include "mjp/path.hpp"

using namespace mjp;
using mjp::test::RunningMoments;

TEST_SUITE_BEGIN("path");

TEST_CASE("path invariants are enforced") {
  CHECK_NOTHROW(Path(0, {{0.4, 1}, {0.9, 0}}, 1.5));
  CHECK_THROWS_AS(Path(0, {{0.4, 0}}, 1.0), Error);            // self-jump
  CHECK_THROWS_AS(Path(0, {{0.4, 1}, {0.4, 0}}, 1.0), Error);  // tie
  CHECK_THROWS_AS(Path(0, {{0.0, 1}}, 1.0), Error);            // jump at 0
  CHECK_THROWS_AS(Path(0, {{1.0, 1}}, 1.0), Error);            // jump at T
  CHECK_THROWS_AS(Path(0, {}, 0.0), Error);                    // no horizon
}

TEST_CASE("state evaluation is right-continuous") {
  const Path p(0, {{0.4, 1}, {0.9, 2}}, 1.5);
  CHECK(p.state_at(0.0) == 0);
  CHECK(p.state_at(0.4) == 1);
  CHECK(p.state_at(std::nextafter(0.4, 0.0)) == 0);
  CHECK(p.state_at(0.9) == 2);
  CHECK(p.state_at(1.5) == 2);
  CHECK(p.end_state() == 2);
  CHECK_THROWS_AS(p.state_at(1.6), Error);
}

TEST_CASE("forward simulation basics") {
  const Generator g = builtin_generator("model2");
  RandomStream rng(11);

  const Path tiny = simulate_forward(g, 0, 1e-9, rng);
  CHECK(tiny.jump_count() == 0);
  CHECK(tiny.end_state() == 0);

  // from state 2 the jump chain moves to state 3 with probability one
  for (int rep = 0; rep < 500; ++rep) {
    const Path p = simulate_forward(g, 1, 2.0, rng);
    if (p.jump_count() > 0) CHECK(p.jumps().front().state == 2);
  }
}

TEST_CASE("ergodic occupancy at a long horizon") {
  const Generator g = builtin_generator("uniform", 3);
  RandomStream rng(5150);
  long counts[3] = {0, 0, 0};
  const int m = 100000;
  for (int rep = 0; rep < m; ++rep)
    counts[simulate_forward(g, 0, 10.0, rng).end_state()]++;
  for (int k = 0; k < 3; ++k) {
    const double p = 1.0 / 3;
    const double se = std::sqrt(p * (1 - p) / m);
    CHECK(std::abs(static_cast<double>(counts[k]) / m - p) < 3 * se);
  }
}

TEST_CASE("holding times have mean 1/exit_rate") {
  // first holding time only: later visits are censored by the horizon
  const Generator g = builtin_generator("model2");
  RandomStream rng(606);
  for (int i = 0; i < 3; ++i) {
    RunningMoments first;
    for (int rep = 0; rep < 30000; ++rep) {
      const Path p = simulate_forward(g, i, 10.0, rng);
      if (p.jump_count() > 0) first.add(p.jumps().front().time);
    }
    const double target = 1.0 / g.exit_rate(i);
    CHECK(std::abs(first.mean() - target) < 3 * first.se());
  }
}

TEST_CASE("reverse_path examples") {
  const Path constant(2, {}, 3.0);
  CHECK(reverse_path(constant) == constant);

  const Path single(0, {{0.4, 1}}, 1.0);
  const Path reversed = reverse_path(single);
  CHECK(reversed.initial_state() == 1);
  REQUIRE(reversed.jump_count() == 1);
  CHECK(reversed.jumps()[0].time == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(reversed.jumps()[0].state == 0);

  CHECK(reverse_path(reversed) == single);
}

TEST_CASE("reverse_path matches the time-flipped evaluation") {
  const Generator g = builtin_generator("study4");
  RandomStream rng(99);
  for (int rep = 0; rep < 20; ++rep) {
    const Path p = simulate_forward(g, rep % 4, 5.0, rng);
    const Path r = reverse_path(p);
    // involution up to jump-time representation: states exact, times 1 ulp
    const Path back = reverse_path(r);
    CHECK(back.initial_state() == p.initial_state());
    REQUIRE(back.jump_count() == p.jump_count());
    for (int k = 0; k < p.jump_count(); ++k) {
      CHECK(back.jumps()[k].state == p.jumps()[k].state);
      CHECK(std::abs(back.jumps()[k].time - p.jumps()[k].time) <=
            std::abs(std::nextafter(p.horizon(), 2 * p.horizon()) -
                     p.horizon()));
    }
    for (int k = 0; k < 100; ++k) {
      const double t = rng.uniform() * 5.0;
      bool at_jump = false;  // jump instants follow right-continuity instead
      for (const Jump& j : r.jumps()) at_jump |= (j.time == t);
      if (!at_jump) CHECK(r.state_at(t) == p.state_at(5.0 - t));
    }
  }
}

TEST_SUITE_END();
