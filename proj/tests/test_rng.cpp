#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mjp/rng.hpp"

using namespace mjp;
using mjp::test::RunningMoments;

TEST_SUITE_BEGIN("rng");

TEST_CASE("streams are deterministic and keyed") {
  RandomStream a(123), b(123), c(124);
  for (int k = 0; k < 64; ++k) CHECK(a.next_u64() == b.next_u64());
  bool differs = false;
  for (int k = 0; k < 64; ++k) differs |= (a.next_u64() != c.next_u64());
  CHECK(differs);

  RandomStream root(9);
  RandomStream s1 = root.substream(1);
  RandomStream s1_again = root.substream(1);
  RandomStream s2 = root.substream(2);
  CHECK(s1.next_u64() == s1_again.next_u64());
  CHECK(s1.next_u64() != s2.next_u64());

  // children do not depend on the parent's consumption
  RandomStream fresh(9);
  fresh.next_u64();
  CHECK(fresh.substream(1).next_u64() == root.substream(1).next_u64());
}

TEST_CASE("uniform stays inside the open interval") {
  RandomStream rng(77);
  for (int k = 0; k < 100000; ++k) {
    const double u = rng.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("gamma moments") {
  RandomStream rng(31337);
  RunningMoments m;
  for (int k = 0; k < 100000; ++k) m.add(rng.gamma(6.0, 3.0));
  CHECK(std::abs(m.mean() - 2.0) < 3 * m.se());
  CHECK(std::abs(m.variance() - 6.0 / 9.0) < 0.03);

  RunningMoments small;  // shape below one goes through the boost path
  for (int k = 0; k < 100000; ++k) small.add(rng.gamma(0.5, 2.0));
  CHECK(std::abs(small.mean() - 0.25) < 3 * small.se());
}

TEST_CASE("categorical respects weights") {
  RandomStream rng(4);
  Eigen::VectorXd w(3);
  w << 1.0, 0.0, 3.0;
  long counts[3] = {0, 0, 0};
  for (int k = 0; k < 40000; ++k) counts[rng.categorical(w)]++;
  CHECK(counts[1] == 0);
  CHECK(std::abs(counts[0] / 40000.0 - 0.25) < 0.01);
}

TEST_SUITE_END();
