#include "mjp/path.hpp"

#include <algorithm>
#include <cmath>

#include "mjp/errors.hpp"

namespace mjp {

Path::Path(int initial_state, std::vector<Jump> jumps, double horizon)
    : initial_state_(initial_state),
      jumps_(std::move(jumps)),
      horizon_(horizon) {
  if (!(horizon_ > 0.0) || !std::isfinite(horizon_))
    throw Error(Err::BadInput, "path horizon must be positive");
  if (initial_state_ < 0) throw Error(Err::BadInput, "negative state");
  int prev_state = initial_state_;
  double prev_time = 0.0;
  for (const Jump& jump : jumps_) {
    if (!(jump.time > prev_time) || !(jump.time < horizon_))
      throw Error(Err::BadInput,
                  "jump times must be strictly increasing inside (0, horizon)");
    if (jump.state == prev_state)
      throw Error(Err::BadInput, "self-jump in path");
    if (jump.state < 0) throw Error(Err::BadInput, "negative state");
    prev_time = jump.time;
    prev_state = jump.state;
  }
}

int Path::state_at(double t) const {
  if (t < 0.0 || t > horizon_)
    throw Error(Err::BadInput, "time outside [0, horizon]");
  auto it = std::upper_bound(
      jumps_.begin(), jumps_.end(), t,
      [](double value, const Jump& jump) { return value < jump.time; });
  if (it == jumps_.begin()) return initial_state_;
  return std::prev(it)->state;
}

Path simulate_forward(const Generator& g, int a, double T, RandomStream& rng) {
  if (a < 0 || a >= g.size()) throw Error(Err::BadInput, "state out of range");
  if (!(T > 0.0)) throw Error(Err::BadInput, "horizon must be positive");
  std::vector<Jump> jumps;
  int state = a;
  double t = 0.0;
  for (;;) {
    double next = t + rng.exponential(g.exit_rate(state));
    while (next <= t) next = t + rng.exponential(g.exit_rate(state));
    if (next >= T) break;
    Eigen::VectorXd weights = g.rates().row(state).cwiseMax(0.0);
    weights[state] = 0.0;
    state = rng.categorical(weights);
    jumps.push_back({next, state});
    t = next;
  }
  return Path(a, std::move(jumps), T);
}

Path reverse_path(const Path& p) {
  const auto& jumps = p.jumps();
  const int m = static_cast<int>(jumps.size());
  std::vector<Jump> reversed(m);
  for (int k = 0; k < m; ++k) {
    const double time = p.horizon() - jumps[m - 1 - k].time;
    const int state =
        (m - 1 - k == 0) ? p.initial_state() : jumps[m - 2 - k].state;
    reversed[k] = {time, state};
  }
  return Path(p.end_state(), std::move(reversed), p.horizon());
}

}  // namespace mjp
