#ifndef MJP_PATH_HPP
#define MJP_PATH_HPP

#include <vector>

#include "mjp/generator.hpp"
#include "mjp/rng.hpp"

namespace mjp {

struct Jump {
  double time;
  int state;  // state entered at `time`

  bool operator==(const Jump&) const = default;
};

/// Right-continuous step function on [0, horizon]: an initial state plus
/// strictly increasing jump times in the open interval (0, horizon) with
/// consecutive states distinct. Invariants are enforced at construction.
class Path {
 public:
  Path(int initial_state, std::vector<Jump> jumps, double horizon);

  int initial_state() const { return initial_state_; }
  double horizon() const { return horizon_; }
  const std::vector<Jump>& jumps() const { return jumps_; }
  int jump_count() const { return static_cast<int>(jumps_.size()); }

  /// State at time t (right-continuous at jump instants).
  int state_at(double t) const;
  int end_state() const {
    return jumps_.empty() ? initial_state_ : jumps_.back().state;
  }

  bool operator==(const Path&) const = default;

 private:
  int initial_state_;
  std::vector<Jump> jumps_;
  double horizon_;
};

/// Unconditioned forward simulation from state a over [0, T].
Path simulate_forward(const Generator& g, int a, double T, RandomStream& rng);

/// Path whose state at t equals p's state at horizon - t.
Path reverse_path(const Path& p);

}  // namespace mjp

#endif
