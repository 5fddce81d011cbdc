#include "mjp/stats.hpp"

#include <cmath>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "mjp/errors.hpp"

namespace mjp {

void SufficientStats::add(const SufficientStats& other) {
  jump_counts += other.jump_counts;
  holding_times += other.holding_times;
  horizon += other.horizon;
}

void SufficientStats::scale(double factor) {
  jump_counts *= factor;
  holding_times *= factor;
  horizon *= factor;
  ensemble = true;
}

SufficientStats accumulate(const Path& p, int n) {
  SufficientStats s = SufficientStats::zero(n);
  int state = p.initial_state();
  double prev = 0.0;
  for (const Jump& jump : p.jumps()) {
    if (jump.state >= n || state >= n)
      throw Error(Err::BadInput, "path state out of range");
    s.holding_times[state] += jump.time - prev;
    s.jump_counts(state, jump.state) += 1.0;
    state = jump.state;
    prev = jump.time;
  }
  s.holding_times[state] += p.horizon() - prev;
  s.horizon = p.horizon();
  return s;
}

Eigen::MatrixXd mle_from_stats(const SufficientStats& s) {
  const int n = static_cast<int>(s.holding_times.size());
  for (int i = 0; i < n; ++i)
    if (!(s.holding_times[i] > 0.0))
      throw Error(Err::ZeroOccupation,
                  "state " + std::to_string(i + 1) + " has zero holding time");
  Eigen::MatrixXd est = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      if (i != j) est(i, j) = s.jump_counts(i, j) / s.holding_times[i];
    est(i, i) = -est.row(i).sum();
  }
  return est;
}

double integral_I(const Generator& g, double t, int x, int y, int i, int j) {
  const int n = g.size();
  if (x < 0 || x >= n || y < 0 || y >= n || i < 0 || i >= n || j < 0 || j >= n)
    throw Error(Err::BadInput, "state index out of range");
  if (t < 0.0) throw Error(Err::BadInput, "negative time");
  if (t == 0.0) return 0.0;
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = g.rates();
  block.bottomRightCorner(n, n) = g.rates();
  block(i, n + j) = 1.0;
  const Eigen::MatrixXd e = (t * block).exp();
  return e(x, n + y);
}

namespace {

struct SimpsonBudget {
  long evals = 0;
  long cap = 1 << 20;
};

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double fa, double fm, double fb, double whole,
                        double tol, SimpsonBudget& budget, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  budget.evals += 2;
  if (budget.evals > budget.cap)
    throw Error(Err::NotConverged, "quadrature evaluation budget exhausted");
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth > 0 && std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, budget,
                          depth + 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, budget,
                          depth + 1);
}

}  // namespace

double integral_I_quadrature(const Generator& g, double t, int x, int y,
                             int i, int j, double tol) {
  if (t < 0.0) throw Error(Err::BadInput, "negative time");
  if (t == 0.0) return 0.0;
  const std::function<double(double)> f = [&](double s) {
    return transition_matrix(g, s)(x, i) * transition_matrix(g, t - s)(j, y);
  };
  const double fa = f(0.0);
  const double fm = f(0.5 * t);
  const double fb = f(t);
  SimpsonBudget budget;
  budget.evals = 3;
  const double whole = t / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, 0.0, t, fa, fm, fb, whole, tol, budget, 0);
}

ConditionalStats expected_stats_conditional(const Generator& g, int x, int y,
                                            double t) {
  const int n = g.size();
  const double pxy = transition_matrix(g, t)(x, y);
  if (pxy <= 1e-300)
    throw Error(Err::UnreachableEndpoint,
                "p_xy(t) vanishes for the requested endpoints");
  ConditionalStats out{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
  for (int i = 0; i < n; ++i) {
    out.holding[i] = integral_I(g, t, x, y, i, i) / pxy;
    for (int j = 0; j < n; ++j)
      if (i != j)
        out.jumps(i, j) = g.rate(i, j) * integral_I(g, t, x, y, i, j) / pxy;
  }
  return out;
}

ConditionalStats expected_stats_uniform_closed_form(int n, double t, int x,
                                                    int y) {
  if (n < 3) throw Error(Err::BadDimension, "closed form needs n >= 3");
  if (!(t > 0.0)) throw Error(Err::BadInput, "time must be positive");
  if (x < 0 || x >= n || y < 0 || y >= n)
    throw Error(Err::BadInput, "state index out of range");
  const double amp = 1.0 / n;
  const double beta = static_cast<double>(n) / (n - 1);
  const double decay = std::exp(-beta * t);
  const double off_rate = 1.0 / (n - 1);
  auto bump = [&](int u, int v) { return (u == v ? 1.0 : 0.0) - amp; };
  auto integral = [&](int i, int j) {
    return amp * amp * t +
           amp / beta * (1.0 - decay) * (bump(x, i) + bump(j, y)) +
           bump(x, i) * bump(j, y) * t * decay;
  };
  const double pxy = amp + bump(x, y) * decay;

  ConditionalStats out{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
  for (int i = 0; i < n; ++i) {
    out.holding[i] = integral(i, i) / pxy;
    for (int j = 0; j < n; ++j)
      if (i != j) out.jumps(i, j) = off_rate * integral(i, j) / pxy;
  }
  return out;
}

void write_stats_csv(std::ostream& os, const SufficientStats& s) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", s.horizon);
  os << "# T=" << buf << "\n";
  const int n = static_cast<int>(s.holding_times.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      std::snprintf(buf, sizeof(buf), "%.17g", s.jump_counts(i, j));
      os << (i + 1) << "," << (j + 1) << "," << buf << "\n";
    }
  for (int i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", s.holding_times[i]);
    os << (i + 1) << "," << buf << "\n";
  }
}

SufficientStats read_stats_csv(std::istream& is) {
  std::string line;
  double horizon = -1.0;
  struct Entry { int i, j; double v; };
  std::vector<Entry> jumps;
  std::vector<std::pair<int, double>> holds;
  int n = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("T=");
      if (pos != std::string::npos) horizon = std::stod(line.substr(pos + 2));
      continue;
    }
    std::istringstream row(line);
    std::string f1, f2, f3;
    std::getline(row, f1, ',');
    std::getline(row, f2, ',');
    if (std::getline(row, f3, ',')) {
      const int i = std::stoi(f1), j = std::stoi(f2);
      jumps.push_back({i, j, std::stod(f3)});
      n = std::max({n, i, j});
    } else {
      const int i = std::stoi(f1);
      holds.emplace_back(i, std::stod(f2));
      n = std::max(n, i);
    }
  }
  if (horizon < 0.0 || n < 2)
    throw Error(Err::BadInput, "malformed stats CSV");
  SufficientStats s = SufficientStats::zero(n);
  s.horizon = horizon;
  for (const auto& e : jumps) s.jump_counts(e.i - 1, e.j - 1) = e.v;
  for (const auto& [i, v] : holds) s.holding_times[i - 1] = v;
  return s;
}

}  // namespace mjp
