#include "mjp/generator.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "mjp/errors.hpp"

namespace mjp {

const char* err_name(Err code) {
  switch (code) {
    case Err::NegativeOffDiagonal: return "NegativeOffDiagonal";
    case Err::RowSumNonzero: return "RowSumNonzero";
    case Err::AbsorbingState: return "AbsorbingState";
    case Err::Reducible: return "Reducible";
    case Err::SingularSolve: return "SingularSolve";
    case Err::NotConverged: return "NotConverged";
    case Err::Overflow: return "Overflow";
    case Err::AttemptsExhausted: return "AttemptsExhausted";
    case Err::NotDiagonalizable: return "NotDiagonalizable";
    case Err::RootFindFailure: return "RootFindFailure";
    case Err::SeriesTruncation: return "SeriesTruncation";
    case Err::RecursionDepthExceeded: return "RecursionDepthExceeded";
    case Err::ZeroOccupation: return "ZeroOccupation";
    case Err::UnreachableEndpoint: return "UnreachableEndpoint";
    case Err::UnknownName: return "UnknownName";
    case Err::BadDimension: return "BadDimension";
    case Err::BadInput: return "BadInput";
  }
  return "UnknownError";
}

namespace {

constexpr double kRowSumTol = 1e-12;

void check_irreducible(const Eigen::MatrixXd& rates) {
  const int n = static_cast<int>(rates.rows());
  // Warshall closure of the jump-chain digraph.
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      reach[i][j] = (i == j) || rates(i, j) > 0.0;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i) {
      if (!reach[i][k]) continue;
      for (int j = 0; j < n; ++j)
        if (reach[k][j]) reach[i][j] = true;
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!reach[i][j])
        throw Error(Err::Reducible,
                    "state " + std::to_string(j + 1) + " not reachable from " +
                        std::to_string(i + 1));
}

Eigen::VectorXd solve_stationary(const Eigen::MatrixXd& rates) {
  const int n = static_cast<int>(rates.rows());
  Eigen::MatrixXd a = rates.transpose();
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b[n - 1] = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible())
    throw Error(Err::SingularSolve, "stationary system is rank deficient");
  Eigen::VectorXd pi = lu.solve(b);
  if ((pi.array() <= 0.0).any())
    throw Error(Err::SingularSolve, "stationary solve gave nonpositive mass");
  pi /= pi.sum();
  const double residual = (pi.transpose() * rates).cwiseAbs().maxCoeff();
  if (residual > 1e-10)
    throw Error(Err::SingularSolve,
                "stationary residual " + std::to_string(residual));
  return pi;
}

}  // namespace

Generator Generator::validate(const Eigen::MatrixXd& raw) {
  if (raw.rows() != raw.cols())
    throw Error(Err::BadDimension, "rate matrix must be square");
  const int n = static_cast<int>(raw.rows());
  if (n < 2) throw Error(Err::BadDimension, "need at least 2 states");

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && raw(i, j) < 0.0)
        throw Error(Err::NegativeOffDiagonal,
                    "rate(" + std::to_string(i + 1) + "," +
                        std::to_string(j + 1) + ") = " +
                        std::to_string(raw(i, j)));
      if (!std::isfinite(raw(i, j)))
        throw Error(Err::BadInput, "non-finite rate entry");
    }
    const double row_sum = raw.row(i).sum();
    if (std::abs(row_sum) > kRowSumTol)
      throw Error(Err::RowSumNonzero, "row " + std::to_string(i + 1) +
                                          " sums to " + std::to_string(row_sum));
  }

  Eigen::VectorXd exit = -raw.diagonal();
  for (int i = 0; i < n; ++i)
    if (exit[i] <= 0.0)
      throw Error(Err::AbsorbingState,
                  "state " + std::to_string(i + 1) + " has zero exit rate");

  check_irreducible(raw);
  Eigen::VectorXd pi = solve_stationary(raw);
  const double mu = exit.maxCoeff();
  return Generator(raw, std::move(exit), std::move(pi), mu);
}

Eigen::MatrixXd transition_matrix(const Generator& g, double t) {
  if (t < 0.0) throw Error(Err::BadInput, "negative time");
  if (t * g.uniformization_rate() > 1e6)
    throw Error(Err::Overflow, "t*mu = " +
                                   std::to_string(t * g.uniformization_rate()) +
                                   " exceeds 1e6");
  if (t == 0.0)
    return Eigen::MatrixXd::Identity(g.size(), g.size());
  Eigen::MatrixXd p = (t * g.rates()).exp();
  return p.cwiseMax(0.0).cwiseMin(1.0);
}

const Eigen::VectorXd& stationary_distribution(const Generator& g) {
  return g.stationary();
}

namespace {

double stationary_distance(const Generator& g, double t, MatrixNorm norm) {
  const Eigen::MatrixXd p = transition_matrix(g, t);
  Eigen::MatrixXd diff =
      g.stationary().transpose().replicate(g.size(), 1) - p;
  if (norm == MatrixNorm::MaxAbs) return diff.cwiseAbs().maxCoeff();
  return diff.cwiseAbs().colwise().sum().maxCoeff();
}

}  // namespace

double stationary_time(const Generator& g, double eps,
                       const StationaryTimeOptions& opts) {
  if (eps <= 0.0) throw Error(Err::BadInput, "eps must be positive");
  double lo = 0.0;
  double hi = 1.0 / g.uniformization_rate();
  while (stationary_distance(g, hi, opts.norm) >= eps) {
    lo = hi;
    hi *= 2.0;
    if (hi > opts.time_cap)
      throw Error(Err::NotConverged,
                  "no t below cap " + std::to_string(opts.time_cap));
  }
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    if (stationary_distance(g, mid, opts.norm) < eps)
      hi = mid;
    else
      lo = mid;
  }
  return std::round(hi * 100.0) / 100.0;
}

Generator reversed_generator(const Generator& g) {
  const int n = g.size();
  const Eigen::VectorXd& pi = g.stationary();
  Eigen::MatrixXd rev(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j)
        rev(i, j) = g.rate(i, i);
      else
        rev(i, j) = pi[j] * g.rate(j, i) / pi[i];
    }
  }
  check_irreducible(rev);
  // Same pi by construction; reuse the original solve.
  return Generator(std::move(rev), g.exit_rates(), pi,
                   g.uniformization_rate());
}

namespace {

std::string strip_comments(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool in_comment = false;
  for (char c : text) {
    if (c == '#') in_comment = true;
    if (c == '\n') in_comment = false;
    if (!in_comment) out.push_back(c);
  }
  return out;
}

}  // namespace

Generator parse_generator_text(const std::string& text) {
  std::istringstream in(strip_comments(text));
  int n = 0;
  if (!(in >> n)) throw Error(Err::BadInput, "missing state count");
  if (n < 2) throw Error(Err::BadDimension, "state count must be >= 2");
  Eigen::MatrixXd raw(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!(in >> raw(i, j)))
        throw Error(Err::BadInput, "expected " + std::to_string(n * n) +
                                       " rate entries");
  double extra;
  if (in >> extra) throw Error(Err::BadInput, "trailing data after matrix");
  return Generator::validate(raw);
}

Generator load_generator_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Err::BadInput, "cannot open generator file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_generator_text(buf.str());
}

void write_generator(std::ostream& os, const Generator& g) {
  os << g.size() << "\n";
  for (int i = 0; i < g.size(); ++i) {
    for (int j = 0; j < g.size(); ++j) {
      if (j) os << " ";
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g", g.rate(i, j));
      os << buf;
    }
    os << "\n";
  }
}

}  // namespace mjp
