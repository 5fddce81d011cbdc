#ifndef MJP_STATS_HPP
#define MJP_STATS_HPP

#include <iosfwd>

#include "mjp/path.hpp"

namespace mjp {

/// Jump counts N_ij and holding times R_i of a path, or averages of them
/// over an ensemble (then `ensemble` is set and N is real-valued).
struct SufficientStats {
  Eigen::MatrixXd jump_counts;   // N, diagonal identically zero
  Eigen::VectorXd holding_times; // R
  double horizon = 0.0;
  bool ensemble = false;

  static SufficientStats zero(int n) {
    return {Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n), 0.0, false};
  }

  void add(const SufficientStats& other);
  void scale(double factor);
};

/// Exact counts and occupation times of one path; needs the state count.
SufficientStats accumulate(const Path& p, int n);

/// Complete-data MLE: off-diagonals N_ij / R_i, diagonal the negated row
/// sums. Throws ZeroOccupation when some R_i is zero.
Eigen::MatrixXd mle_from_stats(const SufficientStats& s);

/// I_xy^{ij}(t) = integral_0^t p_xi(s) p_jy(t-s) ds via the augmented-block
/// matrix exponential.
double integral_I(const Generator& g, double t, int x, int y, int i, int j);

/// Same integral by adaptive Simpson quadrature (independent route).
double integral_I_quadrature(const Generator& g, double t, int x, int y,
                             int i, int j, double tol = 1e-10);

struct ConditionalStats {
  Eigen::MatrixXd jumps;    // E[N_ij | endpoints]
  Eigen::VectorXd holding;  // E[R_i | endpoints]
};

/// Conditional expectations of the sufficient statistics given X_0 = x and
/// X_t = y: E[N_ij] = rate_ij I_xy^{ij} / p_xy(t), E[R_i] = I_xy^{ii} / p_xy(t).
ConditionalStats expected_stats_conditional(const Generator& g, int x, int y,
                                            double t);

/// Closed form of the same expectations for the symmetric uniform-rate
/// family (exit rate 1, off-diagonals 1/(n-1)), using its two eigenvalues.
ConditionalStats expected_stats_uniform_closed_form(int n, double t, int x,
                                                    int y);

/// CSV schema: a "# T=<value>" header line, then rows "i,j,N_ij" and "i,R_i"
/// with 1-indexed states.
void write_stats_csv(std::ostream& os, const SufficientStats& s);
SufficientStats read_stats_csv(std::istream& is);

}  // namespace mjp

#endif
