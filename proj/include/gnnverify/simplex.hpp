#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace gnnverify {

/// lo <= sum_j coef_j x_j <= hi; either side may be infinite.
struct SparseRow {
  std::vector<std::pair<int, double>> entries;
  double lo = 0.0;
  double hi = 0.0;
};

enum class LpStatus { Feasible, Infeasible, IterationLimit };

/// Dense bounded-variable primal simplex deciding feasibility of
/// {row bounds, column bounds}. Phase one minimises the sum of bound
/// infeasibilities of basic variables (Dantzig pricing, Bland's rule after a
/// run of degenerate pivots). The basis and tableau survive between solves, so
/// re-solving after a bound change starts from the previous vertex.
class BoundedSimplex {
 public:
  BoundedSimplex() = default;
  BoundedSimplex(int num_cols, std::vector<SparseRow> rows, std::vector<double> col_lo,
                 std::vector<double> col_hi);

  int num_rows() const { return m_; }
  int num_cols() const { return n_; }

  void set_bounds(int col, double lo, double hi);
  double lower(int col) const { return lo_[col]; }
  double upper(int col) const { return hi_[col]; }

  LpStatus solve(double feas_tol, long max_iterations);

  /// Rebuilds the tableau from the original rows for the current basis and
  /// recomputes basic values. Falls back to the slack basis if singular.
  void reinvert();

  double value(int col) const { return x_[col]; }
  std::vector<double> primal() const { return {x_.begin(), x_.begin() + n_}; }
  long iterations() const { return iterations_; }

 private:
  double& tab(int r, int c) { return tab_[static_cast<std::size_t>(r) * total_ + c]; }
  double tab(int r, int c) const { return tab_[static_cast<std::size_t>(r) * total_ + c]; }

  void reset_slack_basis();
  void recompute_basics();
  void pivot(int r, int c);
  double nonbasic_value(int j) const;

  int m_ = 0;
  int n_ = 0;
  int total_ = 0;
  std::vector<SparseRow> rows_;
  std::vector<double> tab_;
  std::vector<int> basis_;     // row -> variable
  std::vector<int> position_;  // variable -> row, or -1 when nonbasic
  std::vector<char> at_upper_;
  std::vector<double> lo_, hi_, x_;
  long iterations_ = 0;
  long pivots_since_reinvert_ = 0;
};

}  // namespace gnnverify
