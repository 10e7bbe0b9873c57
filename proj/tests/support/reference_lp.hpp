#pragma once

#include <optional>
#include <random>
#include <vector>

#include "gnnverify/milp.hpp"
#include "gnnverify/simplex.hpp"
#include "gnnverify/solver.hpp"

namespace testsupport {

/// Textbook two-phase check in standard form with Bland's rule: is
/// {lo_r <= a_r x <= hi_r, col_lo <= x <= col_hi} non-empty? Column bounds
/// must be finite.
bool reference_lp_feasible(int num_cols, const std::vector<gnnverify::SparseRow>& rows,
                           const std::vector<double>& col_lo, const std::vector<double>& col_hi);

/// Exact status of an abstract constraint set by enumerating every binary
/// assignment and every argmax choice of max constraints, one LP each.
gnnverify::SolveStatus enumerate_milp(const std::vector<std::optional<gnnverify::VarInfo>>& vars,
                                      const std::vector<gnnverify::Constraint>& constraints);

struct TinyMilp {
  std::vector<std::optional<gnnverify::VarInfo>> vars;
  std::vector<gnnverify::Constraint> constraints;

  gnnverify::MilpFragment fragment() const;
};

/// Up to 6 binaries and 10 continuous variables with random linear,
/// indicator and max constraints.
TinyMilp random_tiny_milp(std::mt19937_64& rng);

}  // namespace testsupport
