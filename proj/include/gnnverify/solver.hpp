#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gnnverify/bounds.hpp"
#include "gnnverify/milp.hpp"

namespace gnnverify {

enum class BranchingRule {
  MostFractional,  // ties broken by lowest VarId
  FirstFractional,
};

struct SolverConfig {
  double feasibility_tol = 1e-6;
  double integrality_tol = 1e-6;
  double time_limit = std::numeric_limits<double>::infinity();  // seconds per solve
  long node_limit = std::numeric_limits<long>::max();
  BranchingRule branching = BranchingRule::MostFractional;

  /// Throws InputError on non-positive tolerances or negative limits.
  void validate() const;
};

enum class SolveStatus { Sat, Unsat, Unknown };
enum class UnknownReason { None, TimeLimit, NodeLimit, Numeric };

std::string_view to_string(SolveStatus s);
std::string_view to_string(UnknownReason r);

struct SolveStats {
  long nodes = 0;
  long lp_iterations = 0;
  double wall_time = 0.0;
  std::size_t rows = 0;        // lowered rows after presolve
  std::size_t columns = 0;     // lowered columns after presolve
  std::size_t binaries = 0;    // including lowering auxiliaries
  std::size_t cuts = 0;        // retained global bound tightenings
};

struct SolveOutcome {
  SolveStatus status = SolveStatus::Unknown;
  UnknownReason reason = UnknownReason::None;
  /// Indexed by VarId value; NaN for ids never declared. Only set on Sat.
  std::vector<double> assignment;
  SolveStats stats;

  double value(VarId v) const { return assignment.at(v.value); }
};

/// Incremental MILP feasibility solver. Fragments are only ever conjoined;
/// globally valid bound tightenings found at the root of one solve are kept
/// and reused by later solves.
class SolverInstance {
 public:
  explicit SolverInstance(SolverConfig config = {});

  /// Conjoins a fragment. A variable may be redeclared only with identical
  /// bounds and type; otherwise InputError.
  void add_fragment(const MilpFragment& fragment);

  SolveOutcome solve();

  void set_time_limit(double seconds) { config_.time_limit = seconds; }
  const SolverConfig& config() const { return config_; }

  std::size_t num_variables() const;
  std::size_t num_constraints() const { return constraints_.size(); }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const std::vector<std::optional<VarInfo>>& variables() const { return vars_; }

 private:
  SolverConfig config_;
  std::vector<std::optional<VarInfo>> vars_;
  std::vector<Constraint> constraints_;
  std::vector<Interval> cuts_;  // global bound tightenings, parallel to vars_
  bool proven_unsat_ = false;
};

/// Objective written to an exported LP file. Feasibility problems use a
/// constant objective.
struct ObjectiveHint {
  bool maximize = false;
  std::vector<Term> terms;
};

/// LP-format text (objective, Subject To, Bounds, Binaries, End). Indicator
/// constraints use the "name: b = 1 -> expr <= rhs" syntax; max constraints
/// are lowered with bound-derived big-M rows first.
std::string export_lp(const std::vector<MilpFragment>& fragments, const ObjectiveHint& hint = {});

}  // namespace gnnverify
