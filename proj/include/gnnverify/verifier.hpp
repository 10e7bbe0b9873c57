#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gnnverify/bounds.hpp"
#include "gnnverify/encoder.hpp"
#include "gnnverify/graph.hpp"
#include "gnnverify/model.hpp"
#include "gnnverify/solver.hpp"

namespace gnnverify {

enum class VerifyMode { Incremental, Monolithic };
enum class VerdictStatus { Robust, NonRobust, Unknown };

std::string_view to_string(VerifyMode mode);
std::string_view to_string(VerdictStatus status);
VerifyMode parse_verify_mode(std::string_view name);

struct VerifyConfig {
  SolverConfig solver;
  VerifyMode mode = VerifyMode::Incremental;
  ObjectiveMode objective = ObjectiveMode::Full;
  BoundOptions bounds;
  double time_limit = 300.0;  // seconds per task, shared by all iterations
  double witness_tol = 1e-5;
};

/// A concrete admissible perturbation and the logits it produces at t.
struct Witness {
  EdgeEditSet edits;
  Matrix attrs;
  std::vector<double> logits;
};

struct IterationRecord {
  int layer = 0;  // layer fragment added before this solve
  SolveStatus status = SolveStatus::Unknown;
  SolveStats stats;
};

struct Verdict {
  VerdictStatus status = VerdictStatus::Unknown;
  std::size_t predicted = 0;
  std::vector<double> logits;          // unperturbed logits of t
  std::optional<Witness> witness;      // NonRobust only
  int proven_at = 0;                   // layer whose solve returned Unsat (Robust only)
  int last_completed = 0;              // last layer whose solve finished (Unknown only)
  UnknownReason reason = UnknownReason::None;
  std::string note;
  std::vector<IterationRecord> iterations;
  EncodingStats encoding;
  double time_s = 0.0;
};

/// Maps a Sat assignment back to a perturbation: pe = 1 flags become
/// deletions or insertions, attribute values are clamped into their boxes.
std::pair<EdgeEditSet, Matrix> extract_witness(std::span<const double> assignment,
                                               const VarRegistry& reg, const AttributedGraph& g,
                                               const PerturbationSpec& spec);

/// True when some class other than `predicted` has logit >= logit(predicted) - tol.
bool flips_or_ties(std::span<const double> logits, std::size_t predicted, double tol);

/// Exact robustness check of node t against its prediction on the
/// unperturbed graph. `spec` must be normalised for g.
Verdict verify_node(const GnnModel& model, const AttributedGraph& g, const PerturbationSpec& spec,
                    NodeId t, const VerifyConfig& config);

struct TaskResult {
  NodeId node = 0;
  bool skipped = false;
  std::string error;  // set when the task failed
  Verdict verdict;
};

struct BatchCounts {
  std::size_t robust = 0, nonrobust = 0, unknown = 0, skipped = 0, failed = 0;
};

struct BatchReport {
  std::vector<TaskResult> tasks;  // in target order
  BatchCounts counts;
};

/// Runs one task per target on `workers` threads. With labels, targets whose
/// prediction disagrees with the label are skipped unless `force` is set.
BatchReport verify_batch(const GnnModel& model, const AttributedGraph& g,
                         const PerturbationSpec& spec, const std::vector<NodeId>& targets,
                         const VerifyConfig& config, int workers = 1,
                         const std::optional<std::vector<int>>& labels = std::nullopt,
                         bool force = false);

struct SweepPoint {
  int global_budget = 0;
  BatchCounts counts;
};

/// Verdict counts for each global budget in `budgets`.
std::vector<SweepPoint> budget_sweep(const GnnModel& model, const AttributedGraph& g,
                                     const PerturbationSpec& spec,
                                     const std::vector<NodeId>& targets,
                                     const std::vector<int>& budgets, const VerifyConfig& config,
                                     int workers = 1,
                                     const std::optional<std::vector<int>>& labels = std::nullopt,
                                     bool force = false);

}  // namespace gnnverify
