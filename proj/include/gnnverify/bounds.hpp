#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "gnnverify/graph.hpp"
#include "gnnverify/model.hpp"

namespace gnnverify {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  static Interval point(double x) { return {x, x}; }
  double width() const { return hi - lo; }
  bool contains(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }
  bool contains(const Interval& o) const { return o.lo >= lo && o.hi <= hi; }
  bool operator==(const Interval&) const = default;
};

/// z = aggr(fixed ∪ X2' ∪ X3') with X2' ⊆ deletable, X3' ⊆ insertable and
/// |deletable \ X2'| + |X3'| <= budget.
struct AggregationBoundProblem {
  std::vector<Interval> fixed;
  std::vector<Interval> deletable;
  std::vector<Interval> insertable;
  int budget = 0;

  std::size_t size() const { return fixed.size() + deletable.size() + insertable.size(); }
};

/// k-th largest upper bound for each requested rank (ranks >= 1); -inf when
/// the rank exceeds |xs|. One bounded heap serves all ranks.
std::vector<double> kth_largest_upper(std::span<const Interval> xs, std::span<const int> ranks);

/// k-th smallest lower bound for each rank; +inf for ranks <= 0, and +inf when
/// the rank exceeds |xs|.
std::vector<double> kth_smallest_lower(std::span<const Interval> xs, std::span<const int> ranks);

Interval sum_bounds(const AggregationBoundProblem& p);
Interval max_bounds(const AggregationBoundProblem& p);
Interval mean_bounds(const AggregationBoundProblem& p);
Interval tightened_bounds(Aggregation aggr, const AggregationBoundProblem& p);

/// Budget-oblivious baseline used for ablations: max takes the extreme bound
/// over every variable, mean scans sorted prefixes/postfixes of the editable
/// bounds, sum includes every editable term that helps. Without any possible
/// edit the membership is fixed and the result equals the tightened bounds.
Interval plain_bounds(Aggregation aggr, const AggregationBoundProblem& p);

/// Interval image of y = W_self h + W_neigh msg + b.
std::vector<Interval> linear_bounds(const GnnLayer& layer, std::span<const Interval> self,
                                    std::span<const Interval> msg);

Interval relu_bounds(Interval iv);

enum class BoundMethod { Tightened, Plain };

struct BoundOptions {
  BoundMethod method = BoundMethod::Tightened;
  double slack = 0.0;  // widens msg and y intervals on both sides
};

struct LayerBounds {
  std::vector<Interval> msg;
  std::vector<Interval> y;
  std::vector<Interval> h;
};

/// Interval boxes for every quantity of a verification task.
struct BoundsTable {
  int num_layers = 0;
  std::map<NodeId, std::vector<Interval>> attrs;       // h^(0) of every node in N_K(t)
  std::vector<std::map<NodeId, LayerBounds>> layers;   // index 1..K
  std::map<NodeId, Interval> degree;                   // in-degree range of nodes in N_{K-1}(t)
  std::map<NodeId, int> budget;                        // aggregation budget s_v

  /// Bounds of h^(k)_v (attrs for k = 0).
  const std::vector<Interval>& embedding(int k, NodeId v) const;
  bool has_node(int k, NodeId v) const;
};

/// s_v = min(global, local, number of fragile pairs into v).
int aggregation_budget(const PerturbationSpec& spec, NodeId v, const NeighborPartition& part);

/// Degree interval of v under at most s_v edits.
Interval degree_bounds(const NeighborPartition& part, int budget);

BoundsTable propagate(const GnnModel& model, const AttributedGraph& g,
                      const PerturbationSpec& spec, NodeId t, const BoundOptions& options = {});

}  // namespace gnnverify
