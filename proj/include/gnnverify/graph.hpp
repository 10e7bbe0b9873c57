#pragma once

#include <compare>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gnnverify/matrix.hpp"

namespace gnnverify {

using NodeId = std::size_t;

/// Raised for malformed user inputs (shapes, indices, budgets).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Directed arc u -> v: u sends messages to v.
struct Arc {
  NodeId from = 0;
  NodeId to = 0;
  auto operator<=>(const Arc&) const = default;
};

inline constexpr int kUnlimitedBudget = std::numeric_limits<int>::max();

/// Attributed directed graph <V, E, X>. Undirected inputs are stored as arc
/// pairs and keep the flag so that perturbations toggle both arcs at once.
class AttributedGraph {
 public:
  AttributedGraph() = default;
  AttributedGraph(std::size_t num_nodes, std::vector<Arc> arcs, Matrix attrs,
                  bool directed = true);

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t attr_dim() const { return attrs_.cols(); }
  bool directed() const { return directed_; }

  /// Sorted, duplicate-free arc list (both orientations for undirected graphs).
  const std::vector<Arc>& arcs() const { return arcs_; }
  bool has_arc(NodeId from, NodeId to) const;
  /// Ascending in-neighbours of v under E.
  const std::vector<NodeId>& in_neighbors(NodeId v) const { return in_[v]; }

  const Matrix& attrs() const { return attrs_; }
  std::span<const double> attr(NodeId v) const { return attrs_.row(v); }

  void check_node(NodeId v) const;

 private:
  std::size_t num_nodes_ = 0;
  bool directed_ = true;
  std::vector<Arc> arcs_;
  std::vector<std::vector<NodeId>> in_;
  Matrix attrs_;
};

/// Admissible perturbation space: fragile pairs F, global budget, local
/// per-node budgets and per-coordinate attribute radii.
struct PerturbationSpec {
  std::vector<Arc> fragile;
  int global_budget = 0;
  int local_default = kUnlimitedBudget;
  std::map<NodeId, int> local;
  double eps_default = 0.0;
  std::map<std::pair<NodeId, std::size_t>, double> eps;

  int local_budget(NodeId v) const;
  double epsilon(NodeId v, std::size_t i) const;
  bool is_fragile(Arc a) const;

  /// Sorts/dedups F and, for undirected graphs, adds the reverse of every
  /// fragile arc. Throws InputError on invalid indices, self-loops or
  /// negative/non-finite budgets.
  void normalize_for(const AttributedGraph& g);

  static PerturbationSpec all_edges(const AttributedGraph& g, int global_budget,
                                    int local_default = kUnlimitedBudget,
                                    double eps_default = 0.0);
};

/// Incoming neighbours of one node split by fragility.
struct NeighborPartition {
  std::vector<NodeId> fixed_in;        // (u,v) in E \ F
  std::vector<NodeId> fragile_in;      // (u,v) in E ∩ F
  std::vector<NodeId> fragile_absent;  // (u,v) in F \ E

  std::size_t total() const { return fixed_in.size() + fragile_in.size() + fragile_absent.size(); }
  bool operator==(const NeighborPartition&) const = default;
};

/// Structural edits. Every deleted arc is in E ∩ F, every inserted one in F \ E.
struct EdgeEditSet {
  std::vector<Arc> deletions;
  std::vector<Arc> insertions;

  bool empty() const { return deletions.empty() && insertions.empty(); }
  bool operator==(const EdgeEditSet&) const = default;
};

/// A group of arcs toggled by one perturbation decision: a single arc for
/// directed graphs, both orientations of a pair for undirected ones.
struct FragileUnit {
  std::vector<Arc> arcs;
  bool present = false;  // arcs currently in E
};

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> violations;
  explicit operator bool() const { return ok; }
};

/// Nodes with a path of length <= k to t under E (t included), ascending.
std::vector<NodeId> relevant_nodes(const AttributedGraph& g, NodeId t, int k);

/// Same, but over E ∪ F: every node whose perturbed connections can reach t.
std::vector<NodeId> relevant_nodes(const AttributedGraph& g, const PerturbationSpec& spec,
                                   NodeId t, int k);

NeighborPartition partition_incoming(const AttributedGraph& g, const PerturbationSpec& spec,
                                     NodeId v);

std::vector<FragileUnit> fragile_units(const AttributedGraph& g, const PerturbationSpec& spec);

/// Number of perturbation decisions in an edit set (arc pairs count once on
/// undirected graphs).
std::size_t edit_count(const AttributedGraph& g, const EdgeEditSet& edits);

ValidationReport validate_perturbation(const AttributedGraph& g, const PerturbationSpec& spec,
                                       const EdgeEditSet& edits, const Matrix& new_attrs,
                                       double tol = 1e-9);

/// G~ = <V, (E \ deletions) ∪ insertions, new_attrs>.
AttributedGraph apply_perturbation(const AttributedGraph& g, const EdgeEditSet& edits,
                                   const Matrix& new_attrs);

/// Validates against spec first and throws InputError listing violations.
AttributedGraph apply_perturbation(const AttributedGraph& g, const PerturbationSpec& spec,
                                   const EdgeEditSet& edits, const Matrix& new_attrs);

}  // namespace gnnverify
