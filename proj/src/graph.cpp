#include "gnnverify/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

namespace gnnverify {

namespace {

void sort_unique(std::vector<Arc>& arcs) {
  std::sort(arcs.begin(), arcs.end());
  arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());
}

bool contains(const std::vector<Arc>& sorted, Arc a) {
  return std::binary_search(sorted.begin(), sorted.end(), a);
}

// Reverse BFS from t along the given in-adjacency, up to k hops.
std::vector<NodeId> reach_backwards(std::size_t n, NodeId t, int k,
                                    const std::vector<std::vector<NodeId>>& in) {
  std::vector<int> dist(n, -1);
  std::deque<NodeId> queue{t};
  dist[t] = 0;
  while (!queue.empty()) {
    NodeId v = queue.front();
    queue.pop_front();
    if (dist[v] >= k) continue;
    for (NodeId u : in[v]) {
      if (dist[u] < 0) {
        dist[u] = dist[v] + 1;
        queue.push_back(u);
      }
    }
  }
  std::vector<NodeId> out;
  for (NodeId v = 0; v < n; ++v)
    if (dist[v] >= 0) out.push_back(v);
  return out;
}

}  // namespace

AttributedGraph::AttributedGraph(std::size_t num_nodes, std::vector<Arc> arcs, Matrix attrs,
                                 bool directed)
    : num_nodes_(num_nodes), directed_(directed), arcs_(std::move(arcs)), attrs_(std::move(attrs)) {
  if (attrs_.rows() != num_nodes_)
    throw InputError("graph: attribute matrix has " + std::to_string(attrs_.rows()) +
                     " rows, expected " + std::to_string(num_nodes_));
  for (double x : attrs_.data())
    if (!std::isfinite(x)) throw InputError("graph: non-finite attribute value");
  for (const Arc& a : arcs_) {
    if (a.from >= num_nodes_ || a.to >= num_nodes_)
      throw InputError("graph: edge (" + std::to_string(a.from) + "," + std::to_string(a.to) +
                       ") references a missing node");
    if (a.from == a.to) throw InputError("graph: self-loop at node " + std::to_string(a.from));
  }
  if (!directed_) {
    const std::size_t m = arcs_.size();
    for (std::size_t i = 0; i < m; ++i) arcs_.push_back({arcs_[i].to, arcs_[i].from});
  }
  const std::size_t before = arcs_.size();
  sort_unique(arcs_);
  if (directed_ && arcs_.size() != before) throw InputError("graph: duplicate edge");
  in_.assign(num_nodes_, {});
  for (const Arc& a : arcs_) in_[a.to].push_back(a.from);
  for (auto& list : in_) std::sort(list.begin(), list.end());
}

bool AttributedGraph::has_arc(NodeId from, NodeId to) const {
  return contains(arcs_, Arc{from, to});
}

void AttributedGraph::check_node(NodeId v) const {
  if (v >= num_nodes_)
    throw InputError("node index " + std::to_string(v) + " out of range (n=" +
                     std::to_string(num_nodes_) + ")");
}

int PerturbationSpec::local_budget(NodeId v) const {
  auto it = local.find(v);
  return it == local.end() ? local_default : it->second;
}

double PerturbationSpec::epsilon(NodeId v, std::size_t i) const {
  auto it = eps.find({v, i});
  return it == eps.end() ? eps_default : it->second;
}

bool PerturbationSpec::is_fragile(Arc a) const { return contains(fragile, a); }

void PerturbationSpec::normalize_for(const AttributedGraph& g) {
  for (const Arc& a : fragile) {
    if (a.from >= g.num_nodes() || a.to >= g.num_nodes())
      throw InputError("perturbation: fragile pair references a missing node");
    if (a.from == a.to) throw InputError("perturbation: fragile self-loop");
  }
  if (!g.directed()) {
    const std::size_t m = fragile.size();
    for (std::size_t i = 0; i < m; ++i) fragile.push_back({fragile[i].to, fragile[i].from});
  }
  sort_unique(fragile);
  if (global_budget < 0 || local_default < 0) throw InputError("perturbation: negative budget");
  for (const auto& [v, b] : local) {
    g.check_node(v);
    if (b < 0) throw InputError("perturbation: negative local budget");
  }
  if (!std::isfinite(eps_default) || eps_default < 0)
    throw InputError("perturbation: attribute budget must be finite and non-negative");
  for (const auto& [key, e] : eps) {
    g.check_node(key.first);
    if (key.second >= g.attr_dim()) throw InputError("perturbation: attribute index out of range");
    if (!std::isfinite(e) || e < 0)
      throw InputError("perturbation: attribute budget must be finite and non-negative");
  }
}

PerturbationSpec PerturbationSpec::all_edges(const AttributedGraph& g, int global_budget,
                                             int local_default, double eps_default) {
  PerturbationSpec spec;
  spec.fragile = g.arcs();
  spec.global_budget = global_budget;
  spec.local_default = local_default;
  spec.eps_default = eps_default;
  spec.normalize_for(g);
  return spec;
}

std::vector<NodeId> relevant_nodes(const AttributedGraph& g, NodeId t, int k) {
  g.check_node(t);
  if (k < 0) throw InputError("relevant_nodes: negative hop count");
  std::vector<std::vector<NodeId>> in(g.num_nodes());
  for (NodeId v = 0; v < g.num_nodes(); ++v) in[v] = g.in_neighbors(v);
  return reach_backwards(g.num_nodes(), t, k, in);
}

std::vector<NodeId> relevant_nodes(const AttributedGraph& g, const PerturbationSpec& spec,
                                   NodeId t, int k) {
  g.check_node(t);
  if (k < 0) throw InputError("relevant_nodes: negative hop count");
  std::vector<std::vector<NodeId>> in(g.num_nodes());
  for (const Arc& a : g.arcs()) in[a.to].push_back(a.from);
  for (const Arc& a : spec.fragile) in[a.to].push_back(a.from);
  return reach_backwards(g.num_nodes(), t, k, in);
}

NeighborPartition partition_incoming(const AttributedGraph& g, const PerturbationSpec& spec,
                                     NodeId v) {
  g.check_node(v);
  NeighborPartition p;
  for (NodeId u : g.in_neighbors(v)) {
    if (spec.is_fragile({u, v}))
      p.fragile_in.push_back(u);
    else
      p.fixed_in.push_back(u);
  }
  for (const Arc& a : spec.fragile)
    if (a.to == v && !g.has_arc(a.from, v)) p.fragile_absent.push_back(a.from);
  std::sort(p.fragile_absent.begin(), p.fragile_absent.end());
  return p;
}

std::vector<FragileUnit> fragile_units(const AttributedGraph& g, const PerturbationSpec& spec) {
  std::vector<FragileUnit> units;
  for (const Arc& a : spec.fragile) {
    const bool present = g.has_arc(a.from, a.to);
    if (g.directed()) {
      units.push_back({{a}, present});
    } else if (a.from < a.to) {
      units.push_back({{a, Arc{a.to, a.from}}, present});
    }
  }
  return units;
}

std::size_t edit_count(const AttributedGraph& g, const EdgeEditSet& edits) {
  const std::size_t arcs = edits.deletions.size() + edits.insertions.size();
  return g.directed() ? arcs : arcs / 2;
}

ValidationReport validate_perturbation(const AttributedGraph& g, const PerturbationSpec& spec,
                                       const EdgeEditSet& edits, const Matrix& new_attrs,
                                       double tol) {
  if (new_attrs.rows() != g.attrs().rows() || new_attrs.cols() != g.attrs().cols())
    throw InputError("validate_perturbation: attribute matrix shape mismatch");

  ValidationReport report;
  auto fail = [&](std::string msg) {
    report.ok = false;
    report.violations.push_back(std::move(msg));
  };
  auto arc_str = [](Arc a) {
    return "(" + std::to_string(a.from) + "," + std::to_string(a.to) + ")";
  };

  std::set<Arc> edited;
  for (const Arc& a : edits.deletions) {
    if (!spec.is_fragile(a)) fail("deletion " + arc_str(a) + " is not fragile");
    if (!g.has_arc(a.from, a.to)) fail("deletion " + arc_str(a) + " is not an edge");
    if (!edited.insert(a).second) fail("duplicate edit " + arc_str(a));
  }
  for (const Arc& a : edits.insertions) {
    if (!spec.is_fragile(a)) fail("insertion " + arc_str(a) + " is not fragile");
    if (g.has_arc(a.from, a.to)) fail("insertion " + arc_str(a) + " is already an edge");
    if (!edited.insert(a).second) fail("duplicate edit " + arc_str(a));
  }
  if (!g.directed()) {
    for (const Arc& a : edited)
      if (!edited.contains(Arc{a.to, a.from}))
        fail("edit " + arc_str(a) + " lacks its reverse on an undirected graph");
  }

  if (edit_count(g, edits) > static_cast<std::size_t>(spec.global_budget))
    fail("global budget");

  std::map<NodeId, int> per_node;
  for (const Arc& a : edited) ++per_node[a.to];
  for (const auto& [v, count] : per_node)
    if (count > spec.local_budget(v)) fail("local budget at " + std::to_string(v));

  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    for (std::size_t i = 0; i < g.attr_dim(); ++i) {
      const double d = std::abs(new_attrs(v, i) - g.attrs()(v, i));
      if (!std::isfinite(new_attrs(v, i)) || d > spec.epsilon(v, i) + tol)
        fail("attribute budget at (" + std::to_string(v) + "," + std::to_string(i) + ")");
    }
  }
  return report;
}

AttributedGraph apply_perturbation(const AttributedGraph& g, const EdgeEditSet& edits,
                                   const Matrix& new_attrs) {
  if (new_attrs.rows() != g.attrs().rows() || new_attrs.cols() != g.attrs().cols())
    throw InputError("apply_perturbation: attribute matrix shape mismatch");
  std::set<Arc> arcs(g.arcs().begin(), g.arcs().end());
  for (const Arc& a : edits.deletions)
    if (arcs.erase(a) == 0) throw InputError("apply_perturbation: deleting a missing edge");
  for (const Arc& a : edits.insertions)
    if (!arcs.insert(a).second) throw InputError("apply_perturbation: inserting an existing edge");
  if (g.directed())
    return AttributedGraph(g.num_nodes(), std::vector<Arc>(arcs.begin(), arcs.end()), new_attrs);
  // The constructor re-adds reverse arcs for undirected graphs.
  std::vector<Arc> half;
  for (const Arc& a : arcs)
    if (a.from < a.to) half.push_back(a);
  return AttributedGraph(g.num_nodes(), std::move(half), new_attrs, false);
}

AttributedGraph apply_perturbation(const AttributedGraph& g, const PerturbationSpec& spec,
                                   const EdgeEditSet& edits, const Matrix& new_attrs) {
  ValidationReport report = validate_perturbation(g, spec, edits, new_attrs);
  if (!report) {
    std::string msg = "inadmissible perturbation:";
    for (const auto& v : report.violations) msg += " " + v + ";";
    throw InputError(msg);
  }
  return apply_perturbation(g, edits, new_attrs);
}

}  // namespace gnnverify
