#include "instances.hpp"

#include <algorithm>
#include <bit>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace testsupport {

using namespace gnnverify;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

std::string Instance::describe() const {
  std::ostringstream os;
  os << "n=" << graph.num_nodes() << " arcs=" << graph.arcs().size() << " K=" << model.num_layers()
     << " aggr=" << to_string(model.aggregation()) << " t=" << target << " |F|=" << spec.fragile.size()
     << " delta=" << spec.global_budget
     << " regime=" << (regime == Regime::AllEdges ? "all-edges" : "sampled-additions");
  return os.str();
}

GnnModel random_model(Rng& rng, Aggregation aggr, int layers, std::size_t in_dim, int max_dim) {
  std::vector<std::size_t> dims{in_dim};
  for (int k = 1; k < layers; ++k) dims.push_back(static_cast<std::size_t>(uniform_int(rng, 1, max_dim)));
  dims.push_back(static_cast<std::size_t>(uniform_int(rng, 2, std::max(2, max_dim))));
  std::vector<GnnLayer> ls;
  for (int k = 1; k <= layers; ++k) {
    GnnLayer l;
    l.self_weight = Matrix(dims[k], dims[k - 1]);
    l.neighbor_weight = Matrix(dims[k], dims[k - 1]);
    for (std::size_t i = 0; i < dims[k]; ++i)
      for (std::size_t j = 0; j < dims[k - 1]; ++j) {
        l.self_weight(i, j) = uniform(rng, -1, 1);
        l.neighbor_weight(i, j) = uniform(rng, -1, 1);
      }
    if (uniform(rng, 0, 1) < 0.5) {
      l.bias.resize(dims[k]);
      for (double& b : l.bias) b = uniform(rng, -0.5, 0.5);
    }
    ls.push_back(std::move(l));
  }
  return GnnModel(aggr, dims, std::move(ls));
}

Instance random_instance(Rng& rng, Aggregation aggr, Regime regime, const InstanceShape& shape) {
  for (;;) {
    const int n = uniform_int(rng, shape.min_nodes, shape.max_nodes);
    const std::size_t d0 = static_cast<std::size_t>(uniform_int(rng, 1, shape.max_dim));
    Matrix attrs(static_cast<std::size_t>(n), d0);
    for (int v = 0; v < n; ++v)
      for (std::size_t i = 0; i < d0; ++i) attrs(static_cast<std::size_t>(v), i) = uniform(rng, -1, 1);
    std::vector<Arc> arcs;
    for (int u = 0; u < n; ++u)
      for (int v = 0; v < n; ++v) {
        if (u == v || (shape.undirected && u > v)) continue;
        if (uniform(rng, 0, 1) < shape.edge_prob) arcs.push_back({NodeId(u), NodeId(v)});
      }
    AttributedGraph g(static_cast<std::size_t>(n), arcs, attrs, !shape.undirected);

    std::vector<NodeId> fed;
    for (NodeId v = 0; v < g.num_nodes(); ++v)
      if (!g.in_neighbors(v).empty()) fed.push_back(v);
    const NodeId t = fed.empty() ? NodeId(uniform_int(rng, 0, n - 1))
                                 : fed[static_cast<std::size_t>(uniform_int(rng, 0, int(fed.size()) - 1))];
    const int K = uniform_int(rng, 1, shape.max_layers);

    PerturbationSpec spec;
    spec.fragile = g.arcs();
    if (regime == Regime::SampledAdditions) {
      const auto heads = relevant_nodes(g, t, K - 1);
      std::vector<Arc> candidates;
      for (NodeId v : heads)
        for (NodeId u = 0; u < g.num_nodes(); ++u)
          if (u != v && !g.has_arc(u, v)) candidates.push_back({u, v});
      std::shuffle(candidates.begin(), candidates.end(), rng);
      const int extra = std::min<int>(uniform_int(rng, 1, 3), static_cast<int>(candidates.size()));
      spec.fragile.insert(spec.fragile.end(), candidates.begin(), candidates.begin() + extra);
    }
    spec.global_budget = uniform_int(rng, 0, shape.max_budget);
    if (uniform(rng, 0, 1) < 0.3) spec.local_default = 1;
    spec.eps_default = shape.eps;
    spec.normalize_for(g);
    if (fragile_units(g, spec).size() > 25) continue;

    Instance inst;
    inst.model = random_model(rng, aggr, K, d0, shape.max_dim);
    inst.graph = std::move(g);
    inst.spec = std::move(spec);
    inst.target = t;
    inst.regime = regime;
    return inst;
  }
}

std::vector<double> reference_logits(const GnnModel& model, const AttributedGraph& g, NodeId t) {
  const std::size_t n = g.num_nodes();
  std::vector<std::vector<double>> h(n);
  for (NodeId v = 0; v < n; ++v) h[v].assign(g.attr(v).begin(), g.attr(v).end());
  for (int k = 1; k <= model.num_layers(); ++k) {
    const GnnLayer& layer = model.layer(k);
    const std::size_t din = model.dim(k - 1), dout = model.dim(k);
    std::vector<std::vector<double>> next(n, std::vector<double>(dout, 0.0));
    for (NodeId v = 0; v < n; ++v) {
      std::vector<double> msg(din, 0.0);
      std::size_t deg = 0;
      for (const Arc& a : g.arcs()) {
        if (a.to != v) continue;
        for (std::size_t i = 0; i < din; ++i) {
          const double x = h[a.from][i];
          if (model.aggregation() == Aggregation::Max) msg[i] = deg == 0 ? x : std::max(msg[i], x);
          else msg[i] += x;
        }
        ++deg;
      }
      if (model.aggregation() == Aggregation::Mean && deg > 0)
        for (double& m : msg) m /= static_cast<double>(deg);
      for (std::size_t j = 0; j < dout; ++j) {
        double y = layer.bias.empty() ? 0.0 : layer.bias[j];
        for (std::size_t i = 0; i < din; ++i)
          y += layer.self_weight(j, i) * h[v][i] + layer.neighbor_weight(j, i) * msg[i];
        next[v][j] = k < model.num_layers() ? std::max(0.0, y) : y;
      }
    }
    h = std::move(next);
  }
  return h[t];
}

namespace {

std::size_t argmax_lowest(const std::vector<double>& xs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (xs[i] > xs[best]) best = i;
  return best;
}

double margin(const std::vector<double>& logits, std::size_t pred) {
  double rival = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < logits.size(); ++c)
    if (c != pred) rival = std::max(rival, logits[c]);
  return logits[pred] - rival;
}

}  // namespace

double min_structural_margin(const Instance& inst) {
  const AttributedGraph& g = inst.graph;
  const std::size_t pred = argmax_lowest(reference_logits(inst.model, g, inst.target));
  // Fragile decisions: undirected pairs toggle both orientations.
  std::vector<std::vector<Arc>> units;
  std::set<std::pair<NodeId, NodeId>> seen;
  for (const Arc& a : inst.spec.fragile) {
    if (!g.directed()) {
      const auto key = std::minmax(a.from, a.to);
      if (!seen.insert(key).second) continue;
      units.push_back({{key.first, key.second}, {key.second, key.first}});
    } else {
      units.push_back({a});
    }
  }
  std::set<Arc> base(g.arcs().begin(), g.arcs().end());
  std::map<NodeId, int> used;
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, int, std::set<Arc>&)> rec = [&](std::size_t from, int edits,
                                                                  std::set<Arc>& arcs) {
    AttributedGraph pg(g.num_nodes(), std::vector<Arc>(arcs.begin(), arcs.end()), g.attrs(), true);
    best = std::min(best, margin(reference_logits(inst.model, pg, inst.target), pred));
    if (edits == inst.spec.global_budget) return;
    for (std::size_t u = from; u < units.size(); ++u) {
      bool ok = true;
      for (const Arc& a : units[u]) ok = ok && used[a.to] + 1 <= inst.spec.local_budget(a.to);
      if (!ok) continue;
      for (const Arc& a : units[u]) {
        ++used[a.to];
        if (!arcs.erase(a)) arcs.insert(a);
      }
      rec(u + 1, edits + 1, arcs);
      for (const Arc& a : units[u]) {
        --used[a.to];
        if (!arcs.erase(a)) arcs.insert(a);
      }
    }
  };
  rec(0, 0, base);
  return best;
}

AggregationBoundProblem random_aggregation_problem(Rng& rng, int max_members, int max_budget) {
  AggregationBoundProblem p;
  const int total = uniform_int(rng, 0, max_members);
  auto iv = [&] {
    const double lo = uniform(rng, -5, 5);
    const double w = uniform(rng, 0, 1) < 0.15 ? 0.0 : uniform(rng, 0, 3);
    return Interval{lo, lo + w};
  };
  for (int i = 0; i < total; ++i) {
    switch (uniform_int(rng, 0, 2)) {
      case 0: p.fixed.push_back(iv()); break;
      case 1: p.deletable.push_back(iv()); break;
      default: p.insertable.push_back(iv()); break;
    }
  }
  p.budget = uniform_int(rng, 0, max_budget);
  return p;
}

Interval enumerate_aggregation(Aggregation aggr, const AggregationBoundProblem& p) {
  const std::size_t n2 = p.deletable.size(), n3 = p.insertable.size();
  Interval out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  auto combine = [&](const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double acc = aggr == Aggregation::Max ? xs.front() : 0.0;
    for (double x : xs) acc = aggr == Aggregation::Max ? std::max(acc, x) : acc + x;
    return aggr == Aggregation::Mean ? acc / static_cast<double>(xs.size()) : acc;
  };
  for (std::size_t keep = 0; keep < (std::size_t{1} << n2); ++keep) {
    for (std::size_t add = 0; add < (std::size_t{1} << n3); ++add) {
      const int edits = static_cast<int>(n2) - std::popcount(keep) + std::popcount(add);
      if (edits > p.budget) continue;
      std::vector<double> los, his;
      for (const Interval& x : p.fixed) {
        los.push_back(x.lo);
        his.push_back(x.hi);
      }
      for (std::size_t i = 0; i < n2; ++i)
        if (keep >> i & 1U) {
          los.push_back(p.deletable[i].lo);
          his.push_back(p.deletable[i].hi);
        }
      for (std::size_t i = 0; i < n3; ++i)
        if (add >> i & 1U) {
          los.push_back(p.insertable[i].lo);
          his.push_back(p.insertable[i].hi);
        }
      out.lo = std::min(out.lo, combine(los));
      out.hi = std::max(out.hi, combine(his));
    }
  }
  return out;
}

SampledPerturbation sample_perturbation(Rng& rng, const AttributedGraph& g, const PerturbationSpec& spec) {
  SampledPerturbation s;
  std::vector<FragileUnit> units = fragile_units(g, spec);
  std::shuffle(units.begin(), units.end(), rng);
  const int want = uniform_int(rng, 0, std::min<int>(spec.global_budget, static_cast<int>(units.size())));
  std::map<NodeId, int> used;
  int taken = 0;
  for (const FragileUnit& u : units) {
    if (taken == want) break;
    bool ok = true;
    for (const Arc& a : u.arcs) ok = ok && used[a.to] + 1 <= spec.local_budget(a.to);
    if (!ok) continue;
    for (const Arc& a : u.arcs) ++used[a.to];
    auto& dst = u.present ? s.edits.deletions : s.edits.insertions;
    dst.insert(dst.end(), u.arcs.begin(), u.arcs.end());
    ++taken;
  }
  std::sort(s.edits.deletions.begin(), s.edits.deletions.end());
  std::sort(s.edits.insertions.begin(), s.edits.insertions.end());
  s.attrs = g.attrs();
  for (NodeId v = 0; v < g.num_nodes(); ++v)
    for (std::size_t i = 0; i < g.attr_dim(); ++i) {
      const double e = spec.epsilon(v, i);
      if (e == 0.0) continue;
      const double r = uniform(rng, 0, 1);
      s.attrs(v, i) += r < 0.3 ? (uniform(rng, 0, 1) < 0.5 ? -e : e) : uniform(rng, -e, e);
    }
  return s;
}

}  // namespace testsupport
