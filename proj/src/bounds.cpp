#include "gnnverify/bounds.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <queue>

namespace gnnverify {

namespace {

// The k most extreme values under `before` (largest for std::greater), most
// extreme first. Bounded heap, O(n log k).
template <class Before>
std::vector<double> top_k(std::span<const double> values, std::size_t k, Before before) {
  if (k == 0) return {};
  // Heap top is the least extreme of the retained values.
  std::priority_queue<double, std::vector<double>, Before> heap(before);
  for (double x : values) {
    if (heap.size() < k) {
      heap.push(x);
    } else if (before(x, heap.top())) {
      heap.pop();
      heap.push(x);
    }
  }
  std::vector<double> out(heap.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = heap.top();
    heap.pop();
  }
  return out;
}

std::vector<double> uppers(std::span<const Interval> xs) {
  std::vector<double> v(xs.size());
  std::transform(xs.begin(), xs.end(), v.begin(), [](const Interval& i) { return i.hi; });
  return v;
}

std::vector<double> lowers(std::span<const Interval> xs) {
  std::vector<double> v(xs.size());
  std::transform(xs.begin(), xs.end(), v.begin(), [](const Interval& i) { return i.lo; });
  return v;
}

std::vector<double> largest(std::span<const double> v, std::size_t k) {
  return top_k(v, std::min(k, v.size()), std::greater<double>());
}

std::vector<double> smallest(std::span<const double> v, std::size_t k) {
  return top_k(v, std::min(k, v.size()), std::less<double>());
}

double sum_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

std::size_t clamp_budget(int budget) { return budget < 0 ? 0 : static_cast<std::size_t>(budget); }

}  // namespace

std::vector<double> kth_largest_upper(std::span<const Interval> xs, std::span<const int> ranks) {
  int kmax = 0;
  for (int k : ranks) kmax = std::max(kmax, k);
  const auto top = largest(uppers(xs), static_cast<std::size_t>(kmax));
  std::vector<double> out;
  out.reserve(ranks.size());
  for (int k : ranks)
    out.push_back(k >= 1 && static_cast<std::size_t>(k) <= top.size() ? top[k - 1] : -kInfinity);
  return out;
}

std::vector<double> kth_smallest_lower(std::span<const Interval> xs, std::span<const int> ranks) {
  int kmax = 0;
  for (int k : ranks) kmax = std::max(kmax, k);
  const auto bottom = smallest(lowers(xs), static_cast<std::size_t>(kmax));
  std::vector<double> out;
  out.reserve(ranks.size());
  for (int k : ranks)
    out.push_back(k >= 1 && static_cast<std::size_t>(k) <= bottom.size() ? bottom[k - 1]
                                                                          : kInfinity);
  return out;
}

Interval sum_bounds(const AggregationBoundProblem& p) {
  const std::size_t s = clamp_budget(p.budget);
  Interval z{0.0, 0.0};
  for (const auto* set : {&p.fixed, &p.deletable}) {
    for (const Interval& x : *set) {
      z.lo += x.lo;
      z.hi += x.hi;
    }
  }
  // Y = {-x : x in X2} ∪ X3: deleting x changes the sum by -x.
  std::vector<Interval> y;
  y.reserve(p.deletable.size() + p.insertable.size());
  for (const Interval& x : p.deletable) y.push_back({-x.hi, -x.lo});
  y.insert(y.end(), p.insertable.begin(), p.insertable.end());
  for (double v : largest(uppers(y), s)) z.hi += std::max(v, 0.0);
  for (double v : smallest(lowers(y), s)) z.lo += std::min(v, 0.0);
  return z;
}

Interval max_bounds(const AggregationBoundProblem& p) {
  const std::size_t s = clamp_budget(p.budget);
  const std::size_t n1 = p.fixed.size(), n2 = p.deletable.size(), n3 = p.insertable.size();

  double fixed_hi = -kInfinity, fixed_lo = -kInfinity;  // max over X1 of hi / lo
  for (const Interval& x : p.fixed) {
    fixed_hi = std::max(fixed_hi, x.hi);
    fixed_lo = std::max(fixed_lo, x.lo);
  }
  double del_hi = -kInfinity;
  for (const Interval& x : p.deletable) del_hi = std::max(del_hi, x.hi);

  const bool can_empty = n1 == 0 && s >= n2;

  // Upper bound: keep everything and, budget permitting, insert the best
  // candidate; an empty neighbourhood contributes 0.
  double hi = -kInfinity;
  if (n1 + n2 > 0) hi = std::max(fixed_hi, del_hi);
  if (s > 0 && n3 > 0) hi = std::max(hi, largest(uppers(p.insertable), 1).front());
  if (can_empty) hi = std::max(hi, 0.0);

  // Lower bound: delete the deletable members with the largest lower bounds.
  // Insertions only raise a non-empty max, so they help only when X1 is empty
  // and every deletable member is gone.
  const auto low2 = smallest(lowers(p.deletable), n2);  // ascending
  auto kept_max_lo = [&](std::size_t kept) {
    double v = fixed_lo;
    if (kept > 0) v = std::max(v, low2[kept - 1]);
    return v;
  };
  const std::size_t deleted = std::min(s, n2);
  double lo;
  if (n1 + n2 - deleted == 0) {
    lo = 0.0;
  } else {
    lo = kept_max_lo(n2 - deleted);
  }
  if (n1 == 0) {
    if (n2 >= 1 && n2 - 1 <= s) lo = std::min(lo, low2.front());
    if (n3 > 0 && n2 + 1 <= s) lo = std::min(lo, smallest(lowers(p.insertable), 1).front());
  }
  return {lo, hi};
}

Interval mean_bounds(const AggregationBoundProblem& p) {
  const std::size_t s = clamp_budget(p.budget);
  const std::size_t n1 = p.fixed.size(), n2 = p.deletable.size(), n3 = p.insertable.size();
  const std::size_t max_del = std::min(s, n2), max_ins = std::min(s, n3);

  double fixed_hi = 0.0, fixed_lo = 0.0;
  for (const Interval& x : p.fixed) {
    fixed_hi += x.hi;
    fixed_lo += x.lo;
  }
  const auto up2 = uppers(p.deletable);
  const auto lo2 = lowers(p.deletable);
  const double total_hi2 = sum_of(up2), total_lo2 = sum_of(lo2);

  // Prefix sums over the few extreme members each subproblem touches.
  auto prefix = [](const std::vector<double>& sorted) {
    std::vector<double> ps(sorted.size() + 1, 0.0);
    for (std::size_t i = 0; i < sorted.size(); ++i) ps[i + 1] = ps[i] + sorted[i];
    return ps;
  };
  const auto drop_hi = prefix(smallest(up2, max_del));                 // deleting the smallest uppers
  const auto drop_lo = prefix(largest(lo2, max_del));                  // deleting the largest lowers
  const auto add_hi = prefix(largest(uppers(p.insertable), max_ins));  // inserting the largest uppers
  const auto add_lo = prefix(smallest(lowers(p.insertable), max_ins));

  Interval z{kInfinity, -kInfinity};
  for (std::size_t s2 = 0; s2 <= max_del; ++s2) {
    for (std::size_t s3 = 0; s3 <= max_ins && s2 + s3 <= s; ++s3) {
      const std::size_t n = n1 + n2 - s2 + s3;
      if (n == 0) {
        z.lo = std::min(z.lo, 0.0);
        z.hi = std::max(z.hi, 0.0);
        continue;
      }
      const double w_hi = fixed_hi + (total_hi2 - drop_hi[s2]) + add_hi[s3];
      const double w_lo = fixed_lo + (total_lo2 - drop_lo[s2]) + add_lo[s3];
      z.hi = std::max(z.hi, w_hi / static_cast<double>(n));
      z.lo = std::min(z.lo, w_lo / static_cast<double>(n));
    }
  }
  return z;
}

Interval tightened_bounds(Aggregation aggr, const AggregationBoundProblem& p) {
  switch (aggr) {
    case Aggregation::Sum: return sum_bounds(p);
    case Aggregation::Max: return max_bounds(p);
    case Aggregation::Mean: return mean_bounds(p);
  }
  return {};
}

Interval plain_bounds(Aggregation aggr, const AggregationBoundProblem& p) {
  const bool editable = p.budget > 0 && (!p.deletable.empty() || !p.insertable.empty());
  if (!editable) {
    AggregationBoundProblem fixed_only;
    fixed_only.fixed = p.fixed;
    fixed_only.fixed.insert(fixed_only.fixed.end(), p.deletable.begin(), p.deletable.end());
    return tightened_bounds(aggr, fixed_only);
  }
  const bool can_empty = p.fixed.empty();
  if (aggr == Aggregation::Sum) {
    Interval z{0.0, 0.0};
    for (const Interval& x : p.fixed) {
      z.lo += x.lo;
      z.hi += x.hi;
    }
    for (const auto* set : {&p.deletable, &p.insertable}) {
      for (const Interval& x : *set) {
        z.lo += std::min(x.lo, 0.0);
        z.hi += std::max(x.hi, 0.0);
      }
    }
    return z;
  }
  if (aggr == Aggregation::Max) {
    if (p.size() == 0) return {0.0, 0.0};
    Interval z{kInfinity, -kInfinity};
    for (const auto* set : {&p.fixed, &p.deletable, &p.insertable}) {
      for (const Interval& x : *set) {
        z.lo = std::min(z.lo, x.lo);
        z.hi = std::max(z.hi, x.hi);
      }
    }
    if (can_empty) {
      z.lo = std::min(z.lo, 0.0);
      z.hi = std::max(z.hi, 0.0);
    }
    return z;
  }
  // Mean: X1 plus the j most favourable editable bounds, for every j.
  std::vector<double> up, lo;
  for (const auto* set : {&p.deletable, &p.insertable}) {
    for (const Interval& x : *set) {
      up.push_back(x.hi);
      lo.push_back(x.lo);
    }
  }
  std::sort(up.begin(), up.end(), std::greater<double>());
  std::sort(lo.begin(), lo.end());
  double sum_hi = 0.0, sum_lo = 0.0;
  for (const Interval& x : p.fixed) {
    sum_hi += x.hi;
    sum_lo += x.lo;
  }
  Interval z{kInfinity, -kInfinity};
  const std::size_t n1 = p.fixed.size();
  if (n1 == 0) z = {0.0, 0.0};
  else z = {sum_lo / static_cast<double>(n1), sum_hi / static_cast<double>(n1)};
  for (std::size_t j = 1; j <= up.size(); ++j) {
    sum_hi += up[j - 1];
    sum_lo += lo[j - 1];
    const double n = static_cast<double>(n1 + j);
    z.hi = std::max(z.hi, sum_hi / n);
    z.lo = std::min(z.lo, sum_lo / n);
  }
  return z;
}

std::vector<Interval> linear_bounds(const GnnLayer& layer, std::span<const Interval> self,
                                    std::span<const Interval> msg) {
  const std::size_t out_dim = layer.self_weight.rows();
  const std::size_t in_dim = layer.self_weight.cols();
  if (self.size() != in_dim || msg.size() != in_dim || layer.neighbor_weight.cols() != in_dim ||
      layer.neighbor_weight.rows() != out_dim)
    throw InputError("linear_bounds: shape mismatch");
  std::vector<Interval> out(out_dim);
  auto accumulate = [](Interval& acc, double w, const Interval& x) {
    if (w >= 0) {
      acc.lo += w * x.lo;
      acc.hi += w * x.hi;
    } else {
      acc.lo += w * x.hi;
      acc.hi += w * x.lo;
    }
  };
  for (std::size_t i = 0; i < out_dim; ++i) {
    const double b = layer.bias.empty() ? 0.0 : layer.bias[i];
    Interval acc{b, b};
    for (std::size_t j = 0; j < in_dim; ++j) {
      accumulate(acc, layer.self_weight(i, j), self[j]);
      accumulate(acc, layer.neighbor_weight(i, j), msg[j]);
    }
    out[i] = acc;
  }
  return out;
}

Interval relu_bounds(Interval iv) { return {std::max(iv.lo, 0.0), std::max(iv.hi, 0.0)}; }

const std::vector<Interval>& BoundsTable::embedding(int k, NodeId v) const {
  if (k == 0) return attrs.at(v);
  return layers.at(static_cast<std::size_t>(k)).at(v).h;
}

bool BoundsTable::has_node(int k, NodeId v) const {
  if (k == 0) return attrs.contains(v);
  return layers.at(static_cast<std::size_t>(k)).contains(v);
}

int aggregation_budget(const PerturbationSpec& spec, NodeId v, const NeighborPartition& part) {
  const std::size_t incident = part.fragile_in.size() + part.fragile_absent.size();
  const int cap = static_cast<int>(std::min<std::size_t>(incident, kUnlimitedBudget));
  return std::min({spec.global_budget, spec.local_budget(v), cap});
}

Interval degree_bounds(const NeighborPartition& part, int budget) {
  const std::size_t s = clamp_budget(budget);
  const double base = static_cast<double>(part.fixed_in.size() + part.fragile_in.size());
  return {base - static_cast<double>(std::min(s, part.fragile_in.size())),
          base + static_cast<double>(std::min(s, part.fragile_absent.size()))};
}

BoundsTable propagate(const GnnModel& model, const AttributedGraph& g,
                      const PerturbationSpec& spec, NodeId t, const BoundOptions& options) {
  g.check_node(t);
  if (g.attr_dim() != model.dim(0)) throw InputError("propagate: attribute width mismatch");
  const int K = model.num_layers();
  BoundsTable table;
  table.num_layers = K;
  table.layers.resize(static_cast<std::size_t>(K) + 1);

  for (NodeId v : relevant_nodes(g, spec, t, K)) {
    std::vector<Interval> box(g.attr_dim());
    for (std::size_t i = 0; i < g.attr_dim(); ++i) {
      const double x = g.attrs()(v, i), e = spec.epsilon(v, i);
      box[i] = {x - e, x + e};
    }
    table.attrs.emplace(v, std::move(box));
  }

  std::map<NodeId, NeighborPartition> partitions;
  for (NodeId v : relevant_nodes(g, spec, t, K - 1)) {
    auto part = partition_incoming(g, spec, v);
    const int s = aggregation_budget(spec, v, part);
    table.budget[v] = s;
    table.degree[v] = degree_bounds(part, s);
    partitions.emplace(v, std::move(part));
  }

  auto widen = [&](std::vector<Interval>& ivs) {
    if (options.slack <= 0) return;
    for (Interval& iv : ivs) {
      iv.lo -= options.slack;
      iv.hi += options.slack;
    }
  };

  for (int k = 1; k <= K; ++k) {
    const std::size_t in_dim = model.dim(k - 1);
    auto& level = table.layers[static_cast<std::size_t>(k)];
    for (NodeId v : relevant_nodes(g, spec, t, K - k)) {
      const NeighborPartition& part = partitions.at(v);
      LayerBounds lb;
      lb.msg.resize(in_dim);
      for (std::size_t i = 0; i < in_dim; ++i) {
        AggregationBoundProblem p;
        p.budget = table.budget.at(v);
        for (NodeId u : part.fixed_in) p.fixed.push_back(table.embedding(k - 1, u)[i]);
        for (NodeId u : part.fragile_in) p.deletable.push_back(table.embedding(k - 1, u)[i]);
        for (NodeId u : part.fragile_absent) p.insertable.push_back(table.embedding(k - 1, u)[i]);
        lb.msg[i] = options.method == BoundMethod::Tightened
                        ? tightened_bounds(model.aggregation(), p)
                        : plain_bounds(model.aggregation(), p);
      }
      widen(lb.msg);
      lb.y = linear_bounds(model.layer(k), table.embedding(k - 1, v), lb.msg);
      widen(lb.y);
      lb.h = lb.y;
      if (k < K)
        for (Interval& iv : lb.h) iv = relu_bounds(iv);
      level.emplace(v, std::move(lb));
    }
  }
  return table;
}

}  // namespace gnnverify
