#include "gnnverify/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_set>

namespace gnnverify {

std::string_view to_string(ObjectiveMode mode) {
  return mode == ObjectiveMode::Full ? "full" : "pairwise-next";
}

ObjectiveMode parse_objective_mode(std::string_view name) {
  if (name == "full") return ObjectiveMode::Full;
  if (name == "pairwise-next" || name == "pairwise") return ObjectiveMode::PairwiseNext;
  throw InputError("unknown objective mode '" + std::string(name) + "'");
}

VarId VarRegistry::declare(const std::string& key, const VarInfo& info) {
  if (auto it = ids_.find(key); it != ids_.end()) {
    if (!(infos_[it->second.value] == info))
      throw std::logic_error("variable '" + key + "' redeclared with a different box");
    return it->second;
  }
  const VarId id{static_cast<std::uint32_t>(infos_.size())};
  ids_.emplace(key, id);
  infos_.push_back(info);
  return id;
}

std::optional<VarId> VarRegistry::find(const std::string& key) const {
  auto it = ids_.find(key);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

namespace {

std::string join(std::initializer_list<std::size_t> parts, const char* stem) {
  std::string s = stem;
  for (std::size_t p : parts) s += "_" + std::to_string(p);
  return s;
}

std::size_t uk(int k) { return static_cast<std::size_t>(k); }

void require_finite(const Interval& iv, const std::string& what) {
  if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi)
    throw InputError("encoder: no finite box for " + what);
}

/// Collects the variables one fragment references.
class FragmentBuilder {
 public:
  FragmentBuilder(std::string label, VarRegistry& reg) : reg_(reg) { frag_.label = std::move(label); }

  VarId var(const std::string& key, Interval box, VarKind kind, bool binary = false) {
    require_finite(box, key);
    const VarId id = reg_.declare(key, VarInfo{key, box.lo, box.hi, binary, kind});
    if (seen_.insert(id.value).second) frag_.variables.emplace_back(id, reg_.info(id));
    return id;
  }
  VarId binary(const std::string& key, VarKind kind) { return var(key, {0.0, 1.0}, kind, true); }

  void add(Constraint c) { frag_.constraints.push_back(std::move(c)); }
  void aux(Constraint c) {
    frag_.constraints.push_back(std::move(c));
    ++frag_.aux_constraints;
  }
  void group() { ++frag_.core_groups; }

  MilpFragment take() { return std::move(frag_); }

 private:
  VarRegistry& reg_;
  MilpFragment frag_;
  std::unordered_set<std::uint32_t> seen_;
};

LinearConstraint linear(std::vector<Term> terms, Sense sense, double rhs) {
  std::erase_if(terms, [](const Term& t) { return t.coef == 0.0; });
  return {std::move(terms), sense, rhs};
}

}  // namespace

std::string attr_key(NodeId v, std::size_t i) { return join({v, i}, "attr"); }

std::string pe_key(const AttributedGraph& g, Arc arc) {
  if (!g.directed() && arc.from > arc.to) std::swap(arc.from, arc.to);
  return join({arc.from, arc.to}, "pe");
}

std::string contribution_key(int k, NodeId v, std::size_t i, NodeId u) {
  return join({uk(k), v, i, u}, "a");
}
std::string msg_key(int k, NodeId v, std::size_t i) { return join({uk(k), v, i}, "msg"); }
std::string pre_key(int k, NodeId v, std::size_t i) { return join({uk(k), v, i}, "y"); }

std::string emb_key(int k, int num_layers, NodeId v, std::size_t i) {
  if (k == 0) return attr_key(v, i);
  if (k == num_layers) return pre_key(k, v, i);
  return join({uk(k), v, i}, "h");
}

std::string degree_key(NodeId v) { return join({v}, "deg"); }
std::string degree_ind_key(NodeId v, int d) {
  return join({v, static_cast<std::size_t>(d)}, "degind");
}
std::string obj_ind_key(std::size_t c) { return join({c}, "objind"); }

MilpFragment encode_input(const AttributedGraph& g, const PerturbationSpec& spec, NodeId t,
                          int num_layers, const BoundsTable& bounds, VarRegistry& reg) {
  FragmentBuilder fb("input", reg);
  for (NodeId v : relevant_nodes(g, spec, t, num_layers)) {
    auto it = bounds.attrs.find(v);
    if (it == bounds.attrs.end()) throw InputError("encoder: missing attribute bounds");
    for (std::size_t i = 0; i < it->second.size(); ++i) {
      fb.var(attr_key(v, i), it->second[i], VarKind::Attr);
      fb.group();
    }
  }

  const auto heads = relevant_nodes(g, spec, t, num_layers - 1);
  const std::set<NodeId> head_set(heads.begin(), heads.end());
  std::vector<VarId> all_flags;
  std::map<NodeId, std::vector<VarId>> flags_into;
  for (const FragileUnit& unit : fragile_units(g, spec)) {
    const bool relevant = std::any_of(unit.arcs.begin(), unit.arcs.end(),
                                      [&](const Arc& a) { return head_set.contains(a.to); });
    if (!relevant) continue;
    const VarId pe = fb.binary(pe_key(g, unit.arcs.front()), VarKind::Pe);
    all_flags.push_back(pe);
    for (const Arc& a : unit.arcs)
      if (head_set.contains(a.to)) flags_into[a.to].push_back(pe);
  }
  auto budget_row = [&](const std::vector<VarId>& flags, int budget) {
    if (flags.size() <= static_cast<std::size_t>(budget)) return;
    std::vector<Term> terms;
    for (VarId f : flags) terms.push_back({f, 1.0});
    fb.add(linear(std::move(terms), Sense::LessEqual, budget));
    fb.group();
  };
  budget_row(all_flags, spec.global_budget);
  for (const auto& [v, flags] : flags_into) budget_row(flags, spec.local_budget(v));
  return fb.take();
}

MilpFragment encode_layer(const GnnModel& model, const AttributedGraph& g,
                          const PerturbationSpec& spec, NodeId t, int k,
                          const BoundsTable& bounds, VarRegistry& reg) {
  const int K = model.num_layers();
  if (k < 1 || k > K) throw InputError("encoder: layer index out of range");
  FragmentBuilder fb("layer " + std::to_string(k), reg);
  const std::size_t in_dim = model.dim(k - 1), out_dim = model.dim(k);
  const GnnLayer& layer = model.layer(k);
  const Aggregation aggr = model.aggregation();

  auto prev = [&](NodeId u, std::size_t i) {
    if (!bounds.has_node(k - 1, u)) throw InputError("encoder: missing frontier bounds");
    return fb.var(emb_key(k - 1, K, u, i), bounds.embedding(k - 1, u)[i],
                  k - 1 == 0 ? VarKind::Attr : VarKind::Emb);
  };
  auto flag = [&](NodeId u, NodeId v) { return fb.binary(pe_key(g, {u, v}), VarKind::Pe); };

  for (NodeId v : relevant_nodes(g, spec, t, K - k)) {
    const auto level_it = bounds.layers.at(uk(k)).find(v);
    if (level_it == bounds.layers.at(uk(k)).end()) throw InputError("encoder: missing layer bounds");
    const LayerBounds& lb = level_it->second;
    const NeighborPartition part = partition_incoming(g, spec, v);
    const bool has_fragile = !part.fragile_in.empty() || !part.fragile_absent.empty();

    // Degree selectors for mean aggregation; emitted once per node.
    std::vector<std::pair<int, VarId>> degree_choices;
    int fixed_degree = -1;
    if (aggr == Aggregation::Mean) {
      if (!has_fragile) {
        fixed_degree = static_cast<int>(part.fixed_in.size());
      } else {
        const Interval deg_box = bounds.degree.at(v);
        const bool first = !reg.find(degree_key(v));
        const VarId deg = fb.var(degree_key(v), deg_box, VarKind::Degree);
        const int dlo = static_cast<int>(std::lround(deg_box.lo));
        const int dhi = static_cast<int>(std::lround(deg_box.hi));
        if (first) {
          std::vector<Term> terms{{deg, 1.0}};
          for (NodeId u : part.fragile_in) terms.push_back({flag(u, v), 1.0});
          for (NodeId u : part.fragile_absent) terms.push_back({flag(u, v), -1.0});
          fb.add(linear(std::move(terms), Sense::Equal,
                        static_cast<double>(part.fixed_in.size() + part.fragile_in.size())));
          fb.group();
        }
        if (dlo == dhi) {
          fixed_degree = dlo;
        } else {
          std::vector<Term> one_hot, link{{deg, 1.0}};
          for (int d = dlo; d <= dhi; ++d) {
            const VarId ind = fb.binary(degree_ind_key(v, d), VarKind::DegreeInd);
            degree_choices.emplace_back(d, ind);
            one_hot.push_back({ind, 1.0});
            link.push_back({ind, -static_cast<double>(d)});
          }
          if (first) {
            fb.aux(linear(std::move(one_hot), Sense::Equal, 1.0));
            fb.aux(linear(std::move(link), Sense::Equal, 0.0));
          }
        }
      }
    }

    std::vector<VarId> msg(in_dim);
    for (std::size_t i = 0; i < in_dim; ++i) {
      msg[i] = fb.var(msg_key(k, v, i), lb.msg[i], VarKind::Msg);

      if (aggr == Aggregation::Max) {
        if (part.total() == 0) {
          fb.add(linear({{msg[i], 1.0}}, Sense::Equal, 0.0));
        } else {
          MaxConstraint mc{msg[i], {}, std::nullopt};
          for (NodeId u : part.fixed_in) mc.candidates.push_back({prev(u, i), 0.0, std::nullopt});
          for (NodeId u : part.fragile_in)
            mc.candidates.push_back({prev(u, i), 0.0, Literal{flag(u, v), false}});
          for (NodeId u : part.fragile_absent)
            mc.candidates.push_back({prev(u, i), 0.0, Literal{flag(u, v), true}});
          if (part.fixed_in.empty()) mc.empty_value = 0.0;
          fb.add(std::move(mc));
        }
        fb.group();
        continue;
      }

      // Contributions of the editable neighbours; fixed ones enter directly.
      std::vector<Term> total;
      for (NodeId u : part.fixed_in) total.push_back({prev(u, i), 1.0});
      auto contribution = [&](NodeId u, bool present) {
        const VarId h = prev(u, i);
        const Interval hb = bounds.embedding(k - 1, u)[i];
        const VarId a = fb.var(contribution_key(k, v, i, u),
                               {std::min(0.0, hb.lo), std::max(0.0, hb.hi)}, VarKind::Contribution);
        const VarId pe = flag(u, v);
        // pe toggles the arc: an existing arc contributes while pe = 0.
        fb.add(IndicatorConstraint{{pe, present}, linear({{a, 1.0}}, Sense::Equal, 0.0)});
        fb.add(IndicatorConstraint{{pe, !present}, linear({{a, 1.0}, {h, -1.0}}, Sense::Equal, 0.0)});
        total.push_back({a, 1.0});
      };
      for (NodeId u : part.fragile_in) contribution(u, true);
      for (NodeId u : part.fragile_absent) contribution(u, false);
      if (!part.fragile_in.empty()) fb.group();
      if (!part.fragile_absent.empty()) fb.group();

      auto scaled = [&](double d) {
        std::vector<Term> terms{{msg[i], d}};
        for (const Term& term : total) terms.push_back({term.var, -term.coef});
        return linear(std::move(terms), Sense::Equal, 0.0);
      };
      if (aggr == Aggregation::Sum) {
        fb.add(scaled(1.0));
      } else if (fixed_degree >= 0) {
        fb.add(fixed_degree == 0 ? linear({{msg[i], 1.0}}, Sense::Equal, 0.0)
                                 : scaled(static_cast<double>(fixed_degree)));
      } else {
        for (const auto& [d, ind] : degree_choices) {
          fb.add(IndicatorConstraint{{ind, true}, d == 0 ? linear({{msg[i], 1.0}}, Sense::Equal, 0.0)
                                                         : scaled(static_cast<double>(d))});
        }
      }
      fb.group();
    }

    for (std::size_t j = 0; j < out_dim; ++j) {
      const VarId y = fb.var(pre_key(k, v, j), lb.y[j], VarKind::Pre);
      std::vector<Term> terms{{y, 1.0}};
      for (std::size_t i = 0; i < in_dim; ++i) {
        if (layer.self_weight(j, i) != 0.0) terms.push_back({prev(v, i), -layer.self_weight(j, i)});
        if (layer.neighbor_weight(j, i) != 0.0) terms.push_back({msg[i], -layer.neighbor_weight(j, i)});
      }
      const double b = layer.bias.empty() ? 0.0 : layer.bias[j];
      fb.add(linear(std::move(terms), Sense::Equal, b));
      fb.group();
      if (k == K) continue;

      const VarId h = fb.var(emb_key(k, K, v, j), lb.h[j], VarKind::Emb);
      if (lb.y[j].lo >= 0.0) {
        fb.add(linear({{h, 1.0}, {y, -1.0}}, Sense::Equal, 0.0));
      } else if (lb.y[j].hi <= 0.0) {
        fb.add(linear({{h, 1.0}}, Sense::Equal, 0.0));
      } else {
        fb.add(MaxConstraint{h, {{y, 0.0, std::nullopt}, {std::nullopt, 0.0, std::nullopt}}, std::nullopt});
      }
      fb.group();
    }
  }
  return fb.take();
}

MilpFragment encode_objective(const GnnModel& model, NodeId t, std::size_t predicted,
                              ObjectiveMode mode, const BoundsTable& bounds, VarRegistry& reg) {
  const std::size_t m = model.num_classes();
  if (m < 2) throw InputError("encoder: objective needs at least two classes");
  if (predicted >= m) throw InputError("encoder: predicted class out of range");
  const int K = model.num_layers();
  FragmentBuilder fb("objective", reg);
  const LayerBounds& lb = bounds.layers.at(uk(K)).at(t);
  auto logit = [&](std::size_t c) { return fb.var(pre_key(K, t, c), lb.y[c], VarKind::Pre); };
  const VarId own = logit(predicted);

  std::vector<std::size_t> rivals;
  if (mode == ObjectiveMode::PairwiseNext || m == 2) {
    rivals.push_back((predicted + 1) % m);
  } else {
    for (std::size_t c = 0; c < m; ++c)
      if (c != predicted) rivals.push_back(c);
  }
  if (rivals.size() == 1) {
    fb.add(linear({{logit(rivals.front()), 1.0}, {own, -1.0}}, Sense::GreaterEqual, 0.0));
  } else {
    std::vector<Term> one_hot;
    for (std::size_t c : rivals) {
      const VarId ind = fb.binary(obj_ind_key(c), VarKind::ObjInd);
      one_hot.push_back({ind, 1.0});
      fb.add(IndicatorConstraint{{ind, true}, linear({{logit(c), 1.0}, {own, -1.0}}, Sense::GreaterEqual, 0.0)});
    }
    fb.aux(linear(std::move(one_hot), Sense::Equal, 1.0));
  }
  fb.group();
  return fb.take();
}

bool EncodingStats::within_ceilings() const {
  const std::size_t n = nodes, d = dim_sum;
  return num_real <= 5 * n * n * d && num_binary <= n * n && num_constraints <= 8 * n * d + 2;
}

EncodingStats encoding_stats(const std::vector<MilpFragment>& fragments, std::size_t nodes,
                             std::size_t dim_sum) {
  EncodingStats s;
  s.nodes = nodes;
  s.dim_sum = dim_sum;
  std::unordered_set<std::uint32_t> seen;
  for (const MilpFragment& f : fragments) {
    for (const auto& [id, info] : f.variables) {
      if (!seen.insert(id.value).second) continue;
      switch (info.kind) {
        case VarKind::Pe: ++s.num_binary; break;
        case VarKind::DegreeInd:
        case VarKind::ObjInd:
        case VarKind::Aux: ++s.num_aux_binary; break;
        default: ++s.num_real; break;
      }
    }
    s.num_constraints += f.core_groups;
    s.num_raw_constraints += f.constraints.size();
    s.num_aux_constraints += f.aux_constraints;
  }
  return s;
}

std::vector<MilpFragment> TaskEncoding::all() const {
  std::vector<MilpFragment> out{input, objective};
  out.insert(out.end(), layers.rbegin(), layers.rend());
  return out;
}

EncodingStats TaskEncoding::stats(const GnnModel& model, const AttributedGraph& g,
                                  const PerturbationSpec& spec, NodeId t) const {
  std::size_t dim_sum = 0;
  for (int k = 0; k <= model.num_layers(); ++k) dim_sum += model.dim(k);
  return encoding_stats(all(), relevant_nodes(g, spec, t, model.num_layers()).size(), dim_sum);
}

TaskEncoding encode_task(const GnnModel& model, const AttributedGraph& g,
                         const PerturbationSpec& spec, NodeId t, std::size_t predicted,
                         ObjectiveMode mode, const BoundsTable& bounds) {
  TaskEncoding enc;
  const int K = model.num_layers();
  enc.input = encode_input(g, spec, t, K, bounds, enc.registry);
  enc.objective = encode_objective(model, t, predicted, mode, bounds, enc.registry);
  enc.layers.resize(static_cast<std::size_t>(K));
  for (int k = K; k >= 1; --k)
    enc.layers[uk(k - 1)] = encode_layer(model, g, spec, t, k, bounds, enc.registry);
  return enc;
}

}  // namespace gnnverify
