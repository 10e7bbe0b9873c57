#include "gnnverify/oracle.hpp"

#include <algorithm>
#include <map>
#include <random>

namespace gnnverify {

namespace {

bool has_attribute_freedom(const PerturbationSpec& spec) {
  if (spec.eps_default != 0.0) return true;
  return std::any_of(spec.eps.begin(), spec.eps.end(), [](const auto& e) { return e.second != 0.0; });
}

EdgeEditSet edits_of(const std::vector<FragileUnit>& units, const std::vector<std::size_t>& chosen) {
  EdgeEditSet edits;
  for (std::size_t u : chosen) {
    auto& target = units[u].present ? edits.deletions : edits.insertions;
    target.insert(target.end(), units[u].arcs.begin(), units[u].arcs.end());
  }
  std::sort(edits.deletions.begin(), edits.deletions.end());
  std::sort(edits.insertions.begin(), edits.insertions.end());
  return edits;
}

}  // namespace

std::size_t enumerate_structural(const AttributedGraph& g, const PerturbationSpec& spec,
                                 const std::function<void(const EdgeEditSet&)>& visit,
                                 const OracleLimits& limits) {
  const std::vector<FragileUnit> units = fragile_units(g, spec);
  const int budget = std::min<int>(spec.global_budget, static_cast<int>(units.size()));
  if (units.size() > limits.max_fragile)
    throw InputError("oracle: " + std::to_string(units.size()) + " fragile pairs exceed the limit of " +
                     std::to_string(limits.max_fragile));
  if (budget > limits.max_budget)
    throw InputError("oracle: global budget " + std::to_string(budget) + " exceeds the limit of " +
                     std::to_string(limits.max_budget));

  std::map<NodeId, int> used;
  std::vector<std::size_t> chosen;
  std::size_t count = 0;
  auto fits = [&](const FragileUnit& unit) {
    for (const Arc& a : unit.arcs)
      if (used[a.to] + 1 > spec.local_budget(a.to)) return false;
    return true;
  };
  std::function<void(std::size_t)> rec = [&](std::size_t from) {
    visit(edits_of(units, chosen));
    ++count;
    if (static_cast<int>(chosen.size()) == budget) return;
    for (std::size_t u = from; u < units.size(); ++u) {
      if (!fits(units[u])) continue;
      for (const Arc& a : units[u].arcs) ++used[a.to];
      chosen.push_back(u);
      rec(u + 1);
      chosen.pop_back();
      for (const Arc& a : units[u].arcs) --used[a.to];
    }
  };
  rec(0);
  return count;
}

OracleVerdict brute_force_verify(const GnnModel& model, const AttributedGraph& g,
                                 const PerturbationSpec& spec, NodeId t,
                                 const OracleLimits& limits) {
  if (has_attribute_freedom(spec))
    throw InputError("oracle: attribute radii must be zero for exhaustive search");
  g.check_node(t);
  OracleVerdict out;
  out.predicted = predict(model, g, t);
  out.perturbations = enumerate_structural(
      g, spec,
      [&](const EdgeEditSet& edits) {
        if (!out.robust) return;
        const AttributedGraph pg = apply_perturbation(g, edits, g.attrs());
        Logits logits = forward(model, pg, t);
        if (flips_or_ties(logits.values, out.predicted, 0.0)) {
          out.robust = false;
          out.witness = Witness{edits, g.attrs(), std::move(logits.values)};
        }
      },
      limits);
  return out;
}

std::optional<Witness> attack_sample(const GnnModel& model, const AttributedGraph& g,
                                     const PerturbationSpec& spec, NodeId t, int trials,
                                     std::uint64_t seed) {
  if (trials < 1) throw InputError("attack: trials must be >= 1");
  g.check_node(t);
  const std::size_t predicted = predict(model, g, t);
  const int K = model.num_layers();
  const auto nodes = relevant_nodes(g, spec, t, K);
  const auto heads = relevant_nodes(g, spec, t, K - 1);
  std::vector<FragileUnit> units;
  for (FragileUnit& u : fragile_units(g, spec))
    if (std::any_of(u.arcs.begin(), u.arcs.end(),
                    [&](const Arc& a) { return std::binary_search(heads.begin(), heads.end(), a.to); }))
      units.push_back(std::move(u));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit_real(0.0, 1.0);
  const int max_edits = std::min<int>(spec.global_budget, static_cast<int>(units.size()));
  std::vector<std::size_t> order(units.size());

  for (int trial = 0; trial < trials; ++trial) {
    std::vector<std::size_t> chosen;
    if (max_edits > 0) {
      const int want = std::uniform_int_distribution<int>(0, max_edits)(rng);
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::shuffle(order.begin(), order.end(), rng);
      std::map<NodeId, int> used;
      for (std::size_t u : order) {
        if (static_cast<int>(chosen.size()) == want) break;
        bool ok = true;
        for (const Arc& a : units[u].arcs) ok = ok && used[a.to] + 1 <= spec.local_budget(a.to);
        if (!ok) continue;
        for (const Arc& a : units[u].arcs) ++used[a.to];
        chosen.push_back(u);
      }
      std::sort(chosen.begin(), chosen.end());
    }
    Matrix attrs = g.attrs();
    for (NodeId v : nodes) {
      for (std::size_t i = 0; i < g.attr_dim(); ++i) {
        const double e = spec.epsilon(v, i);
        if (e == 0.0) continue;
        const double r = unit_real(rng);
        double offset;
        if (r < 0.5) offset = unit_real(rng) < 0.5 ? -e : e;
        else offset = (2.0 * unit_real(rng) - 1.0) * e;
        attrs(v, i) += offset;
      }
    }
    EdgeEditSet edits = edits_of(units, chosen);
    if (!validate_perturbation(g, spec, edits, attrs).ok) continue;
    Logits logits = forward(model, apply_perturbation(g, edits, attrs), t);
    if (flips_or_ties(logits.values, predicted, 0.0))
      return Witness{std::move(edits), std::move(attrs), std::move(logits.values)};
  }
  return std::nullopt;
}

}  // namespace gnnverify
