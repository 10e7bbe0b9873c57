#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>

#include "gnnverify/graph.hpp"
#include "gnnverify/model.hpp"
#include "gnnverify/verifier.hpp"

namespace gnnverify {

struct OracleLimits {
  std::size_t max_fragile = 25;  // fragile decisions (arc pairs count once when undirected)
  int max_budget = 6;
};

/// Visits every structural edit set admissible under F, the global budget and
/// the local budgets, in lexicographic order of the chosen fragile units.
/// Returns the number visited. Throws InputError when the limits are exceeded.
std::size_t enumerate_structural(const AttributedGraph& g, const PerturbationSpec& spec,
                                 const std::function<void(const EdgeEditSet&)>& visit,
                                 const OracleLimits& limits = {});

struct OracleVerdict {
  bool robust = true;
  std::size_t predicted = 0;
  std::optional<Witness> witness;
  std::size_t perturbations = 0;
};

/// Exhaustive structural check. Requires every attribute radius to be zero.
OracleVerdict brute_force_verify(const GnnModel& model, const AttributedGraph& g,
                                 const PerturbationSpec& spec, NodeId t,
                                 const OracleLimits& limits = {});

/// Random falsification: samples admissible edits and attributes at box
/// corners or interior points; returns the first sample that flips or ties
/// the prediction.
std::optional<Witness> attack_sample(const GnnModel& model, const AttributedGraph& g,
                                     const PerturbationSpec& spec, NodeId t, int trials,
                                     std::uint64_t seed = 0);

}  // namespace gnnverify
