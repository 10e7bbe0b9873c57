#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gnnverify/bounds.hpp"
#include "gnnverify/graph.hpp"
#include "gnnverify/milp.hpp"
#include "gnnverify/model.hpp"

namespace gnnverify {

enum class ObjectiveMode {
  Full,          // some rival class reaches the predicted logit
  PairwiseNext,  // only class (predicted + 1) mod m
};

std::string_view to_string(ObjectiveMode mode);
ObjectiveMode parse_objective_mode(std::string_view name);

/// Assigns one VarId per named quantity of a task. Re-requesting a key must
/// use the identical VarInfo.
class VarRegistry {
 public:
  VarId declare(const std::string& key, const VarInfo& info);
  std::optional<VarId> find(const std::string& key) const;
  const VarInfo& info(VarId v) const { return infos_.at(v.value); }
  std::size_t size() const { return infos_.size(); }

 private:
  std::map<std::string, VarId> ids_;
  std::vector<VarInfo> infos_;
};

// Registry keys of the task quantities.
std::string attr_key(NodeId v, std::size_t i);
std::string pe_key(const AttributedGraph& g, Arc arc);
std::string contribution_key(int k, NodeId v, std::size_t i, NodeId u);
std::string msg_key(int k, NodeId v, std::size_t i);
std::string pre_key(int k, NodeId v, std::size_t i);
/// h^(k)_{v,i}; for k = 0 this is the attribute variable, for k = K the
/// pre-activation (the last layer has no ReLU).
std::string emb_key(int k, int num_layers, NodeId v, std::size_t i);
std::string degree_key(NodeId v);
std::string degree_ind_key(NodeId v, int d);
std::string obj_ind_key(std::size_t c);

/// Attribute boxes of N_K(t), perturbation flags for the fragile pairs
/// feeding N_{K-1}(t), and the global/local budget rows.
MilpFragment encode_input(const AttributedGraph& g, const PerturbationSpec& spec, NodeId t,
                          int num_layers, const BoundsTable& bounds, VarRegistry& reg);

/// Constraints of layer k for every node whose layer-k embedding reaches t.
/// Layer k-1 embeddings are declared with their boxes and otherwise free.
MilpFragment encode_layer(const GnnModel& model, const AttributedGraph& g,
                          const PerturbationSpec& spec, NodeId t, int k,
                          const BoundsTable& bounds, VarRegistry& reg);

/// Some rival logit of t is at least the logit of `predicted`.
MilpFragment encode_objective(const GnnModel& model, NodeId t, std::size_t predicted,
                              ObjectiveMode mode, const BoundsTable& bounds, VarRegistry& reg);

struct EncodingStats {
  std::size_t num_real = 0;
  std::size_t num_binary = 0;      // perturbation flags
  std::size_t num_aux_binary = 0;  // degree and objective selectors
  std::size_t num_constraints = 0;  // per (equation, node, coordinate)
  std::size_t num_raw_constraints = 0;
  std::size_t num_aux_constraints = 0;
  std::size_t nodes = 0;           // N = |N_K(t)|
  std::size_t dim_sum = 0;         // D = d_0 + ... + d_K

  bool within_ceilings() const;
};

EncodingStats encoding_stats(const std::vector<MilpFragment>& fragments, std::size_t nodes,
                             std::size_t dim_sum);

/// All fragments of one task in Algorithm-1 order: input, objective, then
/// layers K down to 1.
struct TaskEncoding {
  VarRegistry registry;
  MilpFragment input;
  MilpFragment objective;
  std::vector<MilpFragment> layers;  // index k-1 holds layer k

  std::vector<MilpFragment> all() const;
  EncodingStats stats(const GnnModel& model, const AttributedGraph& g,
                      const PerturbationSpec& spec, NodeId t) const;
};

TaskEncoding encode_task(const GnnModel& model, const AttributedGraph& g,
                         const PerturbationSpec& spec, NodeId t, std::size_t predicted,
                         ObjectiveMode mode, const BoundsTable& bounds);

}  // namespace gnnverify
