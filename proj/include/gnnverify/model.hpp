#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gnnverify/graph.hpp"
#include "gnnverify/matrix.hpp"

namespace gnnverify {

enum class Aggregation { Sum, Max, Mean };

std::string_view to_string(Aggregation aggr);
Aggregation parse_aggregation(std::string_view name);

/// One message-passing layer: y = W_self h_v + W_neigh aggr(h_u) + b.
/// Weight W[i][j] maps input coordinate j to output coordinate i.
struct GnnLayer {
  Matrix self_weight;
  Matrix neighbor_weight;
  std::vector<double> bias;  // empty when the layer has no bias
};

class GnnModel {
 public:
  GnnModel() = default;
  /// dims = d_0..d_K; throws InputError on inconsistent shapes or non-finite weights.
  GnnModel(Aggregation aggr, std::vector<std::size_t> dims, std::vector<GnnLayer> layers);

  Aggregation aggregation() const { return aggr_; }
  int num_layers() const { return static_cast<int>(layers_.size()); }
  std::size_t dim(int k) const { return dims_[static_cast<std::size_t>(k)]; }
  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t num_classes() const { return dims_.back(); }
  /// Layers are numbered 1..K.
  const GnnLayer& layer(int k) const { return layers_[static_cast<std::size_t>(k - 1)]; }

 private:
  Aggregation aggr_ = Aggregation::Sum;
  std::vector<std::size_t> dims_;
  std::vector<GnnLayer> layers_;
};

struct Logits {
  std::vector<double> values;
  std::size_t predicted = 0;
};

/// Elementwise aggregation; the empty multiset yields the zero vector.
std::vector<double> aggregate(Aggregation aggr, std::span<const std::span<const double>> vectors,
                              std::size_t dim);

/// argmax with ties broken towards the lowest class index.
std::size_t predict_class(std::span<const double> logits);

struct NodeActivations {
  std::vector<double> msg;
  std::vector<double> y;
  std::vector<double> h;
};

/// Intermediate values of every node that influences t. layers[k] holds the
/// nodes evaluated at layer k (1-based; layers[0] is unused).
struct ForwardTrace {
  std::vector<std::map<NodeId, NodeActivations>> layers;
  Logits logits;
};

/// Evaluates only the nodes within K - k hops of t at layer k.
ForwardTrace forward_trace(const GnnModel& model, const AttributedGraph& g, NodeId t);

Logits forward(const GnnModel& model, const AttributedGraph& g, NodeId t);

std::size_t predict(const GnnModel& model, const AttributedGraph& g, NodeId t);

/// Logits of every node, computed over the whole graph without locality.
std::vector<std::vector<double>> forward_all(const GnnModel& model, const AttributedGraph& g);

}  // namespace gnnverify
