#include "gnnverify/model.hpp"

#include <algorithm>
#include <cmath>

namespace gnnverify {

namespace {

void check_finite(const Matrix& m, const char* what) {
  for (double x : m.data())
    if (!std::isfinite(x)) throw InputError(std::string("model: non-finite entry in ") + what);
}

// One layer update for a single node.
NodeActivations apply_layer(const GnnModel& model, int k, std::span<const double> self,
                            std::span<const std::span<const double>> neighbors) {
  const GnnLayer& layer = model.layer(k);
  const std::size_t in_dim = model.dim(k - 1);
  const std::size_t out_dim = model.dim(k);
  NodeActivations act;
  act.msg = aggregate(model.aggregation(), neighbors, in_dim);
  act.y.assign(out_dim, 0.0);
  for (std::size_t i = 0; i < out_dim; ++i) {
    double acc = layer.bias.empty() ? 0.0 : layer.bias[i];
    for (std::size_t j = 0; j < in_dim; ++j)
      acc += layer.self_weight(i, j) * self[j] + layer.neighbor_weight(i, j) * act.msg[j];
    act.y[i] = acc;
  }
  act.h = act.y;
  if (k < model.num_layers())
    for (double& x : act.h) x = std::max(x, 0.0);
  return act;
}

}  // namespace

std::string_view to_string(Aggregation aggr) {
  switch (aggr) {
    case Aggregation::Sum: return "sum";
    case Aggregation::Max: return "max";
    case Aggregation::Mean: return "mean";
  }
  return "?";
}

Aggregation parse_aggregation(std::string_view name) {
  if (name == "sum" || name == "add") return Aggregation::Sum;
  if (name == "max") return Aggregation::Max;
  if (name == "mean") return Aggregation::Mean;
  throw InputError("unsupported aggregation '" + std::string(name) + "'");
}

GnnModel::GnnModel(Aggregation aggr, std::vector<std::size_t> dims, std::vector<GnnLayer> layers)
    : aggr_(aggr), dims_(std::move(dims)), layers_(std::move(layers)) {
  if (layers_.empty()) throw InputError("model: at least one layer required");
  if (dims_.size() != layers_.size() + 1)
    throw InputError("model: dims must list d_0..d_K (" + std::to_string(layers_.size() + 1) +
                     " entries)");
  if (dims_.back() < 2) throw InputError("model: at least two output classes required");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const GnnLayer& l = layers_[k];
    const std::size_t rows = dims_[k + 1], cols = dims_[k];
    if (l.self_weight.rows() != rows || l.self_weight.cols() != cols ||
        l.neighbor_weight.rows() != rows || l.neighbor_weight.cols() != cols)
      throw InputError("model: layer " + std::to_string(k + 1) + " weights must be " +
                       std::to_string(rows) + "x" + std::to_string(cols));
    if (!l.bias.empty() && l.bias.size() != rows)
      throw InputError("model: layer " + std::to_string(k + 1) + " bias length mismatch");
    check_finite(l.self_weight, "W1");
    check_finite(l.neighbor_weight, "W2");
    for (double b : l.bias)
      if (!std::isfinite(b)) throw InputError("model: non-finite bias");
  }
}

std::vector<double> aggregate(Aggregation aggr, std::span<const std::span<const double>> vectors,
                              std::size_t dim) {
  std::vector<double> out(dim, 0.0);
  if (vectors.empty()) return out;
  for (const auto& v : vectors)
    if (v.size() != dim) throw InputError("aggregate: dimension mismatch");
  switch (aggr) {
    case Aggregation::Sum:
    case Aggregation::Mean:
      for (const auto& v : vectors)
        for (std::size_t i = 0; i < dim; ++i) out[i] += v[i];
      if (aggr == Aggregation::Mean)
        for (double& x : out) x /= static_cast<double>(vectors.size());
      break;
    case Aggregation::Max:
      std::copy(vectors.front().begin(), vectors.front().end(), out.begin());
      for (const auto& v : vectors.subspan(1))
        for (std::size_t i = 0; i < dim; ++i) out[i] = std::max(out[i], v[i]);
      break;
  }
  return out;
}

std::size_t predict_class(std::span<const double> logits) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < logits.size(); ++c)
    if (logits[c] > logits[best]) best = c;
  return best;
}

ForwardTrace forward_trace(const GnnModel& model, const AttributedGraph& g, NodeId t) {
  g.check_node(t);
  if (g.attr_dim() != model.dim(0))
    throw InputError("forward: graph attributes have width " + std::to_string(g.attr_dim()) +
                     ", model expects " + std::to_string(model.dim(0)));
  const int K = model.num_layers();
  ForwardTrace trace;
  trace.layers.resize(static_cast<std::size_t>(K) + 1);

  auto embedding = [&](int k, NodeId u) -> std::span<const double> {
    if (k == 0) return g.attr(u);
    return trace.layers[static_cast<std::size_t>(k)].at(u).h;
  };

  for (int k = 1; k <= K; ++k) {
    auto& level = trace.layers[static_cast<std::size_t>(k)];
    for (NodeId v : relevant_nodes(g, t, K - k)) {
      std::vector<std::span<const double>> neighbors;
      for (NodeId u : g.in_neighbors(v)) neighbors.push_back(embedding(k - 1, u));
      level.emplace(v, apply_layer(model, k, embedding(k - 1, v), neighbors));
    }
  }
  trace.logits.values = trace.layers[static_cast<std::size_t>(K)].at(t).h;
  trace.logits.predicted = predict_class(trace.logits.values);
  return trace;
}

Logits forward(const GnnModel& model, const AttributedGraph& g, NodeId t) {
  return forward_trace(model, g, t).logits;
}

std::size_t predict(const GnnModel& model, const AttributedGraph& g, NodeId t) {
  return forward(model, g, t).predicted;
}

std::vector<std::vector<double>> forward_all(const GnnModel& model, const AttributedGraph& g) {
  if (g.attr_dim() != model.dim(0)) throw InputError("forward: attribute width mismatch");
  std::vector<std::vector<double>> h(g.num_nodes());
  for (NodeId v = 0; v < g.num_nodes(); ++v) h[v].assign(g.attr(v).begin(), g.attr(v).end());
  for (int k = 1; k <= model.num_layers(); ++k) {
    std::vector<std::vector<double>> next(g.num_nodes());
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
      std::vector<std::span<const double>> neighbors;
      for (NodeId u : g.in_neighbors(v)) neighbors.emplace_back(h[u]);
      next[v] = apply_layer(model, k, h[v], neighbors).h;
    }
    h = std::move(next);
  }
  return h;
}

}  // namespace gnnverify
