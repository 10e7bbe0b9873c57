#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "gnnverify/bounds.hpp"
#include "gnnverify/encoder.hpp"
#include "gnnverify/io.hpp"
#include "gnnverify/oracle.hpp"
#include "gnnverify/solver.hpp"
#include "gnnverify/verifier.hpp"

namespace py = pybind11;
namespace gv = gnnverify;

namespace {

struct Task {
  gv::GnnModel model;
  gv::GraphFile graph;
  gv::PerturbationSpec spec;
};

gv::Json parse(const std::string& text) {
  try {
    return gv::Json::parse(text);
  } catch (const gv::Json::exception& e) {
    throw gv::InputError(std::string("malformed JSON: ") + e.what());
  }
}

Task load(const std::string& model, const std::string& graph, const std::string& spec) {
  Task t{gv::model_from_json(parse(model)), gv::graph_from_json(parse(graph)), {}};
  const gv::AttributedGraph& g = t.graph.graph;
  if (g.attr_dim() != t.model.dim(0))
    throw gv::InputError("graph attribute width does not match model input dimension");
  if (spec.empty()) {
    t.spec.fragile = g.arcs();
    t.spec.normalize_for(g);
  } else {
    t.spec = gv::spec_from_json(parse(spec), g);
  }
  return t;
}

gv::AggregationBoundProblem problem(const std::vector<std::pair<double, double>>& fixed,
                                    const std::vector<std::pair<double, double>>& deletable,
                                    const std::vector<std::pair<double, double>>& insertable, int budget) {
  auto cvt = [](const std::vector<std::pair<double, double>>& xs) {
    std::vector<gv::Interval> out;
    for (const auto& [lo, hi] : xs) {
      if (lo > hi) throw gv::InputError("interval with lo > hi");
      out.push_back({lo, hi});
    }
    return out;
  };
  if (budget < 0) throw gv::InputError("budget must be non-negative");
  return {cvt(fixed), cvt(deletable), cvt(insertable), budget};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Exact robustness verification for message-passing graph neural networks";
  py::register_exception<gv::InputError>(m, "InputError", PyExc_ValueError);

  m.def(
      "aggregation_bounds",
      [](const std::string& aggr, const std::vector<std::pair<double, double>>& fixed,
         const std::vector<std::pair<double, double>>& deletable,
         const std::vector<std::pair<double, double>>& insertable, int budget, const std::string& method) {
        const auto p = problem(fixed, deletable, insertable, budget);
        const gv::Aggregation a = gv::parse_aggregation(aggr);
        gv::Interval iv;
        if (method == "tightened") iv = gv::tightened_bounds(a, p);
        else if (method == "plain") iv = gv::plain_bounds(a, p);
        else throw gv::InputError("method must be tightened or plain");
        return std::make_pair(iv.lo, iv.hi);
      },
      py::arg("aggr"), py::arg("fixed"), py::arg("deletable"), py::arg("insertable"), py::arg("budget"),
      py::arg("method") = "tightened");

  m.def(
      "predict",
      [](const std::string& model, const std::string& graph, const std::vector<gv::NodeId>& targets) {
        const Task t = load(model, graph, "");
        gv::Json out = gv::Json::array();
        for (gv::NodeId v : targets) {
          t.graph.graph.check_node(v);
          const gv::Logits l = gv::forward(t.model, t.graph.graph, v);
          out.push_back({{"node", v}, {"class", l.predicted}, {"logits", l.values}});
        }
        return out.dump();
      },
      py::arg("model"), py::arg("graph"), py::arg("targets"));

  m.def(
      "verify",
      [](const std::string& model, const std::string& graph, const std::string& spec,
         const std::vector<gv::NodeId>& targets, const std::string& mode, const std::string& objective,
         double time_limit, int workers, bool force) {
        const Task t = load(model, graph, spec);
        gv::VerifyConfig cfg;
        cfg.mode = gv::parse_verify_mode(mode);
        cfg.objective = gv::parse_objective_mode(objective);
        cfg.time_limit = time_limit;
        if (workers < 1) throw gv::InputError("workers must be >= 1");
        gv::BatchReport report;
        {
          py::gil_scoped_release release;
          report = gv::verify_batch(t.model, t.graph.graph, t.spec, targets, cfg, workers, t.graph.labels, force);
        }
        return gv::batch_to_json(report, t.graph.graph).dump();
      },
      py::arg("model"), py::arg("graph"), py::arg("spec"), py::arg("targets"), py::arg("mode") = "incremental",
      py::arg("objective") = "full", py::arg("time_limit") = 300.0, py::arg("workers") = 1,
      py::arg("force") = false);

  m.def(
      "oracle",
      [](const std::string& model, const std::string& graph, const std::string& spec, gv::NodeId target) {
        const Task t = load(model, graph, spec);
        return gv::oracle_to_json(target, gv::brute_force_verify(t.model, t.graph.graph, t.spec, target),
                                  t.graph.graph)
            .dump();
      },
      py::arg("model"), py::arg("graph"), py::arg("spec"), py::arg("target"));

  m.def(
      "export_lp",
      [](const std::string& model, const std::string& graph, const std::string& spec, gv::NodeId target,
         const std::string& objective) {
        const Task t = load(model, graph, spec);
        t.graph.graph.check_node(target);
        const std::size_t pred = gv::predict(t.model, t.graph.graph, target);
        const gv::BoundsTable table = gv::propagate(t.model, t.graph.graph, t.spec, target);
        return gv::export_lp(gv::encode_task(t.model, t.graph.graph, t.spec, target, pred,
                                             gv::parse_objective_mode(objective), table)
                                 .all());
      },
      py::arg("model"), py::arg("graph"), py::arg("spec"), py::arg("target"), py::arg("objective") = "full");
}
