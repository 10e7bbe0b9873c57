#include "gnnverify/verifier.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

namespace gnnverify {

std::string_view to_string(VerifyMode mode) {
  return mode == VerifyMode::Incremental ? "incremental" : "monolithic";
}

std::string_view to_string(VerdictStatus status) {
  switch (status) {
    case VerdictStatus::Robust: return "robust";
    case VerdictStatus::NonRobust: return "nonrobust";
    case VerdictStatus::Unknown: return "unknown";
  }
  return "?";
}

VerifyMode parse_verify_mode(std::string_view name) {
  if (name == "incremental") return VerifyMode::Incremental;
  if (name == "monolithic") return VerifyMode::Monolithic;
  throw InputError("unknown verification mode '" + std::string(name) + "'");
}

bool flips_or_ties(std::span<const double> logits, std::size_t predicted, double tol) {
  for (std::size_t c = 0; c < logits.size(); ++c)
    if (c != predicted && logits[c] >= logits[predicted] - tol) return true;
  return false;
}

std::pair<EdgeEditSet, Matrix> extract_witness(std::span<const double> assignment,
                                               const VarRegistry& reg, const AttributedGraph& g,
                                               const PerturbationSpec& spec) {
  EdgeEditSet edits;
  for (const FragileUnit& unit : fragile_units(g, spec)) {
    const auto pe = reg.find(pe_key(g, unit.arcs.front()));
    if (!pe || assignment[pe->value] <= 0.5) continue;
    auto& target = unit.present ? edits.deletions : edits.insertions;
    target.insert(target.end(), unit.arcs.begin(), unit.arcs.end());
  }
  std::sort(edits.deletions.begin(), edits.deletions.end());
  std::sort(edits.insertions.begin(), edits.insertions.end());

  Matrix attrs = g.attrs();
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    for (std::size_t i = 0; i < g.attr_dim(); ++i) {
      const auto var = reg.find(attr_key(v, i));
      if (!var) continue;
      const double x = g.attrs()(v, i), e = spec.epsilon(v, i);
      attrs(v, i) = std::clamp(assignment[var->value], x - e, x + e);
    }
  }
  return {std::move(edits), std::move(attrs)};
}

Verdict verify_node(const GnnModel& model, const AttributedGraph& g, const PerturbationSpec& spec,
                    NodeId t, const VerifyConfig& config) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  Verdict vd;
  const Logits base = forward(model, g, t);
  vd.predicted = base.predicted;
  vd.logits = base.values;

  const BoundsTable bounds = propagate(model, g, spec, t, config.bounds);
  const TaskEncoding enc = encode_task(model, g, spec, t, vd.predicted, config.objective, bounds);
  vd.encoding = enc.stats(model, g, spec, t);

  SolverInstance solver(config.solver);
  const int K = model.num_layers();
  auto run = [&](int layer) {
    solver.set_time_limit(std::max(0.0, std::min(config.time_limit, config.solver.time_limit) - elapsed()));
    SolveOutcome out = solver.solve();
    vd.iterations.push_back({layer, out.status, out.stats});
    return out;
  };
  auto finish = [&]() -> Verdict {
    vd.time_s = elapsed();
    return std::move(vd);
  };

  SolveOutcome last;
  solver.add_fragment(enc.input);
  solver.add_fragment(enc.objective);
  if (config.mode == VerifyMode::Incremental) {
    for (int k = K; k >= 1; --k) {
      solver.add_fragment(enc.layers[static_cast<std::size_t>(k - 1)]);
      last = run(k);
      if (last.status == SolveStatus::Unsat) {
        vd.status = VerdictStatus::Robust;
        vd.proven_at = k;
        return finish();
      }
      if (last.status == SolveStatus::Unknown) {
        vd.reason = last.reason;
        vd.last_completed = k == K ? 0 : k + 1;
        return finish();
      }
    }
  } else {
    for (int k = K; k >= 1; --k) solver.add_fragment(enc.layers[static_cast<std::size_t>(k - 1)]);
    last = run(1);
    if (last.status == SolveStatus::Unsat) {
      vd.status = VerdictStatus::Robust;
      vd.proven_at = 1;
      return finish();
    }
    if (last.status == SolveStatus::Unknown) {
      vd.reason = last.reason;
      return finish();
    }
  }

  auto [edits, attrs] = extract_witness(last.assignment, enc.registry, g, spec);
  const ValidationReport report = validate_perturbation(g, spec, edits, attrs);
  if (!report.ok) {
    vd.reason = UnknownReason::Numeric;
    vd.note = "witness rejected: " + report.violations.front();
    return finish();
  }
  const AttributedGraph perturbed = apply_perturbation(g, edits, attrs);
  Logits logits = forward(model, perturbed, t);
  if (!flips_or_ties(logits.values, vd.predicted, config.witness_tol)) {
    vd.reason = UnknownReason::Numeric;
    vd.note = "witness does not change the prediction under forward evaluation";
    return finish();
  }
  vd.status = VerdictStatus::NonRobust;
  vd.witness = Witness{std::move(edits), std::move(attrs), std::move(logits.values)};
  return finish();
}

namespace {

void tally(BatchReport& report) {
  report.counts = {};
  for (const TaskResult& r : report.tasks) {
    if (r.skipped) ++report.counts.skipped;
    else if (!r.error.empty()) ++report.counts.failed;
    else if (r.verdict.status == VerdictStatus::Robust) ++report.counts.robust;
    else if (r.verdict.status == VerdictStatus::NonRobust) ++report.counts.nonrobust;
    else ++report.counts.unknown;
  }
}

}  // namespace

BatchReport verify_batch(const GnnModel& model, const AttributedGraph& g,
                         const PerturbationSpec& spec, const std::vector<NodeId>& targets,
                         const VerifyConfig& config, int workers,
                         const std::optional<std::vector<int>>& labels, bool force) {
  BatchReport report;
  report.tasks.resize(targets.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t idx = next++; idx < targets.size(); idx = next++) {
      TaskResult& r = report.tasks[idx];
      r.node = targets[idx];
      try {
        g.check_node(r.node);
        if (labels && !force) {
          const std::size_t pred = predict(model, g, r.node);
          const int label = r.node < labels->size() ? (*labels)[r.node] : -1;
          if (label >= 0 && static_cast<std::size_t>(label) != pred) {
            r.skipped = true;
            r.verdict.predicted = pred;
            r.verdict.note = "misclassified (label " + std::to_string(label) + ")";
            continue;
          }
        }
        r.verdict = verify_node(model, g, spec, r.node, config);
      } catch (const std::exception& e) {
        r.error = e.what();
      }
    }
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(targets.size())));
  std::vector<std::jthread> pool;
  for (int w = 1; w < n; ++w) pool.emplace_back(work);
  work();
  pool.clear();
  tally(report);
  return report;
}

std::vector<SweepPoint> budget_sweep(const GnnModel& model, const AttributedGraph& g,
                                     const PerturbationSpec& spec,
                                     const std::vector<NodeId>& targets,
                                     const std::vector<int>& budgets, const VerifyConfig& config,
                                     int workers, const std::optional<std::vector<int>>& labels,
                                     bool force) {
  std::vector<SweepPoint> out;
  for (int b : budgets) {
    if (b < 0) throw InputError("budget sweep: negative budget");
    PerturbationSpec s = spec;
    s.global_budget = b;
    out.push_back({b, verify_batch(model, g, s, targets, config, workers, labels, force).counts});
  }
  return out;
}

}  // namespace gnnverify
