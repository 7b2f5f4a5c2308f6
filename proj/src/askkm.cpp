#include "mssl/askkm.hpp"

#include <limits>

namespace mssl {

std::string to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::growth_capped: return "growth_capped";
    case Termination::no_improvement: return "no_improvement";
  }
  return "unknown";
}

Termination termination_from_string(const std::string& name) {
  if (name == "converged") return Termination::converged;
  if (name == "growth_capped") return Termination::growth_capped;
  if (name == "no_improvement") return Termination::no_improvement;
  throw InputError("unknown termination '" + name + "'");
}

AskkmModel fit_askkm(const KernelMatrix& km, const Dataset& d, const AskkmOptions& opts) {
  require_valid(d);
  check_options(opts.solver);
  const int C = d.n_classes;
  const int k_max = opts.k_max.value_or(10 * C);
  if (k_max < C) throw InputError("K_max must be >= the class count");
  if (opts.stall_rounds < 1) throw InputError("stall_rounds must be >= 1");
  const int threshold = opts.threshold.value_or(default_threshold(d.n_labeled()));

  SolverOptions original = opts.solver;
  original.weight = UnlabeledWeight::original();
  SolverOptions unbiased = opts.solver;
  unbiased.weight = UnlabeledWeight::unbiased();

  AskkmModel out;
  LabelMap lm = LabelMap::identity(d);
  int previous = std::numeric_limits<int>::max();
  int stalled = 0;

  for (;;) {
    ClusterModel fit_o = fit_sskkm(km, d, lm, original);
    const ClusterModel fit_u = fit_sskkm(km, d, lm, unbiased);
    const auto preds_o = predict_labeled(fit_o, km, d);
    const auto preds_u = predict_labeled(fit_u, km, d);

    AskkmRound round;
    round.K = lm.n_fine();
    round.criterion = disagreement_criterion(preds_o, preds_u, threshold, d.labeled_idx);
    round.objective_original = fit_o.objective;
    round.objective_unbiased = fit_u.objective;
    const CriterionReport report = round.criterion;
    out.history.push_back(std::move(round));
    out.final_model = std::move(fit_o);
    out.label_map = lm;

    if (!report.misspecified) {
      out.terminated_by = Termination::converged;
      break;
    }
    stalled = report.disagreements < previous ? 0 : stalled + 1;
    previous = report.disagreements;
    if (stalled >= opts.stall_rounds) {
      out.terminated_by = Termination::no_improvement;
      break;
    }

    const StructureChange change =
        modify_structure(lm, report, preds_u, d.labels, C,
                         ModifyOptions{k_max, opts.map_new_to_true_class});
    if (change.status == GrowthStatus::capped) {
      out.terminated_by = Termination::growth_capped;
      break;
    }
    if (change.status == GrowthStatus::unchanged) {
      out.terminated_by = Termination::no_improvement;
      break;
    }
    lm = change.label_map;
  }
  out.rounds = static_cast<int>(out.history.size());
  return out;
}

BatchPrediction predict(const AskkmModel& m, const Eigen::MatrixXd& km_rows,
                        const Eigen::VectorXd& self_k) {
  return predict_batch(m.final_model, km_rows, self_k);
}

}  // namespace mssl
