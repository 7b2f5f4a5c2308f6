#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mssl/kernels.hpp"
#include "mssl/misspec.hpp"
#include "mssl/sskkm.hpp"

namespace mssl {

enum class Termination { converged, growth_capped, no_improvement };

std::string to_string(Termination t);
Termination termination_from_string(const std::string& name);

struct AskkmRound {
  int K = 0;
  CriterionReport criterion;
  double objective_original = 0.0;
  double objective_unbiased = 0.0;
};

struct AskkmModel {
  ClusterModel final_model;  // original-weight fit at the final structure
  LabelMap label_map;
  std::vector<AskkmRound> history;
  int rounds = 0;
  Termination terminated_by = Termination::converged;
};

struct AskkmOptions {
  std::optional<int> threshold;  // default_threshold(N_l) when unset
  std::optional<int> k_max;      // 10 * C when unset
  int stall_rounds = 3;
  bool map_new_to_true_class = false;
  SolverOptions solver;  // weight field is ignored; each round fits both weightings
};

/// Paired original/unbiased fits per round; grows the structure while the
/// labeled-point disagreement exceeds the threshold.
AskkmModel fit_askkm(const KernelMatrix& km, const Dataset& d, const AskkmOptions& opts);

/// Classification through the final model and label map.
BatchPrediction predict(const AskkmModel& m, const Eigen::MatrixXd& km_rows,
                        const Eigen::VectorXd& self_k);

}  // namespace mssl
