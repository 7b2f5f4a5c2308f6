#pragma once

#include <optional>
#include <span>
#include <vector>

#include "mssl/core.hpp"

namespace mssl {

/// Fine (cluster-level) labels and their surjection onto the original classes.
///
/// fine_of_point is aligned with Dataset::labeled_idx.
struct LabelMap {
  std::vector<int> fine_to_class;
  std::vector<int> fine_of_point;

  int n_fine() const { return static_cast<int>(fine_to_class.size()); }
  int class_of_fine(int fine) const { return fine_to_class.at(static_cast<std::size_t>(fine)); }

  /// K = C, fine label = class label.
  static LabelMap identity(const Dataset& d);

  bool operator==(const LabelMap&) const = default;
};

/// Throws StructuralError unless the map is total, surjective onto 0..n_classes-1,
/// and every fine label has at least one labeled carrier.
void check_label_map(const LabelMap& lm, int n_classes, Index n_labeled);

struct DisagreeingPoint {
  Index position;  // position in the labeled list
  Index point;     // dataset row
  int pred_original;
  int pred_unbiased;
};

struct CriterionReport {
  int disagreements = 0;
  int n_labeled = 0;
  int threshold = 0;
  bool misspecified = false;
  std::vector<DisagreeingPoint> disagreeing_points;
  std::optional<KlEstimate> kl_gap;
};

/// Counts labeled points on which the two plug-in classifiers disagree and flags
/// misspecification when the count exceeds `threshold`. `labeled_idx` maps
/// positions to dataset rows; when empty, positions are reported as rows.
CriterionReport disagreement_criterion(std::span<const int> preds_original,
                                       std::span<const int> preds_unbiased, int threshold,
                                       std::span<const Index> labeled_idx = {});

/// max(1, ceil(0.05 * n_labeled)).
int default_threshold(Index n_labeled);

struct ModifyOptions {
  int k_max = 0;  // 0 means 10 * n_classes
  bool map_new_to_true_class = false;
};

enum class GrowthStatus { grown, capped, unchanged };

struct StructureChange {
  LabelMap label_map;  // unchanged input unless status == grown
  GrowthStatus status = GrowthStatus::unchanged;
  int added = 0;
  int removed = 0;
};

/// Splits disagreeing labeled points off into new fine labels, one per distinct
/// (true class, unbiased prediction) pair, each mapped to the unbiased prediction
/// (or to the true class with map_new_to_true_class). Fine labels left without
/// carriers are dropped and the remaining ones renumbered in order.
///
/// Throws InputError if the report does not flag misspecification or sizes disagree.
StructureChange modify_structure(const LabelMap& lm, const CriterionReport& report,
                                 std::span<const int> preds_unbiased,
                                 std::span<const int> true_labels, int n_classes,
                                 const ModifyOptions& opts = {});

}  // namespace mssl
