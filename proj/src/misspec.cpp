#include "mssl/misspec.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <utility>

namespace mssl {

LabelMap LabelMap::identity(const Dataset& d) {
  LabelMap lm;
  lm.fine_to_class.resize(static_cast<std::size_t>(d.n_classes));
  for (int c = 0; c < d.n_classes; ++c) lm.fine_to_class[static_cast<std::size_t>(c)] = c;
  lm.fine_of_point = d.labels;
  return lm;
}

void check_label_map(const LabelMap& lm, int n_classes, Index n_labeled) {
  const int k = lm.n_fine();
  if (k < n_classes) {
    throw StructuralError("label map has " + std::to_string(k) + " fine labels for " +
                          std::to_string(n_classes) + " classes");
  }
  if (static_cast<Index>(lm.fine_of_point.size()) != n_labeled) {
    throw StructuralError("label map covers " + std::to_string(lm.fine_of_point.size()) +
                          " labeled points, dataset has " + std::to_string(n_labeled));
  }
  std::vector<bool> hit(static_cast<std::size_t>(n_classes), false);
  for (int f = 0; f < k; ++f) {
    const int c = lm.fine_to_class[static_cast<std::size_t>(f)];
    if (c < 0 || c >= n_classes) {
      throw StructuralError("fine label " + std::to_string(f) + " maps to invalid class " +
                            std::to_string(c));
    }
    hit[static_cast<std::size_t>(c)] = true;
  }
  for (int c = 0; c < n_classes; ++c) {
    if (!hit[static_cast<std::size_t>(c)]) {
      throw StructuralError("class " + std::to_string(c) + " has no fine label");
    }
  }
  std::vector<int> carriers(static_cast<std::size_t>(k), 0);
  for (int f : lm.fine_of_point) {
    if (f < 0 || f >= k) throw StructuralError("point carries invalid fine label " + std::to_string(f));
    ++carriers[static_cast<std::size_t>(f)];
  }
  for (int f = 0; f < k; ++f) {
    if (carriers[static_cast<std::size_t>(f)] == 0) {
      throw StructuralError("cluster " + std::to_string(f) + " has no labeled seed");
    }
  }
}

CriterionReport disagreement_criterion(std::span<const int> preds_original,
                                       std::span<const int> preds_unbiased, int threshold,
                                       std::span<const Index> labeled_idx) {
  if (preds_original.size() != preds_unbiased.size()) {
    throw InputError("prediction lists differ in length: " +
                     std::to_string(preds_original.size()) + " vs " +
                     std::to_string(preds_unbiased.size()));
  }
  if (!labeled_idx.empty() && labeled_idx.size() != preds_original.size()) {
    throw InputError("labeled index list does not match prediction length");
  }
  if (threshold < 0) throw InputError("threshold must be >= 0");

  CriterionReport report;
  report.n_labeled = static_cast<int>(preds_original.size());
  report.threshold = threshold;
  for (std::size_t i = 0; i < preds_original.size(); ++i) {
    if (preds_original[i] != preds_unbiased[i]) {
      const auto pos = static_cast<Index>(i);
      report.disagreeing_points.push_back(
          {pos, labeled_idx.empty() ? pos : labeled_idx[i], preds_original[i], preds_unbiased[i]});
    }
  }
  report.disagreements = static_cast<int>(report.disagreeing_points.size());
  report.misspecified = report.disagreements > threshold;
  return report;
}

int default_threshold(Index n_labeled) {
  if (n_labeled < 1) throw InputError("default threshold needs at least one labeled point");
  return static_cast<int>(std::max<Index>(1, (n_labeled + 19) / 20));
}

StructureChange modify_structure(const LabelMap& lm, const CriterionReport& report,
                                 std::span<const int> preds_unbiased,
                                 std::span<const int> true_labels, int n_classes,
                                 const ModifyOptions& opts) {
  if (!report.misspecified) throw InputError("modify_structure requires a misspecified report");
  const std::size_t n_labeled = lm.fine_of_point.size();
  if (preds_unbiased.size() != n_labeled || true_labels.size() != n_labeled) {
    throw InputError("prediction/label lists must cover every labeled point");
  }
  const int k_max = opts.k_max > 0 ? opts.k_max : 10 * n_classes;

  // One new fine label per distinct (true class, unbiased prediction) pair, in
  // order of first appearance among disagreeing points.
  std::map<std::pair<int, int>, int> pair_to_new;
  std::vector<int> new_classes;
  LabelMap next = lm;
  const int k = lm.n_fine();
  for (const auto& dp : report.disagreeing_points) {
    const auto i = static_cast<std::size_t>(dp.position);
    if (i >= n_labeled) throw InputError("disagreeing point position out of range");
    const std::pair<int, int> key{true_labels[i], preds_unbiased[i]};
    auto [it, inserted] = pair_to_new.try_emplace(key, k + static_cast<int>(new_classes.size()));
    if (inserted) new_classes.push_back(opts.map_new_to_true_class ? key.first : key.second);
    next.fine_of_point[i] = it->second;
  }
  next.fine_to_class.insert(next.fine_to_class.end(), new_classes.begin(), new_classes.end());

  // Drop fine labels that lost every carrier.
  std::vector<int> carriers(next.fine_to_class.size(), 0);
  for (int f : next.fine_of_point) ++carriers[static_cast<std::size_t>(f)];
  std::vector<int> remap(next.fine_to_class.size(), -1);
  LabelMap compact;
  for (std::size_t f = 0; f < next.fine_to_class.size(); ++f) {
    if (carriers[f] > 0) {
      remap[f] = compact.n_fine();
      compact.fine_to_class.push_back(next.fine_to_class[f]);
    }
  }
  compact.fine_of_point.reserve(n_labeled);
  for (int f : next.fine_of_point) compact.fine_of_point.push_back(remap[static_cast<std::size_t>(f)]);

  StructureChange change;
  change.added = static_cast<int>(new_classes.size());
  change.removed = static_cast<int>(next.fine_to_class.size()) - compact.n_fine();

  // A class can lose its last fine label when every one of its carriers was
  // predicted as something else; such a map is not surjective.
  std::vector<bool> hit(static_cast<std::size_t>(n_classes), false);
  for (int c : compact.fine_to_class) hit[static_cast<std::size_t>(c)] = true;
  const bool surjective = std::all_of(hit.begin(), hit.end(), [](bool b) { return b; });

  if (compact.n_fine() <= k || !surjective) {
    change.label_map = lm;
    change.status = GrowthStatus::unchanged;
  } else if (compact.n_fine() > k_max) {
    change.label_map = lm;
    change.status = GrowthStatus::capped;
  } else {
    change.label_map = std::move(compact);
    change.status = GrowthStatus::grown;
  }
  return change;
}

}  // namespace mssl
