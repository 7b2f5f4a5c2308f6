#include "mssl/core.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace mssl {

namespace {

std::string join_indices(const std::vector<Index>& idx) {
  std::ostringstream os;
  for (std::size_t i = 0; i < idx.size(); ++i) os << (i ? "," : "") << idx[i];
  return os.str();
}

void check_partition(const char* name, const std::vector<Index>& idx, Index n,
                     std::vector<Violation>& out) {
  std::vector<Index> out_of_range;
  std::vector<Index> duplicates;
  std::map<Index, int> seen;
  for (Index i : idx) {
    if (i < 0 || i >= n) out_of_range.push_back(i);
    if (++seen[i] == 2) duplicates.push_back(i);
  }
  if (!out_of_range.empty()) {
    out.push_back({"index_out_of_range",
                   std::string(name) + " index out of range at " + join_indices(out_of_range),
                   out_of_range});
  }
  if (!duplicates.empty()) {
    out.push_back({"duplicate_index",
                   std::string(name) + " duplicate at index " + join_indices(duplicates),
                   duplicates});
  }
}

}  // namespace

std::string ValidationReport::summary() const {
  if (ok()) return "ok";
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    os << (i ? "; " : "") << violations[i].message;
  }
  return os.str();
}

ValidationReport validate_dataset(const Dataset& d) {
  ValidationReport report;
  auto& v = report.violations;
  const Index n = d.n_points();

  if (d.n_classes < 2) {
    v.push_back({"too_few_classes",
                 "need at least 2 classes, got " + std::to_string(d.n_classes), {}});
  }
  if (d.labeled_idx.empty()) v.push_back({"no_labeled_points", "labeled set is empty", {}});

  check_partition("labeled", d.labeled_idx, n, v);
  check_partition("unlabeled", d.unlabeled_idx, n, v);

  std::map<Index, bool> labeled_set;
  for (Index i : d.labeled_idx) labeled_set[i] = true;
  std::vector<Index> overlap;
  for (Index i : d.unlabeled_idx) {
    if (labeled_set.count(i)) overlap.push_back(i);
  }
  if (!overlap.empty()) {
    v.push_back({"overlap", "overlap at index " + join_indices(overlap), overlap});
  }

  if (d.labels.size() != d.labeled_idx.size()) {
    v.push_back({"label_count_mismatch",
                 "labels has " + std::to_string(d.labels.size()) + " entries but labeled_idx has " +
                     std::to_string(d.labeled_idx.size()),
                 {}});
  } else {
    std::vector<Index> bad;
    std::vector<bool> present(static_cast<std::size_t>(std::max(d.n_classes, 0)), false);
    for (std::size_t i = 0; i < d.labels.size(); ++i) {
      const int y = d.labels[i];
      if (y < 0 || y >= d.n_classes) {
        bad.push_back(d.labeled_idx[i]);
      } else {
        present[static_cast<std::size_t>(y)] = true;
      }
    }
    if (!bad.empty()) {
      v.push_back({"label_out_of_range", "class id out of range at index " + join_indices(bad), bad});
    }
    for (int c = 0; c < d.n_classes; ++c) {
      if (!present[static_cast<std::size_t>(c)]) {
        v.push_back({"class_unrepresented", "class " + std::to_string(c) + " unrepresented", {}});
      }
    }
  }

  std::vector<Index> non_finite;
  for (Index i = 0; i < n; ++i) {
    if (!d.features.row(i).allFinite()) non_finite.push_back(i);
  }
  if (!non_finite.empty()) {
    v.push_back({"non_finite_feature", "non-finite feature at row " + join_indices(non_finite),
                 non_finite});
  }
  return report;
}

void require_valid(const Dataset& d) {
  const auto report = validate_dataset(d);
  if (!report.ok()) throw InputError("invalid dataset: " + report.summary());
}

double resolve_unlabeled_weight(const UnlabeledWeight& weight, Index n_labeled, Index n_unlabeled) {
  switch (weight.mode) {
    case WeightMode::original:
      return 1.0;
    case WeightMode::unbiased:
      if (n_labeled + n_unlabeled <= 0) throw InputError("unbiased weight needs at least one point");
      return static_cast<double>(n_labeled) / static_cast<double>(n_labeled + n_unlabeled);
    case WeightMode::custom:
      if (!(weight.value >= 0.0 && weight.value <= 1.0)) {
        throw InputError("custom unlabeled weight must lie in [0, 1]");
      }
      return weight.value;
  }
  throw InputError("unknown weight mode");
}

std::string to_string(WeightMode mode) {
  switch (mode) {
    case WeightMode::original: return "original";
    case WeightMode::unbiased: return "unbiased";
    case WeightMode::custom: return "custom";
  }
  return "unknown";
}

WeightMode weight_mode_from_string(const std::string& name) {
  if (name == "original") return WeightMode::original;
  if (name == "unbiased") return WeightMode::unbiased;
  if (name == "custom") return WeightMode::custom;
  throw InputError("unknown weight mode '" + name + "'");
}

void check_options(const SolverOptions& opts) {
  if (opts.max_iter < 1) throw InputError("max_iter must be >= 1");
  if (!(opts.tol >= 0.0)) throw InputError("tol must be >= 0");
  if (opts.weight.mode == WeightMode::custom &&
      !(opts.weight.value >= 0.0 && opts.weight.value <= 1.0)) {
    throw InputError("custom unlabeled weight must lie in [0, 1]");
  }
}

}  // namespace mssl
