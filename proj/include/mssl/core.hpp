#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mssl {

using Index = Eigen::Index;

/// Row-major so that each point's features are a contiguous span.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Bad caller input: shapes, ranges, malformed files.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A model structure that violates a solver precondition (e.g. a cluster without labeled seeds).
class StructuralError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A metric requested on data where it is not defined (AP without relevant items).
class UndefinedMetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Feature matrix plus a labeled/unlabeled partition of its rows.
///
/// Class ids are dense, 0..n_classes-1. Rows that appear in neither partition
/// are carried along but never influence a fit.
struct Dataset {
  FeatureMatrix features;
  std::vector<Index> labeled_idx;
  std::vector<int> labels;
  std::vector<Index> unlabeled_idx;
  int n_classes = 0;

  Index n_points() const { return features.rows(); }
  Index dim() const { return features.cols(); }
  Index n_labeled() const { return static_cast<Index>(labeled_idx.size()); }
  Index n_unlabeled() const { return static_cast<Index>(unlabeled_idx.size()); }
};

struct Violation {
  std::string kind;
  std::string message;
  std::vector<Index> indices;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

/// Checks every Dataset invariant and lists each violation with the offending indices.
ValidationReport validate_dataset(const Dataset& d);

/// Throws InputError carrying the validation summary unless `d` is valid.
void require_valid(const Dataset& d);

enum class WeightMode { original, unbiased, custom };

/// How the unlabeled term of a semi-supervised objective is weighted.
struct UnlabeledWeight {
  WeightMode mode = WeightMode::original;
  double value = 1.0;  // only read in custom mode

  static UnlabeledWeight original() { return {WeightMode::original, 1.0}; }
  static UnlabeledWeight unbiased() { return {WeightMode::unbiased, 0.0}; }
  static UnlabeledWeight custom(double w) { return {WeightMode::custom, w}; }
};

/// original -> 1, unbiased -> N_l / (N_l + N_u), custom -> w.
double resolve_unlabeled_weight(const UnlabeledWeight& weight, Index n_labeled, Index n_unlabeled);

std::string to_string(WeightMode mode);
WeightMode weight_mode_from_string(const std::string& name);

struct SolverOptions {
  int max_iter = 300;
  double tol = 1e-7;
  std::uint64_t seed = 0;
  UnlabeledWeight weight;
};

void check_options(const SolverOptions& opts);

/// Monte-Carlo estimate of a KL divergence in nats.
struct KlEstimate {
  double value = 0.0;     // clamped at 0
  double raw_mean = 0.0;  // before clamping
  double std_error = 0.0;
  Index n_samples = 0;
  std::uint64_t seed = 0;
};

}  // namespace mssl
