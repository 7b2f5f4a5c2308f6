#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Core>

#include "mssl/core.hpp"

namespace mssl {

enum class KernelKind { linear, rbf, generalized_rbf };
enum class Distance { euclidean, manhattan, chi_square };

/// linear: <x, y>; rbf: exp(-gamma * |x - y|^2); generalized_rbf: exp(-gamma * dist(x, y)).
struct KernelSpec {
  KernelKind kind = KernelKind::rbf;
  double gamma = 1.0;
  Distance distance = Distance::euclidean;

  static KernelSpec linear() { return {KernelKind::linear, 1.0, Distance::euclidean}; }
  static KernelSpec rbf(double gamma) { return {KernelKind::rbf, gamma, Distance::euclidean}; }
  static KernelSpec generalized_rbf(double gamma, Distance d) {
    return {KernelKind::generalized_rbf, gamma, d};
  }

  bool operator==(const KernelSpec&) const = default;
};

std::string to_string(KernelKind kind);
std::string to_string(Distance d);
KernelKind kernel_kind_from_string(const std::string& name);
Distance distance_from_string(const std::string& name);

inline constexpr double kChiSquareEps = 1e-12;

/// Chi-square uses sum (x-y)^2 / (x+y+eps). Throws InputError on dimension
/// mismatch or negative inputs under chi-square.
double feature_distance(std::span<const double> x, std::span<const double> y, Distance d);

double kernel_eval(std::span<const double> x, std::span<const double> y, const KernelSpec& spec);

/// Dense Gram matrix over all points of a dataset.
struct KernelMatrix {
  Eigen::MatrixXd values;
  KernelSpec spec;

  Index n() const { return values.rows(); }
};

KernelMatrix gram_matrix(const FeatureMatrix& features, const KernelSpec& spec);
KernelMatrix gram_matrix(const Dataset& d, const KernelSpec& spec);

/// Kernel values of each query row against each training row (n_query x n_train).
Eigen::MatrixXd cross_kernel(const FeatureMatrix& queries, const FeatureMatrix& train,
                             const KernelSpec& spec);

/// k(q, q) for each query row.
Eigen::VectorXd self_kernel(const FeatureMatrix& queries, const KernelSpec& spec);

/// True iff the smallest eigenvalue is >= -tol.
bool check_psd(const Eigen::MatrixXd& m, double tol);
inline bool check_psd(const KernelMatrix& m, double tol) { return check_psd(m.values, tol); }

/// 1 / median pairwise distance over a seeded subsample of at most `max_points`
/// rows. The distance is the one the kernel exponentiates (squared euclidean for
/// rbf). Returns 1 when the median is zero.
double median_heuristic_gamma(const FeatureMatrix& features, KernelKind kind, Distance d,
                              std::uint64_t seed, Index max_points = 512);

/// Writes the matrix as CSV (%.17g) and the spec as JSON to `path + ".json"`.
void write_gram_csv(const std::string& path, const KernelMatrix& km);
KernelMatrix read_gram_csv(const std::string& path);

}  // namespace mssl

namespace mssl {

/// Kernel choice with an optional bandwidth; the median heuristic fills it in.
struct KernelConfig {
  KernelKind kind = KernelKind::generalized_rbf;
  Distance distance = Distance::euclidean;
  std::optional<double> gamma;
};

KernelSpec resolve_kernel(const KernelConfig& cfg, const FeatureMatrix& features,
                          std::uint64_t seed);

}  // namespace mssl
