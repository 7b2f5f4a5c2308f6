#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mssl/askkm.hpp"
#include "mssl/datagen.hpp"
#include "mssl/kernels.hpp"
#include "mssl/semgmm.hpp"

namespace mssl {

struct RankedList {
  std::vector<double> scores;
  std::vector<bool> relevance;
};

/// Interpolated precision at recall 0, 0.1, ..., 1.0.
std::array<double, 11> interpolated_precision(const RankedList& r);

/// 11-point interpolated AP. Ties in score keep the original item order.
/// Throws UndefinedMetricError when no item is relevant.
double average_precision(const RankedList& r);

double mean_ap(std::span<const double> per_class_ap);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> names = {"original_sskkm", "unbiased_sskkm", "askkm",
                                                 "original_sem",   "unbiased_sem",   "supervised"};
  return names;
}

/// Per-class score minus the best competing class score.
Eigen::MatrixXd score_margins(const Eigen::MatrixXd& scores);

/// Settings shared by every method of a comparison.
struct MethodConfig {
  KernelConfig kernel;
  AskkmOptions askkm;
  SemOptions sem;
  std::uint64_t seed = 0;
};

struct MethodOutput {
  std::vector<int> predictions;
  Eigen::MatrixXd ranking_scores;  // n_test x C, higher = more class-like
  int final_K = 0;
};

/// Fits `method` on `train` and scores `test`. Kernel methods rank by the
/// margin of a class score over the best other class; SEM methods by posterior.
MethodOutput run_method(const std::string& method, const Dataset& train,
                        const FeatureMatrix& test, const MethodConfig& cfg);

enum class CurveMetric { automatic, ap, accuracy };

struct CurveOptions {
  std::vector<std::string> methods;
  std::vector<int> grid;
  int n_seeds = 20;
  int eval_size = 500;
  std::uint64_t base_seed = 0;
  CurveMetric metric = CurveMetric::automatic;
  MethodConfig method;
};

struct CurveCell {
  std::string method;
  int n_unlabeled = 0;
  int seed_index = 0;
  double metric = 0.0;
};

struct CurveSeries {
  std::vector<double> mean;
  std::vector<double> std;
};

struct LearningCurve {
  std::vector<int> n_unlabeled_grid;
  std::vector<std::string> methods;
  std::map<std::string, CurveSeries> series;
  int n_seeds = 0;
  std::string metric;  // "ap" or "accuracy"
  std::vector<CurveCell> cells;  // seed-major, then grid, then method order
};

/// Seed i of the sweep uses derive_seed(base_seed, "curve-seed-<i>") for data generation.
std::uint64_t curve_seed(std::uint64_t base_seed, int seed_index);

LearningCurve learning_curve(const GenSpec& scenario, const CurveOptions& opts);

}  // namespace mssl
