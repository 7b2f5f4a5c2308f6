#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mssl/core.hpp"

namespace mssl {

enum class CovarianceMode { diagonal, full };

std::string to_string(CovarianceMode mode);
CovarianceMode covariance_mode_from_string(const std::string& name);

/// Gaussian mixture whose components are partitioned among classes by comp_map:
/// f(x, y) = sum_{k : comp_map[k] = y} weights[k] N(x; means[k], covariances[k]).
struct GmmModel {
  int n_classes = 0;
  Eigen::VectorXd weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;
  std::vector<int> comp_map;
  CovarianceMode covariance_mode = CovarianceMode::diagonal;
  double unlabeled_weight = 1.0;
  double final_loglik = 0.0;
  int iterations_run = 0;
  bool converged = false;
  std::vector<double> loglik_trace;

  int K() const { return static_cast<int>(comp_map.size()); }
  Index dim() const { return means.empty() ? 0 : means.front().size(); }
};

struct SemOptions {
  SolverOptions solver;
  CovarianceMode covariance = CovarianceMode::diagonal;
  /// Unsupervised endpoint: labeled points contribute marginal terms only.
  bool ignore_labels = false;
};

std::vector<int> identity_comp_map(int n_classes);

/// Weighted semi-supervised EM on
///   sum_labeled log f(x_i, y_i) + w * sum_unlabeled log f(x_j).
/// Labeled responsibilities are restricted to components of the point's class.
GmmModel fit_sem(const Dataset& d, std::span<const int> comp_map, const SemOptions& opts);

/// One component per class.
GmmModel fit_sem(const Dataset& d, const SemOptions& opts);

double log_joint(const GmmModel& m, std::span<const double> x, int y);
double log_marginal(const GmmModel& m, std::span<const double> x);

/// The weighted objective of fit_sem evaluated at the model's parameters.
double loglik(const GmmModel& m, const Dataset& d, double unlabeled_weight);

/// argmax_y f(x, y), computed in the log domain; ties go to the lowest class id.
int bayes_classify(const GmmModel& m, std::span<const double> x);

/// Normalized per-class joint densities.
Eigen::VectorXd class_posteriors(const GmmModel& m, std::span<const double> x);

struct SemPrediction {
  std::vector<int> labels;
  Eigen::MatrixXd posteriors;  // n x n_classes
};

SemPrediction predict_sem(const GmmModel& m, const FeatureMatrix& x);

/// Monte-Carlo KL(f(X,Y|m1) || f(X,Y|m2)) from n_samples joint draws under m1.
KlEstimate kl_mc(const GmmModel& m1, const GmmModel& m2, Index n_samples, std::uint64_t seed);

}  // namespace mssl
