#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "mssl/core.hpp"
#include "mssl/kernels.hpp"
#include "mssl/misspec.hpp"

namespace mssl {

struct Assignments {
  std::vector<int> cluster_of;
  int K = 0;

  bool operator==(const Assignments&) const = default;
};

/// Fitted weighted semi-supervised kernel k-means model.
///
/// Centroids live in the kernel feature space and are never materialized; a
/// query is classified through its kernel row against the training points plus
/// the cached per-cluster terms below.
struct ClusterModel {
  Assignments assignments;
  LabelMap label_map;
  double unlabeled_weight = 1.0;
  double objective = 0.0;
  KernelSpec kernel_spec;
  int iterations_run = 0;
  bool converged = false;

  std::vector<double> point_weight;    // 1 labeled, w unlabeled, 0 outside both sets
  std::vector<double> cluster_weight;  // W_k
  std::vector<double> cluster_self;    // (1/W_k^2) sum_{j,l in k} w_j w_l K_jl
  std::vector<double> objective_trace;

  int K() const { return assignments.K; }
};

/// Labeled points go to the cluster named by their fine label; every other
/// point to the nearest labeled-seed mean in kernel distance (ties: lowest id).
/// Throws StructuralError when a cluster has no labeled seed.
Assignments init_assignments(const KernelMatrix& km, const Dataset& d, const LabelMap& lm);

/// Squared kernel distance of point i to the weighted centroid of cluster k,
/// computed from scratch. Throws StructuralError when W_k == 0.
double point_cluster_dist(const KernelMatrix& km, const Assignments& a,
                          std::span<const double> weights, Index i, int k);

/// Per-point weights: 1 labeled, `unlabeled_weight` unlabeled, 0 elsewhere.
std::vector<double> point_weights(const Dataset& d, double unlabeled_weight);

/// Alternates centroid statistics and reassignment of unlabeled points with
/// labeled points pinned to their fine-label cluster. Stops when no assignment
/// changes, when the objective decreases by less than opts.tol, or at
/// opts.max_iter.
ClusterModel fit_sskkm(const KernelMatrix& km, const Dataset& d, const LabelMap& lm,
                       const SolverOptions& opts);

/// Squared distances of a query to every cluster centroid.
Eigen::VectorXd cluster_distances(const ClusterModel& model, std::span<const double> km_row,
                                  double self_k);

/// score(c) = -min over clusters mapped to c of the squared distance.
Eigen::VectorXd class_scores(const ClusterModel& model, std::span<const double> km_row,
                             double self_k);

/// argmax of class_scores; ties go to the lowest class id.
int classify_point(const ClusterModel& model, std::span<const double> km_row, double self_k);

struct BatchPrediction {
  std::vector<int> labels;
  Eigen::MatrixXd scores;  // n_query x n_classes
};

/// Rows of `km_rows` are query kernel rows against the training points.
BatchPrediction predict_batch(const ClusterModel& model, const Eigen::MatrixXd& km_rows,
                              const Eigen::VectorXd& self_k);

/// Class predictions of the model on its own labeled training points.
std::vector<int> predict_labeled(const ClusterModel& model, const KernelMatrix& km,
                                 const Dataset& d);

}  // namespace mssl
