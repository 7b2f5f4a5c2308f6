#include "mssl/sskkm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mssl/parallel.hpp"

namespace mssl {

namespace {

struct ClusterStats {
  std::vector<double> weight;  // W_k
  std::vector<double> self;    // (1/W_k^2) sum w_j w_l K_jl
};

void check_square(const KernelMatrix& km, const Dataset& d) {
  if (km.n() != d.n_points() || km.values.cols() != d.n_points()) {
    throw InputError("Gram matrix is " + std::to_string(km.n()) + "x" +
                     std::to_string(km.values.cols()) + " but dataset has " +
                     std::to_string(d.n_points()) + " points");
  }
}

// S(i, k) = sum_{j in k} w_j K_ij.
Eigen::MatrixXd weighted_sums(const KernelMatrix& km, const std::vector<int>& cluster_of,
                              const std::vector<double>& w, int K) {
  const Index n = km.n();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, K);
  parallel_for(n, [&](Index begin, Index end) {
    std::vector<double> acc(static_cast<std::size_t>(K));
    for (Index i = begin; i < end; ++i) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (Index j = 0; j < n; ++j) {
        const double wj = w[static_cast<std::size_t>(j)];
        if (wj != 0.0) acc[static_cast<std::size_t>(cluster_of[static_cast<std::size_t>(j)])] += wj * km.values(i, j);
      }
      for (int k = 0; k < K; ++k) s(i, k) = acc[static_cast<std::size_t>(k)];
    }
  });
  return s;
}

ClusterStats cluster_stats(const Eigen::MatrixXd& s, const std::vector<int>& cluster_of,
                           const std::vector<double>& w, int K) {
  ClusterStats st{std::vector<double>(static_cast<std::size_t>(K), 0.0),
                  std::vector<double>(static_cast<std::size_t>(K), 0.0)};
  for (std::size_t j = 0; j < cluster_of.size(); ++j) {
    const auto k = static_cast<std::size_t>(cluster_of[j]);
    st.weight[k] += w[j];
    st.self[k] += w[j] * s(static_cast<Index>(j), static_cast<Index>(k));
  }
  for (int k = 0; k < K; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    if (!(st.weight[kk] > 0.0)) {
      throw StructuralError("cluster " + std::to_string(k) + " has zero weight");
    }
    st.self[kk] /= st.weight[kk] * st.weight[kk];
  }
  return st;
}

double dist_from_stats(double self_i, double s_ik, const ClusterStats& st, int k) {
  const auto kk = static_cast<std::size_t>(k);
  return self_i - 2.0 * s_ik / st.weight[kk] + st.self[kk];
}

double objective_of(const KernelMatrix& km, const Eigen::MatrixXd& s,
                    const std::vector<int>& cluster_of, const std::vector<double>& w,
                    const ClusterStats& st) {
  double obj = 0.0;
  for (std::size_t i = 0; i < cluster_of.size(); ++i) {
    if (w[i] == 0.0) continue;
    const auto ii = static_cast<Index>(i);
    const int k = cluster_of[i];
    obj += w[i] * std::max(0.0, dist_from_stats(km.values(ii, ii), s(ii, k), st, k));
  }
  return obj;
}

int argmin_cluster(const Eigen::Ref<const Eigen::VectorXd>& dist) {
  int best = 0;
  for (int k = 1; k < dist.size(); ++k) {
    if (dist(k) < dist(best)) best = k;
  }
  return best;
}

}  // namespace

std::vector<double> point_weights(const Dataset& d, double unlabeled_weight) {
  std::vector<double> w(static_cast<std::size_t>(d.n_points()), 0.0);
  for (Index i : d.unlabeled_idx) w[static_cast<std::size_t>(i)] = unlabeled_weight;
  for (Index i : d.labeled_idx) w[static_cast<std::size_t>(i)] = 1.0;
  return w;
}

Assignments init_assignments(const KernelMatrix& km, const Dataset& d, const LabelMap& lm) {
  require_valid(d);
  check_square(km, d);
  check_label_map(lm, d.n_classes, d.n_labeled());
  const int K = lm.n_fine();
  const Index n = d.n_points();

  // Seed statistics use unit weights on labeled points only.
  std::vector<int> seed_cluster(static_cast<std::size_t>(n), 0);
  std::vector<double> seed_w(static_cast<std::size_t>(n), 0.0);
  for (std::size_t p = 0; p < d.labeled_idx.size(); ++p) {
    const auto i = static_cast<std::size_t>(d.labeled_idx[p]);
    seed_cluster[i] = lm.fine_of_point[p];
    seed_w[i] = 1.0;
  }
  const Eigen::MatrixXd s = weighted_sums(km, seed_cluster, seed_w, K);
  const ClusterStats st = cluster_stats(s, seed_cluster, seed_w, K);

  Assignments a{std::vector<int>(static_cast<std::size_t>(n), 0), K};
  std::vector<bool> pinned(static_cast<std::size_t>(n), false);
  for (std::size_t p = 0; p < d.labeled_idx.size(); ++p) {
    const auto i = static_cast<std::size_t>(d.labeled_idx[p]);
    a.cluster_of[i] = lm.fine_of_point[p];
    pinned[i] = true;
  }
  Eigen::VectorXd dist(K);
  for (Index i = 0; i < n; ++i) {
    if (pinned[static_cast<std::size_t>(i)]) continue;
    for (int k = 0; k < K; ++k) dist(k) = dist_from_stats(km.values(i, i), s(i, k), st, k);
    a.cluster_of[static_cast<std::size_t>(i)] = argmin_cluster(dist);
  }
  return a;
}

double point_cluster_dist(const KernelMatrix& km, const Assignments& a,
                          std::span<const double> weights, Index i, int k) {
  const Index n = km.n();
  if (static_cast<Index>(a.cluster_of.size()) != n || static_cast<Index>(weights.size()) != n) {
    throw InputError("assignments/weights must cover every point of the Gram matrix");
  }
  if (i < 0 || i >= n) throw InputError("point index out of range");
  if (k < 0 || k >= a.K) throw InputError("cluster index out of range");

  double wk = 0.0;
  double cross = 0.0;
  double second = 0.0;
  for (Index j = 0; j < n; ++j) {
    if (a.cluster_of[static_cast<std::size_t>(j)] != k) continue;
    const double wj = weights[static_cast<std::size_t>(j)];
    wk += wj;
    cross += wj * km.values(i, j);
    for (Index l = 0; l < n; ++l) {
      if (a.cluster_of[static_cast<std::size_t>(l)] == k) {
        second += wj * weights[static_cast<std::size_t>(l)] * km.values(j, l);
      }
    }
  }
  if (!(wk > 0.0)) throw StructuralError("cluster " + std::to_string(k) + " is empty under the weights");
  return km.values(i, i) - 2.0 * cross / wk + second / (wk * wk);
}

ClusterModel fit_sskkm(const KernelMatrix& km, const Dataset& d, const LabelMap& lm,
                       const SolverOptions& opts) {
  check_options(opts);
  Assignments a = init_assignments(km, d, lm);
  const int K = a.K;
  const Index n = d.n_points();

  ClusterModel model;
  model.label_map = lm;
  model.kernel_spec = km.spec;
  model.unlabeled_weight = resolve_unlabeled_weight(opts.weight, d.n_labeled(), d.n_unlabeled());
  model.point_weight = point_weights(d, model.unlabeled_weight);
  const auto& w = model.point_weight;

  std::vector<bool> pinned(static_cast<std::size_t>(n), false);
  for (Index i : d.labeled_idx) pinned[static_cast<std::size_t>(i)] = true;

  Eigen::MatrixXd s = weighted_sums(km, a.cluster_of, w, K);
  ClusterStats st = cluster_stats(s, a.cluster_of, w, K);
  double obj = objective_of(km, s, a.cluster_of, w, st);
  model.objective_trace.push_back(obj);

  for (int it = 1; it <= opts.max_iter; ++it) {
    std::vector<int> next = a.cluster_of;
    parallel_for(n, [&](Index begin, Index end) {
      Eigen::VectorXd dist(K);
      for (Index i = begin; i < end; ++i) {
        if (pinned[static_cast<std::size_t>(i)]) continue;
        for (int k = 0; k < K; ++k) dist(k) = dist_from_stats(km.values(i, i), s(i, k), st, k);
        next[static_cast<std::size_t>(i)] = argmin_cluster(dist);
      }
    });
    if (next == a.cluster_of) {
      model.converged = true;
      break;
    }
    a.cluster_of = std::move(next);
    s = weighted_sums(km, a.cluster_of, w, K);
    st = cluster_stats(s, a.cluster_of, w, K);
    const double next_obj = objective_of(km, s, a.cluster_of, w, st);
    model.objective_trace.push_back(next_obj);
    model.iterations_run = it;
    const double decrease = obj - next_obj;
    obj = next_obj;
    if (decrease < opts.tol) {
      model.converged = true;
      break;
    }
  }

  model.assignments = std::move(a);
  model.objective = obj;
  model.cluster_weight = st.weight;
  model.cluster_self = st.self;
  return model;
}

Eigen::VectorXd cluster_distances(const ClusterModel& model, std::span<const double> km_row,
                                  double self_k) {
  const auto& cluster_of = model.assignments.cluster_of;
  if (km_row.size() != cluster_of.size()) {
    throw InputError("kernel row has " + std::to_string(km_row.size()) + " entries, model has " +
                     std::to_string(cluster_of.size()) + " training points");
  }
  const int K = model.K();
  Eigen::VectorXd cross = Eigen::VectorXd::Zero(K);
  for (std::size_t j = 0; j < km_row.size(); ++j) {
    const double wj = model.point_weight[j];
    if (wj != 0.0) cross(cluster_of[j]) += wj * km_row[j];
  }
  Eigen::VectorXd dist(K);
  for (int k = 0; k < K; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    dist(k) = self_k - 2.0 * cross(k) / model.cluster_weight[kk] + model.cluster_self[kk];
  }
  return dist;
}

Eigen::VectorXd class_scores(const ClusterModel& model, std::span<const double> km_row,
                             double self_k) {
  const Eigen::VectorXd dist = cluster_distances(model, km_row, self_k);
  const auto& g = model.label_map.fine_to_class;
  const int n_classes = *std::max_element(g.begin(), g.end()) + 1;
  Eigen::VectorXd scores =
      Eigen::VectorXd::Constant(n_classes, -std::numeric_limits<double>::infinity());
  for (int k = 0; k < model.K(); ++k) {
    const int c = g[static_cast<std::size_t>(k)];
    scores(c) = std::max(scores(c), -dist(k));
  }
  return scores;
}

int classify_point(const ClusterModel& model, std::span<const double> km_row, double self_k) {
  const Eigen::VectorXd scores = class_scores(model, km_row, self_k);
  int best = 0;
  for (int c = 1; c < scores.size(); ++c) {
    if (scores(c) > scores(best)) best = c;
  }
  return best;
}

BatchPrediction predict_batch(const ClusterModel& model, const Eigen::MatrixXd& km_rows,
                              const Eigen::VectorXd& self_k) {
  if (km_rows.rows() != self_k.size()) throw InputError("one self-kernel value per query required");
  const Index nq = km_rows.rows();
  BatchPrediction out;
  out.labels.resize(static_cast<std::size_t>(nq));
  const auto& g = model.label_map.fine_to_class;
  const int n_classes = *std::max_element(g.begin(), g.end()) + 1;
  out.scores.resize(nq, n_classes);
  std::vector<double> row(static_cast<std::size_t>(km_rows.cols()));
  for (Index q = 0; q < nq; ++q) {
    for (Index j = 0; j < km_rows.cols(); ++j) row[static_cast<std::size_t>(j)] = km_rows(q, j);
    const Eigen::VectorXd sc = class_scores(model, row, self_k(q));
    out.scores.row(q) = sc.transpose();
    int best = 0;
    for (int c = 1; c < sc.size(); ++c) {
      if (sc(c) > sc(best)) best = c;
    }
    out.labels[static_cast<std::size_t>(q)] = best;
  }
  return out;
}

std::vector<int> predict_labeled(const ClusterModel& model, const KernelMatrix& km,
                                 const Dataset& d) {
  std::vector<int> preds;
  preds.reserve(d.labeled_idx.size());
  std::vector<double> row(static_cast<std::size_t>(km.n()));
  for (Index i : d.labeled_idx) {
    for (Index j = 0; j < km.n(); ++j) row[static_cast<std::size_t>(j)] = km.values(i, j);
    preds.push_back(classify_point(model, row, km.values(i, i)));
  }
  return preds;
}

}  // namespace mssl
