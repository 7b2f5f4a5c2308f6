#include "mssl/serialize.hpp"

#include <cstdio>
#include <sstream>

namespace mssl {

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vec_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
  return v;
}

json dense_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Index k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
    rows.push_back(std::move(r));
  }
  return rows;
}

Eigen::MatrixXd dense_from_json(const json& j) {
  const Index rows = static_cast<Index>(j.size());
  const Index cols = rows ? static_cast<Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    if (static_cast<Index>(j[static_cast<std::size_t>(i)].size()) != cols) {
      throw InputError("ragged matrix in JSON");
    }
    for (Index k = 0; k < cols; ++k) m(i, k) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

}  // namespace

json matrix_to_json(const FeatureMatrix& m) { return dense_to_json(m); }

FeatureMatrix matrix_from_json(const json& j) { return dense_from_json(j); }

void to_json(json& j, const KernelSpec& s) {
  j = {{"kind", to_string(s.kind)}, {"gamma", s.gamma}, {"distance", to_string(s.distance)}};
}

void from_json(const json& j, KernelSpec& s) {
  s.kind = kernel_kind_from_string(j.at("kind").get<std::string>());
  s.gamma = j.at("gamma").get<double>();
  s.distance = distance_from_string(j.at("distance").get<std::string>());
}

void to_json(json& j, const LabelMap& m) {
  j = {{"fine_to_class", m.fine_to_class}, {"fine_of_point", m.fine_of_point}};
}

void from_json(const json& j, LabelMap& m) {
  m.fine_to_class = j.at("fine_to_class").get<std::vector<int>>();
  m.fine_of_point = j.at("fine_of_point").get<std::vector<int>>();
}

void to_json(json& j, const KlEstimate& e) {
  j = {{"value", e.value},
       {"raw_mean", e.raw_mean},
       {"std_error", e.std_error},
       {"n_samples", e.n_samples},
       {"seed", e.seed}};
}

void from_json(const json& j, KlEstimate& e) {
  e.value = j.at("value").get<double>();
  e.raw_mean = j.at("raw_mean").get<double>();
  e.std_error = j.at("std_error").get<double>();
  e.n_samples = j.at("n_samples").get<Index>();
  e.seed = j.at("seed").get<std::uint64_t>();
}

void to_json(json& j, const CriterionReport& r) {
  json points = json::array();
  for (const auto& p : r.disagreeing_points) {
    points.push_back({{"position", p.position},
                      {"point", p.point},
                      {"pred_original", p.pred_original},
                      {"pred_unbiased", p.pred_unbiased}});
  }
  j = {{"disagreements", r.disagreements},
       {"n_labeled", r.n_labeled},
       {"threshold", r.threshold},
       {"misspecified", r.misspecified},
       {"disagreeing_points", std::move(points)}};
  if (r.kl_gap) j["kl_gap"] = *r.kl_gap;
}

void from_json(const json& j, CriterionReport& r) {
  r.disagreements = j.at("disagreements").get<int>();
  r.n_labeled = j.at("n_labeled").get<int>();
  r.threshold = j.at("threshold").get<int>();
  r.misspecified = j.at("misspecified").get<bool>();
  r.disagreeing_points.clear();
  for (const auto& p : j.at("disagreeing_points")) {
    r.disagreeing_points.push_back({p.at("position").get<Index>(), p.at("point").get<Index>(),
                                    p.at("pred_original").get<int>(),
                                    p.at("pred_unbiased").get<int>()});
  }
  if (j.contains("kl_gap")) r.kl_gap = j.at("kl_gap").get<KlEstimate>();
}

void to_json(json& j, const ClusterModel& m) {
  j = {{"K", m.K()},
       {"assignments", m.assignments.cluster_of},
       {"label_map", m.label_map},
       {"unlabeled_weight", m.unlabeled_weight},
       {"objective", m.objective},
       {"kernel", m.kernel_spec},
       {"iterations_run", m.iterations_run},
       {"converged", m.converged},
       {"point_weight", m.point_weight},
       {"cluster_weight", m.cluster_weight},
       {"cluster_self", m.cluster_self},
       {"objective_trace", m.objective_trace}};
}

void from_json(const json& j, ClusterModel& m) {
  m.assignments.K = j.at("K").get<int>();
  m.assignments.cluster_of = j.at("assignments").get<std::vector<int>>();
  m.label_map = j.at("label_map").get<LabelMap>();
  m.unlabeled_weight = j.at("unlabeled_weight").get<double>();
  m.objective = j.at("objective").get<double>();
  m.kernel_spec = j.at("kernel").get<KernelSpec>();
  m.iterations_run = j.at("iterations_run").get<int>();
  m.converged = j.at("converged").get<bool>();
  m.point_weight = j.at("point_weight").get<std::vector<double>>();
  m.cluster_weight = j.at("cluster_weight").get<std::vector<double>>();
  m.cluster_self = j.at("cluster_self").get<std::vector<double>>();
  m.objective_trace = j.value("objective_trace", std::vector<double>{});
  if (static_cast<int>(m.cluster_weight.size()) != m.K() ||
      static_cast<int>(m.cluster_self.size()) != m.K() ||
      m.label_map.n_fine() != m.K() || m.point_weight.size() != m.assignments.cluster_of.size()) {
    throw InputError("inconsistent cluster model JSON");
  }
}

void to_json(json& j, const GmmModel& m) {
  json means = json::array();
  json covs = json::array();
  for (int k = 0; k < m.K(); ++k) {
    means.push_back(vec_to_json(m.means[static_cast<std::size_t>(k)]));
    covs.push_back(dense_to_json(m.covariances[static_cast<std::size_t>(k)]));
  }
  j = {{"K", m.K()},
       {"n_classes", m.n_classes},
       {"weights", vec_to_json(m.weights)},
       {"means", std::move(means)},
       {"covariances", std::move(covs)},
       {"comp_map", m.comp_map},
       {"covariance_mode", to_string(m.covariance_mode)},
       {"unlabeled_weight", m.unlabeled_weight},
       {"final_loglik", m.final_loglik},
       {"iterations_run", m.iterations_run},
       {"converged", m.converged},
       {"loglik_trace", m.loglik_trace}};
}

void from_json(const json& j, GmmModel& m) {
  m.n_classes = j.at("n_classes").get<int>();
  m.weights = vec_from_json(j.at("weights"));
  m.means.clear();
  m.covariances.clear();
  for (const auto& v : j.at("means")) m.means.push_back(vec_from_json(v));
  for (const auto& c : j.at("covariances")) m.covariances.push_back(dense_from_json(c));
  m.comp_map = j.at("comp_map").get<std::vector<int>>();
  m.covariance_mode = covariance_mode_from_string(j.at("covariance_mode").get<std::string>());
  m.unlabeled_weight = j.at("unlabeled_weight").get<double>();
  m.final_loglik = j.at("final_loglik").get<double>();
  m.iterations_run = j.at("iterations_run").get<int>();
  m.converged = j.at("converged").get<bool>();
  m.loglik_trace = j.value("loglik_trace", std::vector<double>{});
  const auto K = static_cast<std::size_t>(m.K());
  if (m.means.size() != K || m.covariances.size() != K || static_cast<std::size_t>(m.weights.size()) != K) {
    throw InputError("inconsistent GMM JSON");
  }
}

void to_json(json& j, const AskkmModel& m) {
  json history = json::array();
  for (const auto& r : m.history) {
    history.push_back({{"K", r.K},
                       {"criterion", r.criterion},
                       {"objective_original", r.objective_original},
                       {"objective_unbiased", r.objective_unbiased}});
  }
  j = {{"final_model", m.final_model},
       {"label_map", m.label_map},
       {"history", std::move(history)},
       {"rounds", m.rounds},
       {"terminated_by", to_string(m.terminated_by)}};
}

void from_json(const json& j, AskkmModel& m) {
  m.final_model = j.at("final_model").get<ClusterModel>();
  m.label_map = j.at("label_map").get<LabelMap>();
  m.history.clear();
  for (const auto& r : j.at("history")) {
    m.history.push_back({r.at("K").get<int>(), r.at("criterion").get<CriterionReport>(),
                         r.at("objective_original").get<double>(),
                         r.at("objective_unbiased").get<double>()});
  }
  m.rounds = j.at("rounds").get<int>();
  m.terminated_by = termination_from_string(j.at("terminated_by").get<std::string>());
}

void to_json(json& j, const GenSpec& s) {
  j = {{"kind", to_string(s.kind)},
       {"n_classes", s.n_classes},
       {"dim", s.dim},
       {"subclusters_per_class", s.subclusters_per_class},
       {"class_separation", s.class_separation},
       {"subcluster_separation", s.subcluster_separation},
       {"n_labeled_per_class", s.n_labeled_per_class},
       {"n_unlabeled", s.n_unlabeled},
       {"seed", s.seed}};
}

void to_json(json& j, const GroundTruth& t) {
  json centers = json::array();
  for (const auto& c : t.centers) centers.push_back(vec_to_json(c));
  j = {{"centers", std::move(centers)},
       {"center_class", t.center_class},
       {"point_label", t.point_label},
       {"point_component", t.point_component}};
}

void to_json(json& j, const LearningCurve& c) {
  json series = json::object();
  for (const auto& name : c.methods) {
    const auto& s = c.series.at(name);
    series[name] = {{"mean", s.mean}, {"std", s.std}};
  }
  json cells = json::array();
  for (const auto& cell : c.cells) {
    cells.push_back({{"method", cell.method},
                     {"n_unlabeled", cell.n_unlabeled},
                     {"seed", cell.seed_index},
                     {"metric", cell.metric}});
  }
  j = {{"n_unlabeled_grid", c.n_unlabeled_grid},
       {"methods", c.methods},
       {"n_seeds", c.n_seeds},
       {"metric", c.metric},
       {"series", std::move(series)},
       {"cells", std::move(cells)}};
}

std::string curve_to_csv(const LearningCurve& c) {
  std::ostringstream os;
  os << "method,n_unlabeled,seed,metric\n";
  char buf[32];
  for (const auto& cell : c.cells) {
    std::snprintf(buf, sizeof buf, "%.17g", cell.metric);
    os << cell.method << ',' << cell.n_unlabeled << ',' << cell.seed_index << ',' << buf << '\n';
  }
  return os.str();
}

}  // namespace mssl
