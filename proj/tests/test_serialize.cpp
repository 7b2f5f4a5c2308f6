#include <doctest.h>

#include "helpers.hpp"
#include "mssl/serialize.hpp"

using namespace mssl;

TEST_CASE("cluster model round trip") {
  const Dataset d = testing::blobs(2, 20, 4, 2, 3.0, 1);
  const auto km = gram_matrix(d, KernelSpec::generalized_rbf(0.3, Distance::manhattan));
  SolverOptions o;
  o.weight = UnlabeledWeight::unbiased();
  const ClusterModel m = fit_sskkm(km, d, LabelMap::identity(d), o);
  const ClusterModel back = json(m).get<ClusterModel>();
  CHECK(back.assignments == m.assignments);
  CHECK(back.label_map == m.label_map);
  CHECK(back.kernel_spec == m.kernel_spec);
  CHECK(back.unlabeled_weight == m.unlabeled_weight);
  CHECK(back.objective == m.objective);
  CHECK(back.cluster_self == m.cluster_self);
  CHECK(json(back).dump() == json(m).dump());

  json broken = m;
  broken["assignments"].erase(broken["assignments"].begin());
  CHECK_THROWS(broken.get<ClusterModel>());
}

TEST_CASE("gmm round trip preserves predictions") {
  const Dataset d = testing::blobs(3, 20, 5, 2, 3.0, 2);
  SemOptions o;
  o.covariance = CovarianceMode::full;
  const GmmModel m = fit_sem(d, o);
  const GmmModel back = json(m).get<GmmModel>();
  CHECK(back.means == m.means);
  CHECK(back.covariances == m.covariances);
  CHECK(back.weights == m.weights);
  CHECK(back.comp_map == m.comp_map);
  const auto q = testing::random_features(50, 2, 3, 4.0);
  CHECK(predict_sem(back, q).posteriors == predict_sem(m, q).posteriors);
}

TEST_CASE("askkm and criterion round trip") {
  GenSpec s = misspecified_scenario();
  s.n_unlabeled = 200;
  const auto g = generate(s);
  const auto km = gram_matrix(g.data, KernelSpec::generalized_rbf(0.2, Distance::euclidean));
  const AskkmModel m = fit_askkm(km, g.data, AskkmOptions{});
  const json j = m;
  const AskkmModel back = j.get<AskkmModel>();
  CHECK(back.rounds == m.rounds);
  CHECK(back.terminated_by == m.terminated_by);
  CHECK(back.label_map == m.label_map);
  REQUIRE(back.history.size() == m.history.size());
  CHECK(back.history.back().criterion.disagreements == m.history.back().criterion.disagreements);
  CHECK(json(back).dump() == j.dump());

  CriterionReport r = disagreement_criterion(std::vector<int>{0, 1, 1}, std::vector<int>{1, 1, 0}, 1);
  r.kl_gap = KlEstimate{0.25, 0.25, 0.01, 100, 9};
  const auto rb = json(r).get<CriterionReport>();
  CHECK(rb.misspecified);
  REQUIRE(rb.kl_gap.has_value());
  CHECK(rb.kl_gap->std_error == 0.01);
  CHECK(rb.disagreeing_points.size() == 2u);
}

TEST_CASE("matrix and curve output") {
  const FeatureMatrix x = testing::random_features(4, 3, 7);
  CHECK(matrix_from_json(matrix_to_json(x)) == x);

  LearningCurve c;
  c.n_unlabeled_grid = {0};
  c.methods = {"askkm"};
  c.n_seeds = 1;
  c.metric = "ap";
  c.series["askkm"] = {{0.5}, {0.0}};
  c.cells = {{"askkm", 0, 0, 0.1}};
  CHECK(curve_to_csv(c) == "method,n_unlabeled,seed,metric\naskkm,0,0,0.10000000000000001\n");
  const json j = c;
  CHECK(j.at("series").at("askkm").at("mean")[0] == 0.5);
}
