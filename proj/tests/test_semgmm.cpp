#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "mssl/datagen.hpp"
#include "mssl/parallel.hpp"
#include "mssl/semgmm.hpp"
#include "oracles.hpp"

using namespace mssl;

namespace {

GmmModel model_1d(std::vector<double> mus, std::vector<double> vars, std::vector<double> w,
                  std::vector<int> comp_map, int C) {
  GmmModel m;
  m.n_classes = C;
  m.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Index>(w.size()));
  for (std::size_t k = 0; k < mus.size(); ++k) {
    m.means.push_back(Eigen::VectorXd::Constant(1, mus[k]));
    m.covariances.push_back(Eigen::MatrixXd::Constant(1, 1, vars[k]));
  }
  m.comp_map = std::move(comp_map);
  return m;
}

GmmModel random_2d_model(Rng& rng, int K, int C, CovarianceMode mode) {
  std::normal_distribution<double> normal(0.0, 2.0);
  std::uniform_real_distribution<double> unif(0.3, 2.0);
  GmmModel m;
  m.n_classes = C;
  m.covariance_mode = mode;
  m.weights.resize(K);
  for (int k = 0; k < K; ++k) {
    m.weights(k) = unif(rng);
    m.means.push_back(Eigen::Vector2d(normal(rng), normal(rng)));
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    cov(0, 0) = unif(rng);
    cov(1, 1) = unif(rng);
    if (mode == CovarianceMode::full) cov(0, 1) = cov(1, 0) = 0.4 * std::sqrt(cov(0, 0) * cov(1, 1));
    m.covariances.push_back(cov);
    m.comp_map.push_back(k % C);
  }
  m.weights /= m.weights.sum();
  return m;
}

std::vector<double> vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::vector<std::vector<double>> mat(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> out;
  for (Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r;
    for (Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    out.push_back(r);
  }
  return out;
}

SemOptions sem_with(UnlabeledWeight w) {
  SemOptions o;
  o.solver.weight = w;
  return o;
}

}  // namespace

TEST_CASE("density at a component mean") {
  GmmModel m;
  m.n_classes = 2;
  m.weights = Eigen::Vector2d(0.3, 0.7);
  m.means = {Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(-4, 0, 0)};
  m.covariances = {Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Identity(3, 3)};
  m.comp_map = {0, 1};
  const std::vector<double> x = {1, 2, 3};
  CHECK(log_joint(m, x, 0) == doctest::Approx(std::log(0.3) - 1.5 * std::log(2.0 * std::numbers::pi)));

  Dataset d;
  d.n_classes = 2;
  d.features.resize(2, 3);
  d.features << 1, 2, 3, -4, 0, 0;
  d.labeled_idx = {0, 1};
  d.labels = {0, 1};
  const double expected = std::log(0.3) + std::log(0.7) - 3.0 * std::log(2.0 * std::numbers::pi);
  CHECK(loglik(m, d, 0.5) == doctest::Approx(expected));
  CHECK_THROWS_AS(loglik(m, testing::blobs(2, 3, 1, 2, 1.0, 0), 1.0), InputError);
}

TEST_CASE("densities match the textbook formula") {
  Rng rng(3);
  std::normal_distribution<double> normal(0.0, 3.0);
  for (auto mode : {CovarianceMode::diagonal, CovarianceMode::full}) {
    for (int trial = 0; trial < 20; ++trial) {
      const GmmModel m = random_2d_model(rng, 4, 2, mode);
      for (int q = 0; q < 100; ++q) {
        const std::vector<double> x = {normal(rng), normal(rng)};
        std::vector<double> joint(2, 0.0);
        for (int k = 0; k < m.K(); ++k) {
          joint[static_cast<std::size_t>(m.comp_map[static_cast<std::size_t>(k)])] +=
              m.weights(k) * oracle::gaussian_density(x, vec(m.means[static_cast<std::size_t>(k)]),
                                                      mat(m.covariances[static_cast<std::size_t>(k)]));
        }
        CHECK(std::exp(log_joint(m, x, 0)) == doctest::Approx(joint[0]).epsilon(1e-9));
        CHECK(std::exp(log_joint(m, x, 1)) == doctest::Approx(joint[1]).epsilon(1e-9));
        const int expected = joint[1] > joint[0] ? 1 : 0;
        CHECK(bayes_classify(m, x) == expected);
        const auto post = class_posteriors(m, x);
        CHECK(post.sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(post(0) == doctest::Approx(joint[0] / (joint[0] + joint[1])).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("symmetric classification and tie-break") {
  const GmmModel m = model_1d({-3, 3}, {1, 1}, {0.5, 0.5}, {0, 1}, 2);
  CHECK(bayes_classify(m, std::vector<double>{-3.0}) == 0);
  CHECK(bayes_classify(m, std::vector<double>{3.0}) == 1);
  CHECK(bayes_classify(m, std::vector<double>{0.0}) == 0);
  const auto mid = class_posteriors(m, std::vector<double>{0.0});
  CHECK(mid(0) == doctest::Approx(0.5));
  CHECK(mid(1) == doctest::Approx(0.5));
  // Density ratio exp(-0.5 * (1 - 49)) = exp(24) at x = -4.
  CHECK(class_posteriors(m, std::vector<double>{-4.0})(0) > 0.99);
  CHECK_THROWS_AS(bayes_classify(m, std::vector<double>{std::nan("")}), InputError);
  CHECK_THROWS_AS(bayes_classify(m, std::vector<double>{1.0, 2.0}), InputError);
}

TEST_CASE("posteriors sum to one") {
  Rng rng(9);
  const GmmModel m = random_2d_model(rng, 5, 3, CovarianceMode::diagonal);
  const FeatureMatrix q = testing::random_features(1000, 2, 4, 5.0);
  const auto pred = predict_sem(m, q);
  for (Index i = 0; i < q.rows(); ++i) {
    CHECK(std::abs(pred.posteriors.row(i).sum() - 1.0) <= 1e-12);
    Index best = 0;
    pred.posteriors.row(i).maxCoeff(&best);
    CHECK(pred.labels[static_cast<std::size_t>(i)] == static_cast<int>(best));
  }
}

TEST_CASE("supervised fit gives per-class sample means") {
  const Dataset d = testing::blobs(3, 15, 15, 2, 3.0, 12);
  const GmmModel m = fit_sem(d, sem_with(UnlabeledWeight::custom(0.0)));
  for (int c = 0; c < 3; ++c) {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (int i = 0; i < 15; ++i) mean += d.features.row(c * 15 + i).transpose();
    mean /= 15.0;
    CHECK((m.means[static_cast<std::size_t>(c)] - mean).norm() < 1e-12);
    CHECK(m.weights(c) == doctest::Approx(1.0 / 3.0));
  }
}

TEST_CASE("N_u = 0 makes original and unbiased identical") {
  Dataset d = testing::blobs(2, 20, 20, 2, 2.0, 6);
  for (auto cov : {CovarianceMode::diagonal, CovarianceMode::full}) {
    SemOptions a = sem_with(UnlabeledWeight::original());
    SemOptions b = sem_with(UnlabeledWeight::unbiased());
    a.covariance = b.covariance = cov;
    const auto ma = fit_sem(d, std::vector<int>{0, 1, 0}, a);
    const auto mb = fit_sem(d, std::vector<int>{0, 1, 0}, b);
    CHECK(ma.weights == mb.weights);
    CHECK(ma.means == mb.means);
    CHECK(ma.covariances == mb.covariances);
    CHECK(ma.loglik_trace == mb.loglik_trace);
  }
}

TEST_CASE("EM objective is non-decreasing and weights stay a distribution") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    GenSpec spec = misspecified_scenario();
    spec.seed = seed;
    spec.n_unlabeled = 200;
    const auto g = generate(spec);
    SemOptions o = sem_with(seed % 2 ? UnlabeledWeight::original() : UnlabeledWeight::unbiased());
    o.covariance = seed % 3 ? CovarianceMode::diagonal : CovarianceMode::full;
    o.solver.seed = seed;
    const auto m = fit_sem(g.data, std::vector<int>{0, 1, 0, 1}, o);
    for (std::size_t t = 1; t < m.loglik_trace.size(); ++t) {
      const double prev = m.loglik_trace[t - 1];
      CHECK(m.loglik_trace[t] >= prev - 1e-8 * std::abs(prev));
    }
    CHECK(std::abs(m.weights.sum() - 1.0) <= 1e-12);
    CHECK((m.weights.array() >= 0.0).all());
    CHECK(loglik(m, g.data, m.unlabeled_weight) == doctest::Approx(m.final_loglik).epsilon(1e-12));
  }
}

TEST_CASE("well-specified 1-D recovery") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Dataset d;
    d.n_classes = 2;
    d.features.resize(220, 1);
    for (Index i = 0; i < 220; ++i) {
      const int c = i < 20 ? static_cast<int>(i / 10) : static_cast<int>(i % 2);
      d.features(i, 0) = (c == 0 ? -3.0 : 3.0) + normal(rng);
      if (i < 20) {
        d.labeled_idx.push_back(i);
        d.labels.push_back(c);
      } else {
        d.unlabeled_idx.push_back(i);
      }
    }
    const auto m = fit_sem(d, sem_with(UnlabeledWeight::original()));
    CHECK(std::abs(m.means[0](0) + 3.0) < 0.5);
    CHECK(std::abs(m.means[1](0) - 3.0) < 0.5);
  }
}

TEST_CASE("covariance floor keeps degenerate fits finite") {
  Dataset d;
  d.n_classes = 2;
  d.features.resize(6, 2);
  d.features << 0, 0, 0, 0, 0, 1, 5, 5, 5, 5, 5, 6;
  d.labeled_idx = {0, 1, 3, 4};
  d.labels = {0, 0, 1, 1};
  d.unlabeled_idx = {2, 5};
  const auto m = fit_sem(d, sem_with(UnlabeledWeight::original()));
  for (const auto& c : m.covariances) CHECK(c.diagonal().minCoeff() > 0.0);
  CHECK(std::isfinite(m.final_loglik));
}

TEST_CASE("fit_sem input errors") {
  const Dataset d = testing::blobs(3, 5, 2, 2, 1.0, 1);
  CHECK_THROWS_AS(fit_sem(d, std::vector<int>{0, 1}, SemOptions{}), InputError);
  CHECK_THROWS_AS(fit_sem(d, std::vector<int>{0, 1, 1}, SemOptions{}), InputError);
  CHECK_THROWS_AS(covariance_mode_from_string("spherical"), InputError);
}

TEST_CASE("unsupervised endpoint scores every point by its marginal") {
  const Dataset d = testing::blobs(2, 30, 30, 2, 4.0, 2);
  SemOptions o = sem_with(UnlabeledWeight::original());
  o.ignore_labels = true;
  const auto m = fit_sem(d, o);
  double marginal = 0.0;
  for (Index i = 0; i < d.n_points(); ++i) {
    marginal += log_marginal(m, std::span<const double>(d.features.row(i).data(), 2));
  }
  CHECK(m.final_loglik == doctest::Approx(marginal).epsilon(1e-10));
}

TEST_CASE("kl_mc") {
  Rng rng(1);
  const GmmModel a = random_2d_model(rng, 4, 2, CovarianceMode::full);

  SUBCASE("identical models") {
    const auto e = kl_mc(a, a, 5000, 3);
    CHECK(e.value == 0.0);
    CHECK(e.raw_mean == 0.0);
  }
  SUBCASE("closed form for unit gaussians") {
    const GmmModel p = model_1d({0}, {1}, {1}, {0}, 1);
    const GmmModel q = model_1d({1}, {1}, {1}, {0}, 1);
    const auto e = kl_mc(p, q, 100000, 42);
    CHECK(std::abs(e.value - 0.5) <= 3.0 * e.std_error);
    CHECK(e.n_samples == 100000);
  }
  SUBCASE("deterministic") {
    const GmmModel b = random_2d_model(rng, 3, 2, CovarianceMode::diagonal);
    const auto e1 = kl_mc(a, b, 2000, 77);
    const auto e2 = kl_mc(a, b, 2000, 77);
    CHECK(e1.raw_mean == e2.raw_mean);
    CHECK(e1.std_error == e2.std_error);
    CHECK(e1.value >= 0.0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(kl_mc(a, a, 0, 1), InputError);
    CHECK_THROWS_AS(kl_mc(a, model_1d({0}, {1}, {1}, {0}, 2), 10, 1), InputError);
  }
}

TEST_CASE("fit is independent of worker count") {
  GenSpec spec = misspecified_scenario();
  spec.n_unlabeled = 500;
  const auto g = generate(spec);
  set_worker_count(1);
  const auto a = fit_sem(g.data, sem_with(UnlabeledWeight::original()));
  set_worker_count(3);
  const auto b = fit_sem(g.data, sem_with(UnlabeledWeight::original()));
  set_worker_count(0);
  CHECK(a.loglik_trace == b.loglik_trace);
  CHECK(a.means == b.means);
}
