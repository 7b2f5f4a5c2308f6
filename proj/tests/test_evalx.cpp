#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "helpers.hpp"
#include "mssl/evalx.hpp"
#include "mssl/parallel.hpp"
#include "oracles.hpp"

using namespace mssl;

namespace {

RankedList random_list(Rng& rng, std::size_t n) {
  std::uniform_int_distribution<int> level(0, 4);  // coarse scores so ties are common
  std::bernoulli_distribution rel(0.4);
  RankedList r;
  for (std::size_t i = 0; i < n; ++i) {
    r.scores.push_back(level(rng) * 0.25);
    r.relevance.push_back(rel(rng));
  }
  if (std::none_of(r.relevance.begin(), r.relevance.end(), [](bool b) { return b; })) {
    r.relevance[n - 1] = true;
  }
  return r;
}

CurveOptions small_curve(std::vector<std::string> methods, std::vector<int> grid) {
  CurveOptions o;
  o.methods = std::move(methods);
  o.grid = std::move(grid);
  o.n_seeds = 3;
  o.eval_size = 60;
  o.base_seed = 11;
  return o;
}

}  // namespace

TEST_CASE("worked three-item example") {
  const RankedList r{{0.9, 0.8, 0.7}, {true, false, true}};
  CHECK(average_precision(r) == doctest::Approx((6.0 + 5.0 * (2.0 / 3.0)) / 11.0).epsilon(1e-15));
  const auto p = interpolated_precision(r);
  CHECK(p[5] == 1.0);
  CHECK(p[6] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("perfect ranking") {
  const RankedList r{{5, 4, 3, 2, 1}, {true, true, false, false, false}};
  CHECK(average_precision(r) == 1.0);
}

TEST_CASE("AP matches the brute-force oracle exactly") {
  Rng rng(2024);
  std::uniform_int_distribution<std::size_t> len(1, 10);
  for (int t = 0; t < 1000; ++t) {
    const RankedList r = random_list(rng, len(rng));
    CHECK(average_precision(r) == oracle::average_precision(r.scores, r.relevance));
  }
}

TEST_CASE("AP is invariant under strictly increasing transforms") {
  Rng rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int t = 0; t < 100; ++t) {
    RankedList r = random_list(rng, 8);
    for (double& s : r.scores) s = u(rng);
    RankedList moved = r;
    for (double& s : moved.scores) s = std::exp(2.0 * s) + 7.0;
    CHECK(average_precision(r) == average_precision(moved));
  }
}

TEST_CASE("AP errors") {
  CHECK_THROWS_AS(average_precision(RankedList{{1, 2}, {false, false}}), UndefinedMetricError);
  CHECK_THROWS_AS(average_precision(RankedList{{}, {}}), InputError);
  CHECK_THROWS_AS(average_precision(RankedList{{1}, {true, false}}), InputError);
}

TEST_CASE("mean_ap and accuracy") {
  CHECK(mean_ap(std::vector<double>{0.5}) == 0.5);
  CHECK(mean_ap(std::vector<double>{0.2, 0.4, 0.6}) == doctest::Approx(0.4));
  CHECK(mean_ap(std::vector<double>{0.6, 0.2, 0.4}) == doctest::Approx(0.4));
  CHECK_THROWS_AS(mean_ap(std::vector<double>{}), InputError);
  CHECK(accuracy(std::vector<int>{0, 1, 1, 0}, std::vector<int>{0, 1, 0, 0}) == 0.75);
  CHECK_THROWS_AS(accuracy(std::vector<int>{0}, std::vector<int>{0, 1}), InputError);
}

TEST_CASE("score margins") {
  Eigen::MatrixXd s(2, 3);
  s << 1, 4, 2, -1, -1, -3;
  const auto m = score_margins(s);
  CHECK(m(0, 0) == -3.0);
  CHECK(m(0, 1) == 2.0);
  CHECK(m(0, 2) == -2.0);
  CHECK(m(1, 0) == 0.0);
  CHECK(m(1, 2) == -2.0);
}

TEST_CASE("learning curve shape and determinism") {
  const auto opts = small_curve({"original_sem", "unbiased_sem", "askkm"}, {0, 30, 90});
  GenSpec scenario = misspecified_scenario();
  const auto a = learning_curve(scenario, opts);
  CHECK(a.metric == "ap");
  CHECK(a.cells.size() == 3u * 3u * 3u);
  for (const auto& m : opts.methods) {
    REQUIRE(a.series.count(m) == 1);
    CHECK(a.series.at(m).mean.size() == 3u);
    for (double s : a.series.at(m).std) CHECK(s >= 0.0);
  }
  set_worker_count(1);
  const auto b = learning_curve(scenario, opts);
  set_worker_count(0);
  REQUIRE(b.cells.size() == a.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    CHECK(a.cells[i].method == b.cells[i].method);
    CHECK(a.cells[i].metric == b.cells[i].metric);
  }
}

TEST_CASE("without unlabeled data each family collapses to its supervised fit") {
  const auto opts = small_curve({"supervised", "original_sem", "unbiased_sem", "original_sskkm",
                                 "unbiased_sskkm", "askkm"},
                                {0});
  const auto c = learning_curve(misspecified_scenario(), opts);
  for (int s = 0; s < opts.n_seeds; ++s) {
    const auto at = [&](int m) { return c.cells[static_cast<std::size_t>(s * 6 + m)].metric; };
    CHECK(std::abs(at(1) - at(0)) <= 1e-12);
    CHECK(std::abs(at(2) - at(0)) <= 1e-12);
    CHECK(std::abs(at(4) - at(3)) <= 1e-12);
    CHECK(std::abs(at(5) - at(3)) <= 1e-12);
  }
}

TEST_CASE("multiclass scenarios use accuracy") {
  GenSpec s = well_specified_scenario();
  s.n_classes = 3;
  auto opts = small_curve({"original_sem"}, {0, 20});
  const auto c = learning_curve(s, opts);
  CHECK(c.metric == "accuracy");
}

TEST_CASE("learning curve input errors") {
  const GenSpec s = misspecified_scenario();
  CHECK_THROWS_AS(learning_curve(s, small_curve({"bogus"}, {0})), InputError);
  CHECK_THROWS_AS(learning_curve(s, small_curve({"askkm"}, {50, 10})), InputError);
  CHECK_THROWS_AS(learning_curve(s, small_curve({}, {0})), InputError);
  CHECK_THROWS_AS(run_method("bogus", Dataset{}, FeatureMatrix{}, MethodConfig{}), InputError);
}
