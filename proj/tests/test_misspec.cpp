#include <doctest.h>

#include <random>
#include <set>

#include "mssl/misspec.hpp"
#include "mssl/rng.hpp"

using namespace mssl;

namespace {

LabelMap identity_map(const std::vector<int>& labels, int C) {
  LabelMap lm;
  for (int c = 0; c < C; ++c) lm.fine_to_class.push_back(c);
  lm.fine_of_point = labels;
  return lm;
}

}  // namespace

TEST_CASE("criterion counts disagreements") {
  const std::vector<int> a = {0, 1, 1, 0};
  const auto same = disagreement_criterion(a, a, 0);
  CHECK(same.disagreements == 0);
  CHECK_FALSE(same.misspecified);

  std::vector<int> o(20, 0);
  std::vector<int> u(20, 0);
  u[3] = u[7] = u[19] = 1;
  const auto r = disagreement_criterion(o, u, 1);
  CHECK(r.disagreements == 3);
  CHECK(r.misspecified);
  REQUIRE(r.disagreeing_points.size() == 3);
  CHECK(r.disagreeing_points[0].position == 3);
  CHECK(r.disagreeing_points[2].position == 19);
  CHECK(r.disagreeing_points[1].pred_unbiased == 1);

  CHECK_FALSE(disagreement_criterion(o, u, 3).misspecified);
  CHECK_THROWS_AS(disagreement_criterion(o, std::vector<int>(19, 0), 1), InputError);
}

TEST_CASE("criterion reports dataset rows when given") {
  const std::vector<int> o = {0, 1};
  const std::vector<int> u = {1, 1};
  const std::vector<Index> rows = {40, 41};
  const auto r = disagreement_criterion(o, u, 0, rows);
  REQUIRE(r.disagreements == 1);
  CHECK(r.disagreeing_points[0].position == 0);
  CHECK(r.disagreeing_points[0].point == 40);
}

TEST_CASE("criterion matches a recount and is symmetric") {
  Rng rng(5);
  std::uniform_int_distribution<int> cls(0, 2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> a(37), b(37);
    for (auto& v : a) v = cls(rng);
    for (auto& v : b) v = cls(rng);
    int count = 0;
    for (std::size_t i = 0; i < a.size(); ++i) count += a[i] != b[i];
    const auto r1 = disagreement_criterion(a, b, 2);
    const auto r2 = disagreement_criterion(b, a, 2);
    CHECK(r1.disagreements == count);
    CHECK(r2.disagreements == count);
    CHECK(r1.misspecified == (count > 2));
    CHECK(r1.misspecified == r2.misspecified);
  }
}

TEST_CASE("default threshold") {
  CHECK(default_threshold(20) == 1);
  CHECK(default_threshold(100) == 5);
  CHECK(default_threshold(1) == 1);
  CHECK(default_threshold(21) == 2);
  CHECK_THROWS_AS(default_threshold(0), InputError);
}

TEST_CASE("modify_structure rejects a clean report") {
  const std::vector<int> y = {0, 1};
  const auto lm = identity_map(y, 2);
  const auto r = disagreement_criterion(y, y, 0);
  CHECK_THROWS_AS(modify_structure(lm, r, y, y, 2), InputError);
}

TEST_CASE("single disagreement pair adds one fine label") {
  const std::vector<int> y = {0, 0, 0, 1, 1};
  const std::vector<int> orig = {0, 0, 0, 1, 1};
  const std::vector<int> unb = {0, 1, 1, 1, 1};
  const auto lm = identity_map(y, 2);
  const auto r = disagreement_criterion(orig, unb, 1);
  const auto ch = modify_structure(lm, r, unb, y, 2);
  REQUIRE(ch.status == GrowthStatus::grown);
  CHECK(ch.label_map.n_fine() == 3);
  CHECK(ch.label_map.fine_to_class[2] == 1);
  CHECK(ch.label_map.fine_of_point == std::vector<int>{0, 2, 2, 1, 1});
  CHECK(ch.added == 1);
}

TEST_CASE("distinct pairs each get a fine label") {
  const std::vector<int> y = {0, 1, 0, 0, 1};
  const std::vector<int> orig = {0, 1, 0, 0, 1};
  const std::vector<int> unb = {1, 0, 1, 0, 1};
  const auto lm = identity_map(y, 2);
  const auto r = disagreement_criterion(orig, unb, 1);
  const auto ch = modify_structure(lm, r, unb, y, 2);
  REQUIRE(ch.status == GrowthStatus::grown);
  CHECK(ch.label_map.n_fine() == 4);
  CHECK(ch.label_map.fine_to_class == std::vector<int>{0, 1, 1, 0});

  ModifyOptions keep;
  keep.map_new_to_true_class = true;
  const auto alt = modify_structure(lm, r, unb, y, 2, keep);
  CHECK(alt.label_map.fine_to_class == std::vector<int>{0, 1, 0, 1});
}

TEST_CASE("growth past k_max is capped") {
  const std::vector<int> y = {0, 1, 0, 0, 1};
  const std::vector<int> unb = {1, 0, 1, 0, 1};
  const auto lm = identity_map(y, 2);
  const auto r = disagreement_criterion(y, unb, 1);
  ModifyOptions o;
  o.k_max = 3;
  const auto ch = modify_structure(lm, r, unb, y, 2, o);
  CHECK(ch.status == GrowthStatus::capped);
  CHECK(ch.label_map == lm);
}

TEST_CASE("modification invariants on random instances") {
  Rng rng(17);
  std::uniform_int_distribution<int> cls(0, 2);
  std::bernoulli_distribution flip(0.3);
  int grown = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<int> y(30);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 3);
    std::vector<int> orig = y;
    std::vector<int> unb = y;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (flip(rng)) unb[i] = cls(rng);
      if (flip(rng)) orig[i] = cls(rng);
    }
    const auto lm = identity_map(y, 3);
    const auto r = disagreement_criterion(orig, unb, 1);
    if (!r.misspecified) continue;
    const auto ch = modify_structure(lm, r, unb, y, 3);
    if (ch.status != GrowthStatus::grown) {
      CHECK(ch.label_map == lm);
      continue;
    }
    ++grown;
    const auto& next = ch.label_map;
    CHECK(next.n_fine() > lm.n_fine());
    CHECK_NOTHROW(check_label_map(next, 3, 30));

    std::set<std::pair<int, int>> pairs;
    for (const auto& dp : r.disagreeing_points) {
      pairs.insert({y[static_cast<std::size_t>(dp.position)], dp.pred_unbiased});
    }
    CHECK(ch.added == static_cast<int>(pairs.size()));

    std::vector<bool> disagree(30, false);
    for (const auto& dp : r.disagreeing_points) disagree[static_cast<std::size_t>(dp.position)] = true;
    for (std::size_t i = 0; i < 30; ++i) {
      const int cls_now = next.class_of_fine(next.fine_of_point[i]);
      CHECK(cls_now == (disagree[i] ? unb[i] : y[i]));
    }
  }
  CHECK(grown > 50);
}

TEST_CASE("label map checks") {
  LabelMap lm{{0, 1}, {0, 1, 1}};
  CHECK_NOTHROW(check_label_map(lm, 2, 3));
  CHECK_THROWS_AS(check_label_map(lm, 2, 4), StructuralError);
  CHECK_THROWS_AS(check_label_map(LabelMap{{0, 0}, {0, 1}}, 2, 2), StructuralError);
  CHECK_THROWS_AS(check_label_map(LabelMap{{0, 1, 1}, {0, 1}}, 2, 2), StructuralError);
  CHECK_THROWS_AS(check_label_map(LabelMap{{0}, {0}}, 2, 1), StructuralError);
}
