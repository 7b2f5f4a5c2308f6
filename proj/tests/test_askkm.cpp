#include <doctest.h>

#include "helpers.hpp"
#include "mssl/askkm.hpp"
#include "mssl/datagen.hpp"
#include "mssl/rng.hpp"

using namespace mssl;

namespace {

struct Instance {
  Generated g;
  KernelMatrix km;
};

Instance make(GenSpec spec, std::uint64_t seed, int n_unlabeled) {
  spec.seed = seed;
  spec.n_unlabeled = n_unlabeled;
  Instance in{generate(spec), {}};
  in.km = gram_matrix(in.g.data,
                      resolve_kernel(KernelConfig{}, in.g.data.features, derive_seed(seed, "kernel")));
  return in;
}

void check_history(const AskkmModel& m, const AskkmOptions& o, int C) {
  REQUIRE(m.rounds == static_cast<int>(m.history.size()));
  REQUIRE(m.rounds >= 1);
  for (std::size_t r = 1; r < m.history.size(); ++r) CHECK(m.history[r].K > m.history[r - 1].K);
  CHECK(m.history.front().K == C);
  CHECK(m.final_model.K() == m.history.back().K);
  CHECK(m.label_map.n_fine() == m.final_model.K());
  const int k_max = o.k_max.value_or(10 * C);
  CHECK(m.rounds <= (k_max - C) + 1 + o.stall_rounds);
  if (m.terminated_by == Termination::converged) CHECK_FALSE(m.history.back().criterion.misspecified);
}

}  // namespace

TEST_CASE("well-specified data stops after one round") {
  int single = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto in = make(well_specified_scenario(), seed, 200);
    const AskkmOptions o;
    const auto m = fit_askkm(in.km, in.g.data, o);
    check_history(m, o, 2);
    if (m.rounds == 1) {
      ++single;
      CHECK(m.terminated_by == Termination::converged);
      CHECK(m.final_model.K() == 2);
    }
  }
  CHECK(single >= 18);
}

TEST_CASE("history invariants on misspecified data") {
  int grew = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto in = make(misspecified_scenario(), seed, 400);
    AskkmOptions o;
    o.stall_rounds = 1 + static_cast<int>(seed % 3);
    const auto m = fit_askkm(in.km, in.g.data, o);
    check_history(m, o, 2);
    grew += m.final_model.K() > 2;
  }
  CHECK(grew >= 1);
}

TEST_CASE("no growth headroom means a single criterion evaluation") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto in = make(misspecified_scenario(), seed, 400);
    AskkmOptions o;
    o.k_max = 2;
    const auto m = fit_askkm(in.km, in.g.data, o);
    CHECK(m.rounds == 1);
    CHECK((m.terminated_by == Termination::converged ||
           m.terminated_by == Termination::growth_capped));
  }
}

TEST_CASE("without unlabeled data ASKKM is supervised kernel k-means") {
  auto in = make(misspecified_scenario(), 4, 0);
  const auto m = fit_askkm(in.km, in.g.data, AskkmOptions{});
  CHECK(m.rounds == 1);
  CHECK(m.history[0].criterion.disagreements == 0);
  CHECK(m.history[0].objective_original == m.history[0].objective_unbiased);
  CHECK(m.final_model.K() == 2);
}

TEST_CASE("prediction delegates to the final model") {
  auto in = make(misspecified_scenario(), 2, 300);
  const auto m = fit_askkm(in.km, in.g.data, AskkmOptions{});
  const auto& d = in.g.data;
  const auto pred = predict(m, in.km.values, in.km.values.diagonal());
  const auto direct = predict_batch(m.final_model, in.km.values, in.km.values.diagonal());
  CHECK(pred.labels == direct.labels);
  for (Index i = 0; i < d.n_points(); ++i) {
    Index best = 0;
    pred.scores.row(i).maxCoeff(&best);
    CHECK(pred.labels[static_cast<std::size_t>(i)] == static_cast<int>(best));
  }
  CHECK_THROWS_AS(predict(m, Eigen::MatrixXd::Zero(1, 3), Eigen::VectorXd::Zero(1)), InputError);
}

TEST_CASE("query at a training point takes that point's class") {
  auto in = make(well_specified_scenario(), 6, 100);
  const auto m = fit_askkm(in.km, in.g.data, AskkmOptions{});
  const auto& d = in.g.data;
  const Eigen::MatrixXd row = in.km.values.row(d.labeled_idx[0]);
  const Eigen::VectorXd self = Eigen::VectorXd::Constant(1, in.km.values(0, 0));
  const auto pred = predict(m, row, self);
  CHECK(pred.labels[0] == d.labels[0]);
}

TEST_CASE("ASKKM is deterministic") {
  auto in = make(misspecified_scenario(), 8, 500);
  const auto a = fit_askkm(in.km, in.g.data, AskkmOptions{});
  const auto b = fit_askkm(in.km, in.g.data, AskkmOptions{});
  CHECK(a.final_model.assignments == b.final_model.assignments);
  CHECK(a.label_map == b.label_map);
  CHECK(a.rounds == b.rounds);
}

TEST_CASE("option checks") {
  auto in = make(well_specified_scenario(), 1, 10);
  AskkmOptions o;
  o.k_max = 1;
  CHECK_THROWS_AS(fit_askkm(in.km, in.g.data, o), InputError);
  o = {};
  o.stall_rounds = 0;
  CHECK_THROWS_AS(fit_askkm(in.km, in.g.data, o), InputError);
  CHECK(termination_from_string(to_string(Termination::no_improvement)) == Termination::no_improvement);
}
