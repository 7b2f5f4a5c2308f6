#include "mssl/evalx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "mssl/parallel.hpp"
#include "mssl/rng.hpp"

namespace mssl {

std::array<double, 11> interpolated_precision(const RankedList& r) {
  if (r.scores.size() != r.relevance.size()) {
    throw InputError("scores and relevance differ in length");
  }
  if (r.scores.empty()) throw InputError("ranked list is empty");
  const auto n_relevant = std::count(r.relevance.begin(), r.relevance.end(), true);
  if (n_relevant == 0) throw UndefinedMetricError("average precision needs at least one relevant item");

  std::vector<std::size_t> order(r.scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return r.scores[a] > r.scores[b]; });

  std::vector<double> precision;
  std::vector<double> recall;
  precision.reserve(order.size());
  recall.reserve(order.size());
  long tp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (r.relevance[order[k]]) ++tp;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(n_relevant));
  }

  std::array<double, 11> interp{};
  for (int i = 0; i <= 10; ++i) {
    const double level = i / 10.0;
    double best = 0.0;
    for (std::size_t k = 0; k < precision.size(); ++k) {
      if (recall[k] >= level) best = std::max(best, precision[k]);
    }
    interp[static_cast<std::size_t>(i)] = best;
  }
  return interp;
}

double average_precision(const RankedList& r) {
  const auto interp = interpolated_precision(r);
  double sum = 0.0;
  for (double p : interp) sum += p;
  return sum / 11.0;
}

double mean_ap(std::span<const double> per_class_ap) {
  if (per_class_ap.empty()) throw InputError("mean_ap of an empty list");
  double sum = 0.0;
  for (double v : per_class_ap) sum += v;
  return sum / static_cast<double>(per_class_ap.size());
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size() || predicted.empty()) {
    throw InputError("accuracy needs equal-length, nonempty lists");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

Eigen::MatrixXd score_margins(const Eigen::MatrixXd& scores) {
  Eigen::MatrixXd out(scores.rows(), scores.cols());
  for (Index i = 0; i < scores.rows(); ++i) {
    for (Index c = 0; c < scores.cols(); ++c) {
      double other = -std::numeric_limits<double>::infinity();
      for (Index o = 0; o < scores.cols(); ++o) {
        if (o != c) other = std::max(other, scores(i, o));
      }
      out(i, c) = scores(i, c) - other;
    }
  }
  return out;
}

namespace {

bool is_kernel_method(const std::string& m) {
  return m == "original_sskkm" || m == "unbiased_sskkm" || m == "askkm";
}

void check_method(const std::string& m) {
  const auto& known = known_methods();
  if (std::find(known.begin(), known.end(), m) == known.end()) {
    throw InputError("unknown method '" + m + "'");
  }
}

struct KernelContext {
  KernelMatrix km;
  Eigen::MatrixXd test_rows;
  Eigen::VectorXd test_self;
};

std::vector<MethodOutput> run_methods(const std::vector<std::string>& methods, const Dataset& train,
                                      const FeatureMatrix& test, const MethodConfig& cfg) {
  for (const auto& m : methods) check_method(m);
  std::optional<KernelContext> ctx;
  std::vector<MethodOutput> outputs;
  for (const auto& method : methods) {
    MethodOutput out;
    if (is_kernel_method(method)) {
      if (!ctx) {
        const KernelSpec spec =
            resolve_kernel(cfg.kernel, train.features, derive_seed(cfg.seed, "kernel"));
        ctx = KernelContext{gram_matrix(train, spec), cross_kernel(test, train.features, spec),
                            self_kernel(test, spec)};
      }
      BatchPrediction pred;
      if (method == "askkm") {
        const AskkmModel m = fit_askkm(ctx->km, train, cfg.askkm);
        pred = predict(m, ctx->test_rows, ctx->test_self);
        out.final_K = m.final_model.K();
      } else {
        SolverOptions so = cfg.askkm.solver;
        so.weight = method == "original_sskkm" ? UnlabeledWeight::original()
                                               : UnlabeledWeight::unbiased();
        const ClusterModel m = fit_sskkm(ctx->km, train, LabelMap::identity(train), so);
        pred = predict_batch(m, ctx->test_rows, ctx->test_self);
        out.final_K = m.K();
      }
      out.predictions = std::move(pred.labels);
      out.ranking_scores = score_margins(pred.scores);
    } else {
      SemOptions so = cfg.sem;
      if (method == "original_sem") {
        so.solver.weight = UnlabeledWeight::original();
      } else if (method == "unbiased_sem") {
        so.solver.weight = UnlabeledWeight::unbiased();
      } else {
        so.solver.weight = UnlabeledWeight::custom(0.0);
      }
      const GmmModel m = fit_sem(train, so);
      SemPrediction pred = predict_sem(m, test);
      out.predictions = std::move(pred.labels);
      out.ranking_scores = std::move(pred.posteriors);
      out.final_K = m.K();
    }
    outputs.push_back(std::move(out));
  }
  return outputs;
}

}  // namespace

MethodOutput run_method(const std::string& method, const Dataset& train,
                        const FeatureMatrix& test, const MethodConfig& cfg) {
  return std::move(run_methods({method}, train, test, cfg).front());
}

std::uint64_t curve_seed(std::uint64_t base_seed, int seed_index) {
  return derive_seed(base_seed, "curve-seed-" + std::to_string(seed_index));
}

LearningCurve learning_curve(const GenSpec& scenario, const CurveOptions& opts) {
  check_spec(scenario);
  if (opts.methods.empty()) throw InputError("no methods requested");
  for (const auto& m : opts.methods) check_method(m);
  if (opts.grid.empty()) throw InputError("empty N_u grid");
  for (std::size_t g = 0; g < opts.grid.size(); ++g) {
    if (opts.grid[g] < 0 || (g > 0 && opts.grid[g] <= opts.grid[g - 1])) {
      throw InputError("N_u grid must be nonnegative and strictly increasing");
    }
  }
  if (opts.n_seeds < 1) throw InputError("n_seeds must be >= 1");
  if (opts.eval_size < scenario.n_classes) throw InputError("eval_size must cover every class");

  const bool use_ap = opts.metric == CurveMetric::ap ||
                      (opts.metric == CurveMetric::automatic && scenario.n_classes == 2);

  LearningCurve curve;
  curve.n_unlabeled_grid = opts.grid;
  curve.methods = opts.methods;
  curve.n_seeds = opts.n_seeds;
  curve.metric = use_ap ? "ap" : "accuracy";

  const Index n_grid = static_cast<Index>(opts.grid.size());
  const Index n_methods = static_cast<Index>(opts.methods.size());
  const Index n_cells = opts.n_seeds * n_grid;
  std::vector<double> values(static_cast<std::size_t>(n_cells * n_methods));

  parallel_for(n_cells, [&](Index begin, Index end) {
    for (Index cell = begin; cell < end; ++cell) {
      const int s = static_cast<int>(cell / n_grid);
      const auto g = static_cast<std::size_t>(cell % n_grid);
      GenSpec spec = scenario;
      spec.seed = curve_seed(opts.base_seed, s);
      spec.n_unlabeled = opts.grid[g];
      const Generated train = generate(spec);
      const Generated test = generate_holdout(spec, opts.eval_size);
      MethodConfig cfg = opts.method;
      cfg.seed = spec.seed;
      const auto outputs = run_methods(opts.methods, train.data, test.data.features, cfg);
      for (Index m = 0; m < n_methods; ++m) {
        const auto& out = outputs[static_cast<std::size_t>(m)];
        double metric = 0.0;
        if (use_ap) {
          RankedList list;
          for (Index i = 0; i < out.ranking_scores.rows(); ++i) {
            list.scores.push_back(out.ranking_scores(i, 1));
            list.relevance.push_back(test.data.labels[static_cast<std::size_t>(i)] == 1);
          }
          metric = average_precision(list);
        } else {
          metric = accuracy(out.predictions, test.data.labels);
        }
        values[static_cast<std::size_t>(cell * n_methods + m)] = metric;
      }
    }
  });

  for (int s = 0; s < opts.n_seeds; ++s) {
    for (Index g = 0; g < n_grid; ++g) {
      for (Index m = 0; m < n_methods; ++m) {
        const Index cell = s * n_grid + g;
        curve.cells.push_back({opts.methods[static_cast<std::size_t>(m)],
                               opts.grid[static_cast<std::size_t>(g)], s,
                               values[static_cast<std::size_t>(cell * n_methods + m)]});
      }
    }
  }
  for (Index m = 0; m < n_methods; ++m) {
    CurveSeries series;
    for (Index g = 0; g < n_grid; ++g) {
      double sum = 0.0;
      for (int s = 0; s < opts.n_seeds; ++s) {
        sum += values[static_cast<std::size_t>((s * n_grid + g) * n_methods + m)];
      }
      const double mean = sum / opts.n_seeds;
      double ss = 0.0;
      for (int s = 0; s < opts.n_seeds; ++s) {
        const double v = values[static_cast<std::size_t>((s * n_grid + g) * n_methods + m)];
        ss += (v - mean) * (v - mean);
      }
      series.mean.push_back(mean);
      series.std.push_back(opts.n_seeds > 1 ? std::sqrt(ss / (opts.n_seeds - 1)) : 0.0);
    }
    curve.series[opts.methods[static_cast<std::size_t>(m)]] = std::move(series);
  }
  return curve;
}

}  // namespace mssl
