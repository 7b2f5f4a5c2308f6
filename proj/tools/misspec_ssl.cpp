// misspec_ssl: generate data, fit models, run the criterion, sweep learning
// curves and evaluate, writing JSON/CSV artifacts.
//
// Exit codes: 0 success, 2 usage/config error, 3 data or solver input error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mssl/askkm.hpp"
#include "mssl/datagen.hpp"
#include "mssl/evalx.hpp"
#include "mssl/kernels.hpp"
#include "mssl/misspec.hpp"
#include "mssl/rng.hpp"
#include "mssl/semgmm.hpp"
#include "mssl/serialize.hpp"
#include "mssl/sskkm.hpp"

namespace fs = std::filesystem;
using namespace mssl;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::vector<std::string> kFitMethods = {"original_sskkm", "unbiased_sskkm", "askkm",
                                              "original_sem",   "unbiased_sem",   "supervised_sem"};

std::string out_path(const std::string& dir, const std::string& name) {
  if (!fs::is_directory(dir)) throw UsageError("output directory does not exist: " + dir);
  return (fs::path(dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
  if (!out) throw UsageError("write failed: " + path);
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

// Options shared by commands that build a kernel.
struct KernelArgs {
  std::string kind = "generalized_rbf";
  std::string distance = "euclidean";
  std::optional<double> gamma;

  void add(CLI::App* cmd) {
    cmd->add_option("--kernel", kind, "linear, rbf or generalized_rbf")->capture_default_str();
    cmd->add_option("--distance", distance, "euclidean, manhattan or chi_square (generalized_rbf)")
        ->capture_default_str();
    cmd->add_option("--gamma", gamma, "kernel bandwidth; median heuristic when omitted");
  }

  KernelConfig config() const {
    KernelConfig cfg;
    cfg.kind = kernel_kind_from_string(kind);
    cfg.distance = distance_from_string(distance);
    cfg.gamma = gamma;
    return cfg;
  }
};

struct SolverArgs {
  int max_iter = SolverOptions{}.max_iter;
  double tol = SolverOptions{}.tol;
  std::string covariance = "diagonal";
  std::optional<int> threshold;
  std::optional<int> k_max;
  int stall_rounds = AskkmOptions{}.stall_rounds;
  bool map_new_to_true_class = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--max-iter", max_iter)->capture_default_str();
    cmd->add_option("--tol", tol, "objective-change stopping tolerance")->capture_default_str();
    cmd->add_option("--covariance", covariance, "diagonal or full (SEM)")->capture_default_str();
    cmd->add_option("--threshold", threshold, "criterion threshold; 5% of labeled points when omitted");
    cmd->add_option("--k-max", k_max, "ASKKM cluster cap; 10 per class when omitted");
    cmd->add_option("--stall-rounds", stall_rounds)->capture_default_str();
    cmd->add_flag("--map-new-to-true-class", map_new_to_true_class,
                  "map spawned clusters to the true class instead of the unbiased prediction");
  }

  SolverOptions solver(std::uint64_t seed) const {
    SolverOptions s;
    s.max_iter = max_iter;
    s.tol = tol;
    s.seed = seed;
    return s;
  }

  AskkmOptions askkm(std::uint64_t seed) const {
    AskkmOptions a;
    a.threshold = threshold;
    a.k_max = k_max;
    a.stall_rounds = stall_rounds;
    a.map_new_to_true_class = map_new_to_true_class;
    a.solver = solver(seed);
    return a;
  }

  SemOptions sem(std::uint64_t seed) const {
    SemOptions s;
    s.solver = solver(seed);
    s.covariance = covariance_mode_from_string(covariance);
    return s;
  }

  json echo() const {
    json j = {{"max_iter", max_iter},
              {"tol", tol},
              {"covariance", covariance},
              {"stall_rounds", stall_rounds},
              {"map_new_to_true_class", map_new_to_true_class}};
    j["threshold"] = threshold ? json(*threshold) : json("5%");
    j["k_max"] = k_max ? json(*k_max) : json("10C");
    return j;
  }
};

struct ScenarioArgs {
  std::string kind;
  std::optional<int> classes, dim, subclusters, labeled_per_class, unlabeled;
  std::optional<double> class_sep, subcluster_sep;

  void add(CLI::App* cmd, const std::string& default_kind) {
    kind = default_kind;
    cmd->add_option("--kind", kind, "well_specified or misspecified")->capture_default_str();
    cmd->add_option("--classes", classes, "number of classes");
    cmd->add_option("--dim", dim, "feature dimension");
    cmd->add_option("--subclusters", subclusters, "subclusters per class");
    cmd->add_option("--class-sep", class_sep, "distance between adjacent class centers");
    cmd->add_option("--subcluster-sep", subcluster_sep, "spacing of subclusters within a class");
    cmd->add_option("--labeled-per-class", labeled_per_class);
    cmd->add_option("--unlabeled", unlabeled, "unlabeled pool size");
  }

  GenSpec spec(std::uint64_t seed) const {
    GenSpec s = gen_kind_from_string(kind) == GenKind::misspecified ? misspecified_scenario()
                                                                      : well_specified_scenario();
    if (classes) s.n_classes = *classes;
    if (dim) s.dim = *dim;
    if (subclusters) s.subclusters_per_class = *subclusters;
    if (class_sep) s.class_separation = *class_sep;
    if (subcluster_sep) s.subcluster_separation = *subcluster_sep;
    if (labeled_per_class) s.n_labeled_per_class = *labeled_per_class;
    if (unlabeled) s.n_unlabeled = *unlabeled;
    s.seed = seed;
    check_spec(s);
    return s;
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// ---- gen -------------------------------------------------------------------

struct GenCmd {
  ScenarioArgs scenario;
  int test = 0;
  std::string out = ".";
  std::string prefix = "data";

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("gen", "generate a synthetic dataset and its ground truth");
    scenario.add(cmd, "well_specified");
    cmd->add_option("--test", test, "also write a held-out labeled set of this size");
    cmd->add_option("--out", out, "output directory")->capture_default_str();
    cmd->add_option("--prefix", prefix, "output file prefix")->capture_default_str();
  }

  int run(std::uint64_t seed) {
    const GenSpec spec = scenario.spec(seed);
    const std::string csv = out_path(out, prefix + ".csv");
    const std::string truth_path = out_path(out, prefix + "_truth.json");
    const Generated g = generate(spec);
    const auto names = default_class_names(spec.n_classes);
    write_csv(csv, g.data, names);
    json truth = {{"config", {{"command", "gen"}, {"seed", seed}, {"spec", spec}, {"test", test}}},
                  {"truth", g.truth}};
    write_json(truth_path, truth);
    if (test > 0) {
      write_csv(out_path(out, prefix + "_test.csv"), generate_holdout(spec, test).data, names);
    }
    std::cout << "N=" << g.data.n_points() << " N_l=" << g.data.n_labeled()
              << " N_u=" << g.data.n_unlabeled() << " C=" << spec.n_classes
              << " K_true=" << spec.n_classes * spec.subclusters_per_class << "\n";
    return 0;
  }
};

// ---- fit -------------------------------------------------------------------

struct FitCmd {
  std::string data;
  std::string method;
  std::string gram;
  std::string out = ".";
  std::string prefix;
  Index kl_samples = 50000;
  KernelArgs kernel;
  SolverArgs solver;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("fit", "fit one method and write the model and criterion");
    cmd->add_option("--data", data, "training CSV (unlabeled rows marked '?')")->required();
    cmd->add_option("--method", method, "original_sskkm, unbiased_sskkm, askkm, original_sem, "
                                        "unbiased_sem or supervised_sem")
        ->required();
    cmd->add_option("--gram", gram, "precomputed Gram CSV (with its .json sidecar)");
    cmd->add_option("--out", out, "output directory")->capture_default_str();
    cmd->add_option("--prefix", prefix, "output file prefix; the method name when omitted");
    cmd->add_option("--kl-samples", kl_samples, "Monte-Carlo samples for the SEM KL gap")
        ->capture_default_str();
    kernel.add(cmd);
    solver.add(cmd);
  }

  int run(std::uint64_t seed) {
    if (std::find(kFitMethods.begin(), kFitMethods.end(), method) == kFitMethods.end()) {
      throw UsageError("unknown method '" + method + "'");
    }
    const std::string pre = prefix.empty() ? method : prefix;
    const std::string model_path = out_path(out, pre + "_model.json");
    const std::string run_path = out_path(out, pre + "_run.json");
    const std::string crit_path = out_path(out, pre + "_criterion.json");

    const CsvData csv = load_csv(data);
    const Dataset& d = csv.data;
    require_valid(d);

    json run = {{"command", "fit"},     {"seed", seed},
                {"data", data},         {"method", method},
                {"solver", solver.echo()}};
    json model = {{"class_names", csv.class_names}};
    std::optional<CriterionReport> report;
    double weight = 1.0;

    if (method.ends_with("_sem")) {
      const SemOptions base = solver.sem(seed);
      auto fit = [&](UnlabeledWeight w) {
        SemOptions o = base;
        o.solver.weight = w;
        return fit_sem(d, o);
      };
      GmmModel m;
      if (method == "supervised_sem") {
        m = fit(UnlabeledWeight::custom(0.0));
      } else {
        const GmmModel orig = fit(UnlabeledWeight::original());
        const GmmModel unb = fit(UnlabeledWeight::unbiased());
        std::vector<int> po, pu;
        for (Index i : d.labeled_idx) {
          const auto row = std::span<const double>(d.features.row(i).data(),
                                                   static_cast<std::size_t>(d.dim()));
          po.push_back(bayes_classify(orig, row));
          pu.push_back(bayes_classify(unb, row));
        }
        const int th = solver.threshold.value_or(default_threshold(d.n_labeled()));
        report = disagreement_criterion(po, pu, th, d.labeled_idx);
        report->kl_gap = kl_mc(orig, unb, kl_samples, derive_seed(seed, "kl"));
        m = method == "original_sem" ? orig : unb;
      }
      weight = m.unlabeled_weight;
      model["family"] = "gmm";
      model["model"] = m;
      run["covariance"] = solver.covariance;
    } else {
      KernelMatrix km;
      if (!gram.empty()) {
        km = read_gram_csv(gram);
        if (km.n() != d.n_points()) {
          throw InputError("Gram matrix has " + std::to_string(km.n()) + " rows but the data has " +
                           std::to_string(d.n_points()));
        }
        run["gram"] = gram;
      } else {
        km = gram_matrix(d, resolve_kernel(kernel.config(), d.features, derive_seed(seed, "kernel")));
      }
      run["kernel"] = km.spec;
      const AskkmOptions ao = solver.askkm(seed);
      if (method == "askkm") {
        const AskkmModel m = fit_askkm(km, d, ao);
        report = m.history.back().criterion;
        weight = m.final_model.unlabeled_weight;
        model["family"] = "askkm";
        model["model"] = m;
      } else {
        auto fit = [&](UnlabeledWeight w) {
          SolverOptions o = ao.solver;
          o.weight = w;
          return fit_sskkm(km, d, LabelMap::identity(d), o);
        };
        const ClusterModel orig = fit(UnlabeledWeight::original());
        const ClusterModel unb = fit(UnlabeledWeight::unbiased());
        const int th = solver.threshold.value_or(default_threshold(d.n_labeled()));
        report = disagreement_criterion(predict_labeled(orig, km, d), predict_labeled(unb, km, d),
                                        th, d.labeled_idx);
        const ClusterModel& m = method == "original_sskkm" ? orig : unb;
        weight = m.unlabeled_weight;
        model["family"] = "kernel";
        model["model"] = m;
      }
      model["kernel"] = km.spec;
      model["train_features"] = matrix_to_json(d.features);
    }
    model["unlabeled_weight"] = weight;
    run["unlabeled_weight"] = weight;

    write_json(model_path, model);
    write_json(run_path, run);
    std::cout << "method=" << method << " unlabeled_weight=" << weight;
    if (report) {
      write_json(crit_path, *report);
      std::cout << " disagreements=" << report->disagreements << " threshold=" << report->threshold
                << " misspecified=" << (report->misspecified ? "yes" : "no");
    }
    std::cout << "\n";
    return 0;
  }
};

// ---- curve -----------------------------------------------------------------

struct CurveCmd {
  ScenarioArgs scenario;
  std::vector<std::string> methods = {"original_sem", "unbiased_sem", "askkm"};
  std::vector<int> grid = {0, 50, 100, 500, 1000};
  int seeds = 20;
  int eval_size = 500;
  std::string metric = "auto";
  std::string out = ".";
  std::string prefix = "curve";
  KernelArgs kernel;
  SolverArgs solver;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("curve", "sweep a learning curve over unlabeled pool sizes");
    scenario.add(cmd, "misspecified");
    cmd->add_option("--methods", methods, "methods to compare")->delimiter(',')->capture_default_str();
    cmd->add_option("--grid", grid, "unlabeled pool sizes")->delimiter(',')->capture_default_str();
    cmd->add_option("--seeds", seeds, "repetitions per grid point")->capture_default_str();
    cmd->add_option("--eval-size", eval_size, "held-out set size")->capture_default_str();
    cmd->add_option("--metric", metric, "auto, ap or accuracy")->capture_default_str();
    cmd->add_option("--out", out, "output directory")->capture_default_str();
    cmd->add_option("--prefix", prefix, "output file prefix")->capture_default_str();
    kernel.add(cmd);
    solver.add(cmd);
  }

  int run(std::uint64_t seed) {
    for (const auto& m : methods) {
      const auto& known = known_methods();
      if (std::find(known.begin(), known.end(), m) == known.end()) {
        throw UsageError("unknown method '" + m + "'");
      }
    }
    CurveOptions opts;
    if (metric == "auto") {
      opts.metric = CurveMetric::automatic;
    } else if (metric == "ap") {
      opts.metric = CurveMetric::ap;
    } else if (metric == "accuracy") {
      opts.metric = CurveMetric::accuracy;
    } else {
      throw UsageError("unknown metric '" + metric + "'");
    }
    const std::string json_path = out_path(out, prefix + ".json");
    const std::string csv_path = out_path(out, prefix + ".csv");
    GenSpec spec = scenario.spec(seed);
    opts.methods = methods;
    opts.grid = grid;
    opts.n_seeds = seeds;
    opts.eval_size = eval_size;
    opts.base_seed = seed;
    opts.method.kernel = kernel.config();
    opts.method.askkm = solver.askkm(seed);
    opts.method.sem = solver.sem(seed);

    const LearningCurve curve = learning_curve(spec, opts);
    spec.n_unlabeled = 0;
    json config = {{"command", "curve"},    {"seed", seed},         {"scenario", spec},
                   {"methods", methods},    {"grid", grid},         {"seeds", seeds},
                   {"eval_size", eval_size}, {"metric", curve.metric},
                   {"kernel", {{"kind", kernel.kind}, {"distance", kernel.distance}}},
                   {"solver", solver.echo()}};
    config["kernel"]["gamma"] = kernel.gamma ? json(*kernel.gamma) : json("median");
    write_json(json_path, {{"config", config}, {"curve", curve}});
    write_text(csv_path, curve_to_csv(curve));

    for (const auto& m : curve.methods) {
      const auto& s = curve.series.at(m);
      std::cout << m << ": " << curve.metric << " N_u=" << grid.front() << " " << fmt(s.mean.front())
                << " +- " << fmt(s.std.front()) << " -> N_u=" << grid.back() << " "
                << fmt(s.mean.back()) << " +- " << fmt(s.std.back()) << "\n";
    }
    return 0;
  }
};

// ---- eval ------------------------------------------------------------------

struct EvalCmd {
  std::string model_path;
  std::string data;
  std::string out = "metrics.json";
  bool verbose = false;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("eval", "per-class AP and mAP of a fitted model on test data");
    cmd->add_option("--model", model_path, "model JSON written by fit")->required();
    cmd->add_option("--data", data, "labeled test CSV")->required();
    cmd->add_option("--out", out, "metrics JSON path")->capture_default_str();
    cmd->add_flag("--verbose", verbose, "include the 11 interpolated precision points per class");
  }

  int run(std::uint64_t) {
    const fs::path parent = fs::path(out).parent_path();
    if (!parent.empty() && !fs::is_directory(parent)) {
      throw UsageError("output directory does not exist: " + parent.string());
    }
    const json mj = read_json(model_path);
    CsvSchema schema;
    schema.class_names = mj.at("class_names").get<std::vector<std::string>>();
    const CsvData csv = load_csv(data, schema);
    const Dataset& test = csv.data;
    if (test.n_unlabeled() > 0) throw InputError("test data must be fully labeled");

    const std::string family = mj.at("family").get<std::string>();
    Eigen::MatrixXd scores;
    std::vector<int> predicted;
    if (family == "gmm") {
      const auto m = mj.at("model").get<GmmModel>();
      if (m.dim() != test.dim()) {
        throw InputError("model dimension " + std::to_string(m.dim()) +
                         " does not match data dimension " + std::to_string(test.dim()));
      }
      SemPrediction p = predict_sem(m, test.features);
      scores = std::move(p.posteriors);
      predicted = std::move(p.labels);
    } else {
      const FeatureMatrix train = matrix_from_json(mj.at("train_features"));
      if (train.cols() != test.dim()) {
        throw InputError("model dimension " + std::to_string(train.cols()) +
                         " does not match data dimension " + std::to_string(test.dim()));
      }
      const auto spec = mj.at("kernel").get<KernelSpec>();
      const Eigen::MatrixXd rows = cross_kernel(test.features, train, spec);
      const Eigen::VectorXd self = self_kernel(test.features, spec);
      BatchPrediction p = family == "askkm"
                              ? predict(mj.at("model").get<AskkmModel>(), rows, self)
                              : predict_batch(mj.at("model").get<ClusterModel>(), rows, self);
      scores = score_margins(p.scores);
      predicted = std::move(p.labels);
    }

    json per_class = json::array();
    std::vector<double> aps;
    for (Index c = 0; c < scores.cols(); ++c) {
      RankedList list;
      for (Index i = 0; i < scores.rows(); ++i) {
        list.scores.push_back(scores(i, c));
        list.relevance.push_back(test.labels[static_cast<std::size_t>(i)] == c);
      }
      json entry = {{"class", schema.class_names[static_cast<std::size_t>(c)]}};
      try {
        const double ap = average_precision(list);
        aps.push_back(ap);
        entry["ap"] = ap;
        if (verbose) entry["interpolated_precision"] = interpolated_precision(list);
      } catch (const UndefinedMetricError&) {
        entry["ap"] = nullptr;
      }
      per_class.push_back(std::move(entry));
    }
    json metrics = {{"model", model_path},
                    {"data", data},
                    {"n_test", test.n_points()},
                    {"accuracy", accuracy(predicted, test.labels)},
                    {"per_class", std::move(per_class)}};
    metrics["map"] = aps.empty() ? json(nullptr) : json(mean_ap(aps));
    write_json(out, metrics);
    std::cout << "mAP=" << (aps.empty() ? std::string("undefined") : fmt(mean_ap(aps)))
              << " accuracy=" << fmt(metrics["accuracy"].get<double>()) << "\n";
    return 0;
  }
};

// ---- gram ------------------------------------------------------------------

struct GramCmd {
  std::string data;
  std::string out = "gram.csv";
  KernelArgs kernel;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("gram", "export the Gram matrix of a dataset");
    cmd->add_option("--data", data, "dataset CSV")->required();
    cmd->add_option("--out", out, "Gram CSV path; the spec goes to <out>.json")->capture_default_str();
    kernel.add(cmd);
  }

  int run(std::uint64_t seed) {
    const fs::path parent = fs::path(out).parent_path();
    if (!parent.empty() && !fs::is_directory(parent)) {
      throw UsageError("output directory does not exist: " + parent.string());
    }
    const CsvData csv = load_csv(data);
    const KernelMatrix km = gram_matrix(
        csv.data, resolve_kernel(kernel.config(), csv.data.features, derive_seed(seed, "kernel")));
    write_gram_csv(out, km);
    std::cout << "n=" << km.n() << " kernel=" << to_string(km.spec.kind) << " gamma=" << km.spec.gamma
              << "\n";
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised generative learning with misspecification detection"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI file of option values; command-line flags take precedence");
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "global seed; every stochastic component derives its own stream")
      ->capture_default_str();

  GenCmd gen;
  FitCmd fit;
  CurveCmd curve;
  EvalCmd eval;
  GramCmd gram;
  gen.add(app);
  fit.add(app);
  curve.add(app);
  eval.add(app);
  gram.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("gen")) return gen.run(seed);
    if (app.got_subcommand("fit")) return fit.run(seed);
    if (app.got_subcommand("curve")) return curve.run(seed);
    if (app.got_subcommand("eval")) return eval.run(seed);
    return gram.run(seed);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const StructuralError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const UndefinedMetricError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
