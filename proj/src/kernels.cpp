#include "mssl/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "mssl/parallel.hpp"
#include "mssl/rng.hpp"

namespace mssl {

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::linear: return "linear";
    case KernelKind::rbf: return "rbf";
    case KernelKind::generalized_rbf: return "generalized_rbf";
  }
  return "unknown";
}

std::string to_string(Distance d) {
  switch (d) {
    case Distance::euclidean: return "euclidean";
    case Distance::manhattan: return "manhattan";
    case Distance::chi_square: return "chi_square";
  }
  return "unknown";
}

KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "linear") return KernelKind::linear;
  if (name == "rbf") return KernelKind::rbf;
  if (name == "generalized_rbf") return KernelKind::generalized_rbf;
  throw InputError("unknown kernel '" + name + "'");
}

Distance distance_from_string(const std::string& name) {
  if (name == "euclidean") return Distance::euclidean;
  if (name == "manhattan") return Distance::manhattan;
  if (name == "chi_square") return Distance::chi_square;
  throw InputError("unknown distance '" + name + "'");
}

namespace {

void check_dims(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw InputError("dimension mismatch: " + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()));
  }
}

double squared_euclidean(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = x[i] - y[i];
    s += diff * diff;
  }
  return s;
}

std::span<const double> row_span(const FeatureMatrix& m, Index i) {
  return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

void check_spec(const KernelSpec& spec) {
  if (spec.kind != KernelKind::linear && !(spec.gamma > 0.0 && std::isfinite(spec.gamma))) {
    throw InputError("kernel gamma must be positive and finite");
  }
}

}  // namespace

double feature_distance(std::span<const double> x, std::span<const double> y, Distance d) {
  check_dims(x, y);
  switch (d) {
    case Distance::euclidean:
      return std::sqrt(squared_euclidean(x, y));
    case Distance::manhattan: {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
      return s;
    }
    case Distance::chi_square: {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < 0.0 || y[i] < 0.0) {
          throw InputError("chi_square distance requires nonnegative features (component " +
                           std::to_string(i) + ")");
        }
        const double diff = x[i] - y[i];
        s += diff * diff / (x[i] + y[i] + kChiSquareEps);
      }
      return s;
    }
  }
  throw InputError("unknown distance");
}

double kernel_eval(std::span<const double> x, std::span<const double> y, const KernelSpec& spec) {
  check_dims(x, y);
  switch (spec.kind) {
    case KernelKind::linear: {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
      return s;
    }
    case KernelKind::rbf:
      check_spec(spec);
      return std::exp(-spec.gamma * squared_euclidean(x, y));
    case KernelKind::generalized_rbf:
      check_spec(spec);
      return std::exp(-spec.gamma * feature_distance(x, y, spec.distance));
  }
  throw InputError("unknown kernel kind");
}

KernelMatrix gram_matrix(const FeatureMatrix& features, const KernelSpec& spec) {
  check_spec(spec);
  const Index n = features.rows();
  KernelMatrix km{Eigen::MatrixXd(n, n), spec};
  parallel_for(n, [&](Index begin, Index end) {
    for (Index i = begin; i < end; ++i) {
      for (Index j = i; j < n; ++j) {
        try {
          km.values(i, j) = kernel_eval(row_span(features, i), row_span(features, j), spec);
        } catch (const InputError& e) {
          throw InputError(std::string(e.what()) + " at pair (" + std::to_string(i) + ", " +
                           std::to_string(j) + ")");
        }
      }
    }
  });
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < i; ++j) km.values(i, j) = km.values(j, i);
  }
  return km;
}

KernelMatrix gram_matrix(const Dataset& d, const KernelSpec& spec) {
  require_valid(d);
  return gram_matrix(d.features, spec);
}

Eigen::MatrixXd cross_kernel(const FeatureMatrix& queries, const FeatureMatrix& train,
                             const KernelSpec& spec) {
  check_spec(spec);
  if (queries.cols() != train.cols()) {
    throw InputError("query dimension " + std::to_string(queries.cols()) +
                     " does not match training dimension " + std::to_string(train.cols()));
  }
  Eigen::MatrixXd out(queries.rows(), train.rows());
  parallel_for(queries.rows(), [&](Index begin, Index end) {
    for (Index q = begin; q < end; ++q) {
      for (Index j = 0; j < train.rows(); ++j) {
        out(q, j) = kernel_eval(row_span(queries, q), row_span(train, j), spec);
      }
    }
  });
  return out;
}

Eigen::VectorXd self_kernel(const FeatureMatrix& queries, const KernelSpec& spec) {
  Eigen::VectorXd out(queries.rows());
  for (Index q = 0; q < queries.rows(); ++q) {
    out(q) = kernel_eval(row_span(queries, q), row_span(queries, q), spec);
  }
  return out;
}

bool check_psd(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff() >= -tol;
}

double median_heuristic_gamma(const FeatureMatrix& features, KernelKind kind, Distance d,
                              std::uint64_t seed, Index max_points) {
  const Index n = features.rows();
  std::vector<Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Index{0});
  if (n > max_points) {
    auto rng = make_rng(seed, "median-heuristic");
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(static_cast<std::size_t>(max_points));
    std::sort(rows.begin(), rows.end());
  }
  std::vector<double> dists;
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = a + 1; b < rows.size(); ++b) {
      const auto x = row_span(features, rows[a]);
      const auto y = row_span(features, rows[b]);
      dists.push_back(kind == KernelKind::rbf ? squared_euclidean(x, y)
                                              : feature_distance(x, y, d));
    }
  }
  if (dists.empty()) return 1.0;
  auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
  std::nth_element(dists.begin(), mid, dists.end());
  return *mid > 0.0 ? 1.0 / *mid : 1.0;
}

void write_gram_csv(const std::string& path, const KernelMatrix& km) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  char buf[32];
  for (Index i = 0; i < km.n(); ++i) {
    for (Index j = 0; j < km.n(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", km.values(i, j));
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
  nlohmann::json side = {{"n", km.n()},
                         {"kernel", to_string(km.spec.kind)},
                         {"gamma", km.spec.gamma},
                         {"distance", to_string(km.spec.distance)}};
  std::ofstream meta(path + ".json");
  if (!meta) throw InputError("cannot write " + path + ".json");
  meta << side.dump(2) << '\n';
}

KernelMatrix read_gram_csv(const std::string& path) {
  std::ifstream meta(path + ".json");
  if (!meta) throw InputError("missing Gram sidecar " + path + ".json");
  nlohmann::json side;
  try {
    meta >> side;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("bad Gram sidecar " + path + ".json: " + e.what());
  }
  KernelSpec spec{kernel_kind_from_string(side.at("kernel").get<std::string>()),
                  side.at("gamma").get<double>(),
                  distance_from_string(side.at("distance").get<std::string>())};
  const Index n = side.at("n").get<Index>();

  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path);
  KernelMatrix km{Eigen::MatrixXd(n, n), spec};
  std::string line;
  Index i = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (i >= n) throw InputError(path + ": more than " + std::to_string(n) + " rows");
    std::stringstream ss(line);
    std::string cell;
    Index j = 0;
    while (std::getline(ss, cell, ',')) {
      if (j >= n) throw InputError(path + ":" + std::to_string(i + 1) + ": too many columns");
      try {
        km.values(i, j++) = std::stod(cell);
      } catch (const std::exception&) {
        throw InputError(path + ":" + std::to_string(i + 1) + ": bad number '" + cell + "'");
      }
    }
    if (j != n) throw InputError(path + ":" + std::to_string(i + 1) + ": expected " +
                                 std::to_string(n) + " columns");
    ++i;
  }
  if (i != n) throw InputError(path + ": expected " + std::to_string(n) + " rows");
  return km;
}

}  // namespace mssl

namespace mssl {

KernelSpec resolve_kernel(const KernelConfig& cfg, const FeatureMatrix& features,
                          std::uint64_t seed) {
  if (cfg.kind == KernelKind::linear) return KernelSpec::linear();
  const double gamma = cfg.gamma.has_value()
                           ? *cfg.gamma
                           : median_heuristic_gamma(features, cfg.kind, cfg.distance, seed);
  return cfg.kind == KernelKind::rbf ? KernelSpec::rbf(gamma)
                                     : KernelSpec::generalized_rbf(gamma, cfg.distance);
}

}  // namespace mssl
