#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mssl/core.hpp"
#include "mssl/rng.hpp"

namespace testing {

using mssl::Dataset;
using mssl::FeatureMatrix;
using mssl::Index;

inline FeatureMatrix random_features(Index n, Index d, std::uint64_t seed, double scale = 1.0) {
  mssl::Rng rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  FeatureMatrix x(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) x(i, j) = normal(rng);
  }
  return x;
}

/// Gaussian blobs, one per class, centered at c * spacing on every axis.
/// The first n_lab_per_class points of each class are labeled, the rest unlabeled.
inline Dataset blobs(int n_classes, int per_class, int n_lab_per_class, Index d, double spacing,
                     std::uint64_t seed) {
  mssl::Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset ds;
  ds.n_classes = n_classes;
  ds.features.resize(static_cast<Index>(n_classes) * per_class, d);
  Index row = 0;
  for (int c = 0; c < n_classes; ++c) {
    for (int i = 0; i < per_class; ++i, ++row) {
      for (Index j = 0; j < d; ++j) ds.features(row, j) = c * spacing + normal(rng);
      if (i < n_lab_per_class) {
        ds.labeled_idx.push_back(row);
        ds.labels.push_back(c);
      } else {
        ds.unlabeled_idx.push_back(row);
      }
    }
  }
  return ds;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("mssl_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing
