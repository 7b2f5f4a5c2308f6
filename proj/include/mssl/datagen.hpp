#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mssl/core.hpp"

namespace mssl {

enum class GenKind { well_specified, misspecified };

std::string to_string(GenKind kind);
GenKind gen_kind_from_string(const std::string& name);

/// Synthetic scenario: each class is a union of unit-variance spherical
/// Gaussians ("subclusters") around a class center.
struct GenSpec {
  GenKind kind = GenKind::well_specified;
  int n_classes = 2;
  int dim = 2;
  int subclusters_per_class = 1;
  double class_separation = 6.0;      // distance between adjacent class centers
  double subcluster_separation = 8.0; // spacing of subclusters within a class
  int n_labeled_per_class = 10;
  int n_unlabeled = 0;
  std::uint64_t seed = 0;
};

/// Defaults of the two named scenarios used by the harness and the CLI.
GenSpec well_specified_scenario();
GenSpec misspecified_scenario();

void check_spec(const GenSpec& spec);

struct GroundTruth {
  std::vector<Eigen::VectorXd> centers;  // index class * S + subcluster
  std::vector<int> center_class;
  std::vector<int> point_label;      // true class of every row
  std::vector<int> point_component;  // generating center of every row
};

struct Generated {
  Dataset data;
  GroundTruth truth;
};

/// Labeled rows first (class by class), then the class-balanced unlabeled pool
/// (row j of the pool has class j mod C). Labeled and unlabeled draws use
/// separate seed streams, so growing n_unlabeled extends the pool without
/// changing earlier rows. Within a class, successive draws cycle through its
/// subclusters.
Generated generate(const GenSpec& spec);

/// Class-balanced held-out sample from the same layout, every row labeled.
Generated generate_holdout(const GenSpec& spec, int n_points);

struct CsvSchema {
  std::vector<std::string> feature_columns;  // empty: every column except the label
  std::string label_column;                  // empty: last column
  std::string unlabeled_marker = "?";
  std::vector<std::string> class_names;      // fixed id mapping; empty: first appearance
};

struct CsvData {
  Dataset data;
  std::vector<std::string> class_names;
};

CsvData load_csv(const std::string& path, const CsvSchema& schema = {});

/// Header x0..x{d-1},label; unlabeled rows (and rows in neither set) carry the marker.
void write_csv(const std::string& path, const Dataset& d,
               const std::vector<std::string>& class_names, const std::string& marker = "?");

std::vector<std::string> default_class_names(int n_classes);

}  // namespace mssl
