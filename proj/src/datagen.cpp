#include "mssl/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "mssl/rng.hpp"

namespace mssl {

std::string to_string(GenKind kind) {
  return kind == GenKind::well_specified ? "well_specified" : "misspecified";
}

GenKind gen_kind_from_string(const std::string& name) {
  if (name == "well_specified") return GenKind::well_specified;
  if (name == "misspecified") return GenKind::misspecified;
  throw InputError("unknown scenario kind '" + name + "'");
}

GenSpec well_specified_scenario() {
  GenSpec s;
  s.kind = GenKind::well_specified;
  s.subclusters_per_class = 1;
  s.class_separation = 6.0;
  return s;
}

GenSpec misspecified_scenario() {
  GenSpec s;
  s.kind = GenKind::misspecified;
  s.subclusters_per_class = 2;
  s.class_separation = 3.3;
  s.subcluster_separation = 8.0;
  return s;
}

void check_spec(const GenSpec& spec) {
  if (spec.n_classes < 2) throw InputError("need at least 2 classes");
  if (spec.dim < 1) throw InputError("dim must be >= 1");
  if (spec.subclusters_per_class < 1) throw InputError("subclusters_per_class must be >= 1");
  if (spec.kind == GenKind::misspecified && spec.subclusters_per_class < 2) {
    throw InputError("a misspecified scenario needs at least 2 subclusters per class");
  }
  if (!(spec.class_separation > 0.0) || !(spec.subcluster_separation > 0.0)) {
    throw InputError("separations must be positive");
  }
  if (spec.n_labeled_per_class < 1) throw InputError("need at least one labeled point per class");
  if (spec.n_unlabeled < 0) throw InputError("n_unlabeled must be >= 0");
}

namespace {

// Turns the layout off the coordinate axes so a diagonal covariance cannot
// absorb the within-class spread.
constexpr double kLayoutTurn = std::numbers::pi / 18.0;

GroundTruth layout(const GenSpec& spec) {
  const int C = spec.n_classes;
  const int S = spec.subclusters_per_class;
  const Index d = spec.dim;

  GroundTruth gt;
  for (int c = 0; c < C; ++c) {
    Eigen::VectorXd center = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd axis = Eigen::VectorXd::Zero(d);
    if (d == 1) {
      center(0) = (c - 0.5 * (C - 1)) * spec.class_separation;
      axis(0) = 1.0;
    } else {
      // Regular polygon (a segment for C=2) with adjacent vertices
      // class_separation apart; subclusters spread along the tangent.
      const double r = spec.class_separation / (2.0 * std::sin(std::numbers::pi / C));
      const double angle = kLayoutTurn + 2.0 * std::numbers::pi * c / C;
      center(0) = r * std::cos(angle);
      center(1) = r * std::sin(angle);
      axis(0) = -std::sin(angle);
      axis(1) = std::cos(angle);
    }
    for (int s = 0; s < S; ++s) {
      gt.centers.push_back(center + (s - 0.5 * (S - 1)) * spec.subcluster_separation * axis);
      gt.center_class.push_back(c);
    }
  }
  return gt;
}

struct Sampler {
  const GroundTruth& gt;
  int S;
  Rng rng;
  std::normal_distribution<double> normal{0.0, 1.0};

  // The k-th draw of a class comes from subcluster k mod S, so every
  // subcluster gets an equal share.
  int draw(int c, Index k, FeatureMatrix& x, Index row) {
    const int comp = c * S + static_cast<int>(k % S);
    const auto& mu = gt.centers[static_cast<std::size_t>(comp)];
    for (Index j = 0; j < x.cols(); ++j) x(row, j) = mu(j) + normal(rng);
    return comp;
  }
};

}  // namespace

Generated generate(const GenSpec& spec) {
  check_spec(spec);
  const int C = spec.n_classes;
  const Index n_lab = static_cast<Index>(C) * spec.n_labeled_per_class;
  const Index n = n_lab + spec.n_unlabeled;

  Generated g;
  g.truth = layout(spec);
  g.data.n_classes = C;
  g.data.features.resize(n, spec.dim);
  g.truth.point_label.resize(static_cast<std::size_t>(n));
  g.truth.point_component.resize(static_cast<std::size_t>(n));

  Sampler lab{g.truth, spec.subclusters_per_class, make_rng(spec.seed, "labeled")};
  Index row = 0;
  for (int c = 0; c < C; ++c) {
    for (int i = 0; i < spec.n_labeled_per_class; ++i, ++row) {
      g.truth.point_component[static_cast<std::size_t>(row)] = lab.draw(c, i, g.data.features, row);
      g.truth.point_label[static_cast<std::size_t>(row)] = c;
      g.data.labeled_idx.push_back(row);
      g.data.labels.push_back(c);
    }
  }
  // Row j of the pool belongs to class j mod C, so any prefix stays balanced.
  Sampler unl{g.truth, spec.subclusters_per_class, make_rng(spec.seed, "unlabeled")};
  for (int j = 0; j < spec.n_unlabeled; ++j, ++row) {
    const int c = j % C;
    g.truth.point_component[static_cast<std::size_t>(row)] = unl.draw(c, j / C, g.data.features, row);
    g.truth.point_label[static_cast<std::size_t>(row)] = c;
    g.data.unlabeled_idx.push_back(row);
  }
  return g;
}

Generated generate_holdout(const GenSpec& spec, int n_points) {
  check_spec(spec);
  if (n_points < spec.n_classes) throw InputError("held-out set must cover every class");
  Generated g;
  g.truth = layout(spec);
  g.data.n_classes = spec.n_classes;
  g.data.features.resize(n_points, spec.dim);
  g.truth.point_label.resize(static_cast<std::size_t>(n_points));
  g.truth.point_component.resize(static_cast<std::size_t>(n_points));
  Sampler smp{g.truth, spec.subclusters_per_class, make_rng(spec.seed, "holdout")};
  for (Index i = 0; i < n_points; ++i) {
    const int c = static_cast<int>(i % spec.n_classes);
    g.truth.point_component[static_cast<std::size_t>(i)] =
        smp.draw(c, i / spec.n_classes, g.data.features, i);
    g.truth.point_label[static_cast<std::size_t>(i)] = c;
    g.data.labeled_idx.push_back(i);
    g.data.labels.push_back(c);
  }
  return g;
}

std::vector<std::string> default_class_names(int n_classes) {
  std::vector<std::string> names;
  for (int c = 0; c < n_classes; ++c) names.push_back(std::to_string(c));
  return names;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

CsvData load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (!trim(line).empty()) {
      header = split_row(line);
      break;
    }
  }
  if (header.empty()) throw InputError(path + ": missing header row");

  std::map<std::string, std::size_t> col_of;
  for (std::size_t i = 0; i < header.size(); ++i) col_of[header[i]] = i;
  auto find_col = [&](const std::string& name) {
    auto it = col_of.find(name);
    if (it == col_of.end()) throw InputError(path + ": unknown column '" + name + "'");
    return it->second;
  };
  const std::size_t label_col = schema.label_column.empty() ? header.size() - 1
                                                            : find_col(schema.label_column);
  std::vector<std::size_t> feature_cols;
  if (schema.feature_columns.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i != label_col) feature_cols.push_back(i);
    }
  } else {
    for (const auto& name : schema.feature_columns) feature_cols.push_back(find_col(name));
  }

  CsvData out;
  std::map<std::string, int> class_id;
  for (std::size_t c = 0; c < schema.class_names.size(); ++c) {
    class_id[schema.class_names[c]] = static_cast<int>(c);
  }
  out.class_names = schema.class_names;

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_row(line);
    if (cells.size() != header.size()) {
      throw InputError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(cells.size()));
    }
    std::vector<double> values;
    for (std::size_t c : feature_cols) {
      const std::string& cell = cells[c];
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (cell.empty() || used != cell.size()) {
        throw InputError(path + ":" + std::to_string(line_no) + ": non-numeric value '" + cell +
                         "' in column '" + header[c] + "'");
      }
      values.push_back(v);
    }
    const Index row = static_cast<Index>(rows.size());
    rows.push_back(std::move(values));
    const std::string& label = cells[label_col];
    if (label == schema.unlabeled_marker) {
      out.data.unlabeled_idx.push_back(row);
      continue;
    }
    auto it = class_id.find(label);
    if (it == class_id.end()) {
      if (!schema.class_names.empty()) {
        throw InputError(path + ":" + std::to_string(line_no) + ": unknown class '" + label + "'");
      }
      it = class_id.emplace(label, static_cast<int>(out.class_names.size())).first;
      out.class_names.push_back(label);
    }
    out.data.labeled_idx.push_back(row);
    out.data.labels.push_back(it->second);
  }

  out.data.features.resize(static_cast<Index>(rows.size()), static_cast<Index>(feature_cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      out.data.features(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  out.data.n_classes = static_cast<int>(out.class_names.size());
  return out;
}

void write_csv(const std::string& path, const Dataset& d,
               const std::vector<std::string>& class_names, const std::string& marker) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  for (Index j = 0; j < d.dim(); ++j) out << 'x' << j << ',';
  out << "label\n";

  std::vector<std::string> label_of(static_cast<std::size_t>(d.n_points()), marker);
  for (std::size_t p = 0; p < d.labeled_idx.size(); ++p) {
    label_of[static_cast<std::size_t>(d.labeled_idx[p])] =
        class_names.at(static_cast<std::size_t>(d.labels[p]));
  }
  char buf[32];
  for (Index i = 0; i < d.n_points(); ++i) {
    for (Index j = 0; j < d.dim(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", d.features(i, j));
      out << buf << ',';
    }
    out << label_of[static_cast<std::size_t>(i)] << '\n';
  }
  if (!out) throw InputError("write failed for " + path);
}

}  // namespace mssl
