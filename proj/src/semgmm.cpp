#include "mssl/semgmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "mssl/parallel.hpp"
#include "mssl/rng.hpp"

namespace mssl {

std::string to_string(CovarianceMode mode) {
  return mode == CovarianceMode::diagonal ? "diagonal" : "full";
}

CovarianceMode covariance_mode_from_string(const std::string& name) {
  if (name == "diagonal" || name == "diag") return CovarianceMode::diagonal;
  if (name == "full") return CovarianceMode::full;
  throw InputError("unknown covariance mode '" + name + "'");
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const double* v, int n) {
  double mx = kNegInf;
  for (int i = 0; i < n; ++i) mx = std::max(mx, v[i]);
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(v[i] - mx);
  return mx + std::log(s);
}

/// Cached per-component terms for evaluating log pi_k + log N(x; mu_k, Sigma_k).
class Density {
 public:
  explicit Density(const GmmModel& m) : m_(m) {
    const Index d = m.dim();
    const double log2pi = std::log(2.0 * std::numbers::pi);
    for (int k = 0; k < m.K(); ++k) {
      const auto& cov = m.covariances[static_cast<std::size_t>(k)];
      double logdet = 0.0;
      if (m.covariance_mode == CovarianceMode::diagonal) {
        Eigen::VectorXd inv(d);
        for (Index j = 0; j < d; ++j) {
          inv(j) = 1.0 / cov(j, j);
          logdet += std::log(cov(j, j));
        }
        inv_var_.push_back(std::move(inv));
      } else {
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) throw InputError("covariance is not positive definite");
        Eigen::MatrixXd l = llt.matrixL();
        for (Index j = 0; j < d; ++j) logdet += 2.0 * std::log(l(j, j));
        chol_.push_back(std::move(l));
      }
      const double w = m.weights(k);
      log_weight_.push_back(w > 0.0 ? std::log(w) : kNegInf);
      log_norm_.push_back(-0.5 * (static_cast<double>(d) * log2pi + logdet));
    }
  }

  /// out[k] = log pi_k + log N(x; mu_k, Sigma_k)
  void component_logs(std::span<const double> x, double* out) const {
    const Index d = m_.dim();
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), d);
    for (int k = 0; k < m_.K(); ++k) {
      const auto kk = static_cast<std::size_t>(k);
      double maha = 0.0;
      if (m_.covariance_mode == CovarianceMode::diagonal) {
        const Eigen::VectorXd diff = xv - m_.means[kk];
        maha = (diff.array().square() * inv_var_[kk].array()).sum();
      } else {
        const Eigen::VectorXd z =
            chol_[kk].triangularView<Eigen::Lower>().solve(xv - m_.means[kk]);
        maha = z.squaredNorm();
      }
      out[k] = log_weight_[kk] + log_norm_[kk] - 0.5 * maha;
    }
  }

  double log_joint(std::span<const double> x, int y, std::vector<double>& buf) const {
    buf.resize(static_cast<std::size_t>(m_.K()));
    component_logs(x, buf.data());
    for (int k = 0; k < m_.K(); ++k) {
      if (m_.comp_map[static_cast<std::size_t>(k)] != y) buf[static_cast<std::size_t>(k)] = kNegInf;
    }
    return log_sum_exp(buf.data(), m_.K());
  }

  /// Per-class log f(x, y).
  Eigen::VectorXd class_logs(std::span<const double> x, std::vector<double>& buf) const {
    buf.resize(static_cast<std::size_t>(m_.K()));
    component_logs(x, buf.data());
    Eigen::VectorXd out(m_.n_classes);
    std::vector<double> tmp;
    for (int c = 0; c < m_.n_classes; ++c) {
      tmp.clear();
      for (int k = 0; k < m_.K(); ++k) {
        if (m_.comp_map[static_cast<std::size_t>(k)] == c) tmp.push_back(buf[static_cast<std::size_t>(k)]);
      }
      out(c) = log_sum_exp(tmp.data(), static_cast<int>(tmp.size()));
    }
    return out;
  }

 private:
  const GmmModel& m_;
  std::vector<Eigen::VectorXd> inv_var_;
  std::vector<Eigen::MatrixXd> chol_;
  std::vector<double> log_weight_;
  std::vector<double> log_norm_;
};

std::span<const double> row_of(const FeatureMatrix& f, Index i) {
  return {f.data() + i * f.cols(), static_cast<std::size_t>(f.cols())};
}

void check_x(const GmmModel& m, std::span<const double> x) {
  if (static_cast<Index>(x.size()) != m.dim()) {
    throw InputError("feature vector has dimension " + std::to_string(x.size()) +
                     ", model expects " + std::to_string(m.dim()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw InputError("non-finite feature value");
  }
}

Eigen::MatrixXd floor_covariance(const Eigen::MatrixXd& cov, double floor, CovarianceMode mode) {
  if (mode == CovarianceMode::diagonal) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(cov.rows(), cov.cols());
    for (Index j = 0; j < cov.rows(); ++j) out(j, j) = std::max(cov(j, j), floor);
    return out;
  }
  const Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const Eigen::VectorXd vals = es.eigenvalues().cwiseMax(floor);
  Eigen::MatrixXd out = es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

/// Which points enter the fit and with which weight and class restriction.
struct PointTerms {
  std::vector<Index> rows;
  std::vector<double> weight;
  std::vector<int> cls;  // -1: marginal term
};

PointTerms point_terms(const Dataset& d, double w, bool ignore_labels) {
  PointTerms t;
  for (std::size_t p = 0; p < d.labeled_idx.size(); ++p) {
    t.rows.push_back(d.labeled_idx[p]);
    t.weight.push_back(1.0);
    t.cls.push_back(ignore_labels ? -1 : d.labels[p]);
  }
  for (Index i : d.unlabeled_idx) {
    t.rows.push_back(i);
    t.weight.push_back(w);
    t.cls.push_back(-1);
  }
  return t;
}

/// E-step: responsibilities (rows aligned with terms) and per-point log terms.
/// Returns the weighted objective, summed in point order.
double e_step(const GmmModel& m, const FeatureMatrix& x, const PointTerms& t,
              Eigen::MatrixXd& resp) {
  const Density dens(m);
  const Index n = static_cast<Index>(t.rows.size());
  const int K = m.K();
  resp.resize(n, K);
  std::vector<double> ll(static_cast<std::size_t>(n));
  parallel_for(n, [&](Index begin, Index end) {
    std::vector<double> buf(static_cast<std::size_t>(K));
    for (Index p = begin; p < end; ++p) {
      const auto pp = static_cast<std::size_t>(p);
      dens.component_logs(row_of(x, t.rows[pp]), buf.data());
      if (t.cls[pp] >= 0) {
        for (int k = 0; k < K; ++k) {
          if (m.comp_map[static_cast<std::size_t>(k)] != t.cls[pp]) buf[static_cast<std::size_t>(k)] = kNegInf;
        }
      }
      const double lse = log_sum_exp(buf.data(), K);
      ll[pp] = lse;
      for (int k = 0; k < K; ++k) {
        resp(p, k) = lse == kNegInf ? 0.0 : std::exp(buf[static_cast<std::size_t>(k)] - lse);
      }
    }
  });
  double obj = 0.0;
  for (std::size_t p = 0; p < ll.size(); ++p) {
    if (t.weight[p] != 0.0) obj += t.weight[p] * ll[p];
  }
  return obj;
}

void m_step(GmmModel& m, const FeatureMatrix& x, const PointTerms& t, const Eigen::MatrixXd& resp,
            double var_floor) {
  const int K = m.K();
  const Index d = x.cols();
  const Index n = static_cast<Index>(t.rows.size());
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(K);
  for (Index p = 0; p < n; ++p) {
    const double a = t.weight[static_cast<std::size_t>(p)];
    if (a == 0.0) continue;
    for (int k = 0; k < K; ++k) mass(k) += a * resp(p, k);
  }
  const double total = mass.sum();
  for (int k = 0; k < K; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    m.weights(k) = mass(k) / total;
    if (!(mass(k) > 1e-300)) continue;  // keep previous parameters for a dead component
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (Index p = 0; p < n; ++p) {
      const double r = t.weight[static_cast<std::size_t>(p)] * resp(p, k);
      if (r == 0.0) continue;
      mean += r * x.row(t.rows[static_cast<std::size_t>(p)]).transpose();
    }
    mean /= mass(k);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (Index p = 0; p < n; ++p) {
      const double r = t.weight[static_cast<std::size_t>(p)] * resp(p, k);
      if (r == 0.0) continue;
      const Eigen::VectorXd diff = x.row(t.rows[static_cast<std::size_t>(p)]).transpose() - mean;
      if (m.covariance_mode == CovarianceMode::diagonal) {
        cov.diagonal() += r * diff.array().square().matrix();
      } else {
        cov.noalias() += r * diff * diff.transpose();
      }
    }
    cov /= mass(k);
    m.means[kk] = std::move(mean);
    m.covariances[kk] = floor_covariance(cov, var_floor, m.covariance_mode);
  }
}

double mean_feature_variance(const Dataset& d) {
  std::vector<Index> rows(d.labeled_idx);
  rows.insert(rows.end(), d.unlabeled_idx.begin(), d.unlabeled_idx.end());
  const Index dim = d.dim();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (Index i : rows) mean += d.features.row(i).transpose();
  mean /= static_cast<double>(rows.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
  for (Index i : rows) var += (d.features.row(i).transpose() - mean).array().square().matrix();
  var /= static_cast<double>(rows.size());
  return dim > 0 ? var.mean() : 0.0;
}

GmmModel initial_model(const Dataset& d, std::span<const int> comp_map, const SemOptions& opts,
                       double var_floor) {
  const Index dim = d.dim();
  const int C = d.n_classes;
  const int K = static_cast<int>(comp_map.size());

  // Overall per-dimension variance as the fallback for classes with one labeled point.
  std::vector<Index> all(d.labeled_idx);
  all.insert(all.end(), d.unlabeled_idx.begin(), d.unlabeled_idx.end());
  Eigen::VectorXd all_mean = Eigen::VectorXd::Zero(dim);
  for (Index i : all) all_mean += d.features.row(i).transpose();
  all_mean /= static_cast<double>(all.size());
  Eigen::VectorXd all_var = Eigen::VectorXd::Zero(dim);
  for (Index i : all) all_var += (d.features.row(i).transpose() - all_mean).array().square().matrix();
  all_var /= static_cast<double>(all.size());

  std::vector<Eigen::VectorXd> class_mean(static_cast<std::size_t>(C), Eigen::VectorXd::Zero(dim));
  std::vector<Eigen::MatrixXd> class_cov(static_cast<std::size_t>(C), Eigen::MatrixXd::Zero(dim, dim));
  std::vector<int> class_count(static_cast<std::size_t>(C), 0);
  for (std::size_t p = 0; p < d.labeled_idx.size(); ++p) {
    const auto c = static_cast<std::size_t>(d.labels[p]);
    class_mean[c] += d.features.row(d.labeled_idx[p]).transpose();
    ++class_count[c];
  }
  for (int c = 0; c < C; ++c) class_mean[static_cast<std::size_t>(c)] /= class_count[static_cast<std::size_t>(c)];
  for (std::size_t p = 0; p < d.labeled_idx.size(); ++p) {
    const auto c = static_cast<std::size_t>(d.labels[p]);
    const Eigen::VectorXd diff = d.features.row(d.labeled_idx[p]).transpose() - class_mean[c];
    class_cov[c] += diff * diff.transpose();
  }
  for (int c = 0; c < C; ++c) {
    const auto cc = static_cast<std::size_t>(c);
    if (class_count[cc] >= 2) {
      class_cov[cc] /= class_count[cc];
    } else {
      class_cov[cc] = all_var.asDiagonal();
    }
    // Too few points for a full estimate: fall back to the diagonal.
    if (opts.covariance == CovarianceMode::full && class_count[cc] <= dim) {
      class_cov[cc] = Eigen::MatrixXd(class_cov[cc].diagonal().asDiagonal());
    }
  }

  std::vector<int> comps_of_class(static_cast<std::size_t>(C), 0);
  for (int c : comp_map) ++comps_of_class[static_cast<std::size_t>(c)];

  GmmModel m;
  m.n_classes = C;
  m.comp_map.assign(comp_map.begin(), comp_map.end());
  m.covariance_mode = opts.covariance;
  m.weights.resize(K);
  auto rng = make_rng(opts.solver.seed, "sem-init");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<int> seen(static_cast<std::size_t>(C), 0);
  for (int k = 0; k < K; ++k) {
    const auto c = static_cast<std::size_t>(comp_map[static_cast<std::size_t>(k)]);
    Eigen::VectorXd mean = class_mean[c];
    if (seen[c]++ > 0) {
      const Eigen::VectorXd sd = class_cov[c].diagonal().cwiseMax(0.0).cwiseSqrt();
      for (Index j = 0; j < dim; ++j) mean(j) += 0.1 * sd(j) * normal(rng);
    }
    m.means.push_back(std::move(mean));
    m.covariances.push_back(floor_covariance(class_cov[c], var_floor, opts.covariance));
    m.weights(k) = static_cast<double>(class_count[c]) / static_cast<double>(d.n_labeled()) /
                   comps_of_class[c];
  }
  return m;
}

}  // namespace

std::vector<int> identity_comp_map(int n_classes) {
  std::vector<int> map(static_cast<std::size_t>(n_classes));
  for (int c = 0; c < n_classes; ++c) map[static_cast<std::size_t>(c)] = c;
  return map;
}

GmmModel fit_sem(const Dataset& d, std::span<const int> comp_map, const SemOptions& opts) {
  require_valid(d);
  check_options(opts.solver);
  const int K = static_cast<int>(comp_map.size());
  if (K < d.n_classes) {
    throw InputError("K = " + std::to_string(K) + " is smaller than the class count " +
                     std::to_string(d.n_classes));
  }
  std::vector<bool> hit(static_cast<std::size_t>(d.n_classes), false);
  for (int c : comp_map) {
    if (c < 0 || c >= d.n_classes) throw InputError("component map names invalid class " + std::to_string(c));
    hit[static_cast<std::size_t>(c)] = true;
  }
  if (!std::all_of(hit.begin(), hit.end(), [](bool b) { return b; })) {
    throw InputError("component map must cover every class");
  }

  const double w = resolve_unlabeled_weight(opts.solver.weight, d.n_labeled(), d.n_unlabeled());
  const double var_floor = std::max(1e-6 * mean_feature_variance(d), 1e-12);
  const PointTerms terms = point_terms(d, w, opts.ignore_labels);

  GmmModel m = initial_model(d, comp_map, opts, var_floor);
  m.unlabeled_weight = w;

  Eigen::MatrixXd resp;
  double obj = e_step(m, d.features, terms, resp);
  m.loglik_trace.push_back(obj);
  for (int it = 1; it <= opts.solver.max_iter; ++it) {
    m_step(m, d.features, terms, resp, var_floor);
    const double next = e_step(m, d.features, terms, resp);
    m.loglik_trace.push_back(next);
    m.iterations_run = it;
    const double delta = next - obj;
    obj = next;
    if (delta < opts.solver.tol) {
      m.converged = true;
      break;
    }
  }
  m.final_loglik = obj;
  return m;
}

GmmModel fit_sem(const Dataset& d, const SemOptions& opts) {
  const auto map = identity_comp_map(d.n_classes);
  return fit_sem(d, map, opts);
}

double log_joint(const GmmModel& m, std::span<const double> x, int y) {
  check_x(m, x);
  std::vector<double> buf;
  return Density(m).log_joint(x, y, buf);
}

double log_marginal(const GmmModel& m, std::span<const double> x) {
  check_x(m, x);
  std::vector<double> buf(static_cast<std::size_t>(m.K()));
  Density(m).component_logs(x, buf.data());
  return log_sum_exp(buf.data(), m.K());
}

double loglik(const GmmModel& m, const Dataset& d, double unlabeled_weight) {
  if (d.dim() != m.dim()) {
    throw InputError("dataset dimension " + std::to_string(d.dim()) + " does not match model " +
                     std::to_string(m.dim()));
  }
  const PointTerms terms = point_terms(d, unlabeled_weight, false);
  Eigen::MatrixXd resp;
  return e_step(m, d.features, terms, resp);
}

int bayes_classify(const GmmModel& m, std::span<const double> x) {
  check_x(m, x);
  std::vector<double> buf;
  const Eigen::VectorXd logs = Density(m).class_logs(x, buf);
  int best = 0;
  for (int c = 1; c < logs.size(); ++c) {
    if (logs(c) > logs(best)) best = c;
  }
  return best;
}

Eigen::VectorXd class_posteriors(const GmmModel& m, std::span<const double> x) {
  check_x(m, x);
  std::vector<double> buf;
  const Eigen::VectorXd logs = Density(m).class_logs(x, buf);
  const double lse = log_sum_exp(logs.data(), static_cast<int>(logs.size()));
  return (logs.array() - lse).exp().matrix();
}

SemPrediction predict_sem(const GmmModel& m, const FeatureMatrix& x) {
  if (x.cols() != m.dim()) {
    throw InputError("query dimension " + std::to_string(x.cols()) + " does not match model " +
                     std::to_string(m.dim()));
  }
  const Density dens(m);
  SemPrediction out;
  out.labels.resize(static_cast<std::size_t>(x.rows()));
  out.posteriors.resize(x.rows(), m.n_classes);
  std::vector<double> buf;
  for (Index i = 0; i < x.rows(); ++i) {
    const auto xi = row_of(x, i);
    check_x(m, xi);
    const Eigen::VectorXd logs = dens.class_logs(xi, buf);
    int best = 0;
    for (int c = 1; c < logs.size(); ++c) {
      if (logs(c) > logs(best)) best = c;
    }
    out.labels[static_cast<std::size_t>(i)] = best;
    const double lse = log_sum_exp(logs.data(), static_cast<int>(logs.size()));
    out.posteriors.row(i) = (logs.array() - lse).exp().matrix().transpose();
  }
  return out;
}

KlEstimate kl_mc(const GmmModel& m1, const GmmModel& m2, Index n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw InputError("kl_mc needs at least one sample");
  if (m1.dim() != m2.dim() || m1.n_classes != m2.n_classes) {
    throw InputError("kl_mc models differ in dimension or class set");
  }
  const Index d = m1.dim();
  const int K = m1.K();
  std::vector<Eigen::MatrixXd> factor;
  for (const auto& cov : m1.covariances) {
    if (m1.covariance_mode == CovarianceMode::diagonal) {
      factor.emplace_back(cov.diagonal().cwiseSqrt().asDiagonal());
    } else {
      factor.emplace_back(Eigen::LLT<Eigen::MatrixXd>(cov).matrixL());
    }
  }
  std::vector<double> cumulative(static_cast<std::size_t>(K));
  double acc = 0.0;
  for (int k = 0; k < K; ++k) cumulative[static_cast<std::size_t>(k)] = (acc += m1.weights(k));

  const Density dens1(m1);
  const Density dens2(m2);
  auto rng = make_rng(seed, "kl-mc");
  std::uniform_real_distribution<double> uniform(0.0, acc);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> terms(static_cast<std::size_t>(n_samples));
  std::vector<double> buf;
  Eigen::VectorXd z(d);
  for (Index s = 0; s < n_samples; ++s) {
    const double u = uniform(rng);
    int k = static_cast<int>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    k = std::min(k, K - 1);
    for (Index j = 0; j < d; ++j) z(j) = normal(rng);
    const Eigen::VectorXd x = m1.means[static_cast<std::size_t>(k)] + factor[static_cast<std::size_t>(k)] * z;
    const int y = m1.comp_map[static_cast<std::size_t>(k)];
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(d));
    terms[static_cast<std::size_t>(s)] = dens1.log_joint(xs, y, buf) - dens2.log_joint(xs, y, buf);
  }

  double sum = 0.0;
  for (double t : terms) sum += t;
  const double mean = sum / static_cast<double>(n_samples);
  double ss = 0.0;
  for (double t : terms) ss += (t - mean) * (t - mean);
  const double sd = n_samples > 1 ? std::sqrt(ss / static_cast<double>(n_samples - 1)) : 0.0;

  KlEstimate est;
  est.raw_mean = mean;
  est.value = std::max(0.0, mean);
  est.std_error = sd / std::sqrt(static_cast<double>(n_samples));
  est.n_samples = n_samples;
  est.seed = seed;
  return est;
}

}  // namespace mssl
