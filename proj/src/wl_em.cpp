#include "fsc/wl_em.hpp"

#include <cmath>
#include <string>

#include "fsc/error.hpp"

namespace fsc {

namespace {

constexpr double kMinComponentMass = 1e-10;

void check_dims(const SupervisedDataset& data, const MixtureParams& m) {
  if (m.dim() != data.dim()) {
    throw Error(ErrorKind::input, "mixture dimension " + std::to_string(m.dim()) +
                                      " does not match data dimension " +
                                      std::to_string(data.dim()));
  }
  if (m.num_components() != data.num_classes()) {
    throw Error(ErrorKind::input, "mixture order does not match the label count");
  }
}

// Weighted objective terms under one factored mixture.
struct Evaluation {
  Eigen::MatrixXd joint2;  // n2 x G log pi_g + log phi_g for unlabelled rows
  double wll = 0.0;
};

Evaluation evaluate(const SupervisedDataset& data, const FactoredMixture& fm, SupervisionWeight w) {
  Evaluation ev;
  if (w.labelled() > 0.0 && data.n1() > 0) {
    const Eigen::MatrixXd joint1 = fm.joint_log_densities(data.labelled);
    ev.wll += w.labelled() * joint1.cwiseProduct(data.labels.indicators()).sum();
  }
  if (data.n2() > 0) {
    ev.joint2 = fm.joint_log_densities(data.unlabelled);
    if (w.unlabelled() > 0.0) ev.wll += w.unlabelled() * log_sum_exp_rows(ev.joint2).sum();
  }
  return ev;
}

Responsibilities normalize(Eigen::MatrixXd joint) {
  if (joint.rows() == 0) return joint;
  const Eigen::VectorXd norm = log_sum_exp_rows(joint);
  joint.colwise() -= norm;
  return joint.array().exp().matrix();
}

Responsibilities one_hot(std::span<const int> classes, int k) {
  return HardLabels(classes, k).indicators();
}

// Weighted mean and scatter of the rows carrying weights w1 (labelled) and
// w2 (unlabelled).
GaussianParams weighted_moments(const SupervisedDataset& data, const Eigen::VectorXd& w1,
                                const Eigen::VectorXd& w2, double mass) {
  const Eigen::Index p = data.dim();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
  if (data.n1() > 0) mean.noalias() += data.labelled.transpose() * w1;
  if (data.n2() > 0) mean.noalias() += data.unlabelled.transpose() * w2;
  mean /= mass;

  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(p, p);
  if (data.n1() > 0) {
    const Eigen::MatrixXd c = data.labelled.rowwise() - mean.transpose();
    scatter.noalias() += c.transpose() * w1.asDiagonal() * c;
  }
  if (data.n2() > 0) {
    const Eigen::MatrixXd c = data.unlabelled.rowwise() - mean.transpose();
    scatter.noalias() += c.transpose() * w2.asDiagonal() * c;
  }
  scatter /= mass;
  return {std::move(mean), 0.5 * (scatter + scatter.transpose())};
}

}  // namespace

SupervisedDataset::SupervisedDataset(Eigen::MatrixXd x1, std::span<const int> classes,
                                     int num_classes, Eigen::MatrixXd x2)
    : labelled(std::move(x1)), labels(classes, num_classes), unlabelled(std::move(x2)) {
  // An empty block may arrive as 0 x 0; give it the other block's width.
  if (labelled.rows() == 0) labelled.resize(0, unlabelled.cols());
  if (unlabelled.rows() == 0) unlabelled.resize(0, labelled.cols());
  validate();
}

void SupervisedDataset::validate() const {
  if (n1() + n2() < 1) throw Error(ErrorKind::input, "dataset has no observations");
  if (labelled.cols() != unlabelled.cols()) {
    throw Error(ErrorKind::input, "labelled and unlabelled blocks differ in dimension");
  }
  if (dim() < 1) throw Error(ErrorKind::input, "dataset has no features");
  if (labels.rows() != n1()) {
    throw Error(ErrorKind::input, "label count differs from labelled row count");
  }
  if (num_classes() < 1) throw Error(ErrorKind::input, "need at least one class");
  if (!labelled.allFinite() || !unlabelled.allFinite()) {
    throw Error(ErrorKind::input, "dataset contains non-finite values");
  }
}

SupervisionWeight::SupervisionWeight(double lambda_c) : lambda_(lambda_c) {
  if (!(lambda_c >= 0.0 && lambda_c <= 1.0)) {
    throw Error(ErrorKind::input, "supervision weight must lie in [0, 1]");
  }
}

double weighted_log_likelihood(const SupervisedDataset& data, const MixtureParams& m,
                               SupervisionWeight w) {
  m.validate();
  check_dims(data, m);
  const FactoredMixture fm(m);
  return evaluate(data, fm, w).wll;
}

MixtureParams weighted_m_step(const SupervisedDataset& data, const Responsibilities& unlabelled_resp,
                              SupervisionWeight w) {
  const int G = data.num_classes();
  if (unlabelled_resp.rows() != data.n2() || (data.n2() > 0 && unlabelled_resp.cols() != G)) {
    throw Error(ErrorKind::input, "responsibility matrix shape does not match the data");
  }
  const double p = static_cast<double>(data.dim());

  MixtureParams out;
  out.pi.resize(G);
  out.components.reserve(static_cast<std::size_t>(G));
  double total = 0.0;
  for (int g = 0; g < G; ++g) {
    const Eigen::VectorXd w1 = w.labelled() * data.labels.indicators().col(g);
    const Eigen::VectorXd w2 = data.n2() > 0
                                   ? Eigen::VectorXd(w.unlabelled() * unlabelled_resp.col(g))
                                   : Eigen::VectorXd(0);
    const double mass = w1.sum() + w2.sum();
    if (!(mass >= kMinComponentMass)) {
      throw Error(ErrorKind::degenerate_component,
                  "component " + std::to_string(g) + " has no effective weight");
    }
    // A full covariance needs at least p+1 supporting rows. Support counts
    // memberships (not weights) of every block that carries positive weight.
    double m_sum = 0.0, m_sq = 0.0;
    if (w.labelled() > 0.0) {
      m_sum += data.labels.indicators().col(g).sum();
      m_sq += data.labels.indicators().col(g).squaredNorm();
    }
    if (w.unlabelled() > 0.0 && data.n2() > 0) {
      m_sum += unlabelled_resp.col(g).sum();
      m_sq += unlabelled_resp.col(g).squaredNorm();
    }
    const double support = m_sq > 0.0 ? m_sum * m_sum / m_sq : 0.0;
    if (support < p + 1.0 - 1e-9) {
      throw Error(ErrorKind::singular_covariance,
                  "component " + std::to_string(g) + " is supported by an effective " +
                      std::to_string(support) + " rows, fewer than dimension + 1");
    }
    out.components.push_back(weighted_moments(data, w1, w2, mass));
    out.pi(g) = mass;
    total += mass;
  }
  out.pi /= total;
  return out;
}

MixtureParams da_fit(const Eigen::MatrixXd& x1, const HardLabels& z1) {
  if (x1.rows() != z1.rows()) throw Error(ErrorKind::input, "label count differs from row count");
  const int G = z1.num_classes();
  const Eigen::Index p = x1.cols();
  MixtureParams out;
  out.pi.resize(G);
  for (int g = 0; g < G; ++g) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(p);
    Eigen::Index count = 0;
    for (Eigen::Index j = 0; j < x1.rows(); ++j) {
      if (z1.classes()[static_cast<std::size_t>(j)] == g) {
        sum += x1.row(j).transpose();
        ++count;
      }
    }
    if (count < 2) {
      throw Error(ErrorKind::insufficient_labels,
                  "class " + std::to_string(g) + " has " + std::to_string(count) +
                      " labelled rows; at least 2 are needed");
    }
    const Eigen::VectorXd mean = sum / static_cast<double>(count);
    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index j = 0; j < x1.rows(); ++j) {
      if (z1.classes()[static_cast<std::size_t>(j)] == g) {
        const Eigen::VectorXd d = x1.row(j).transpose() - mean;
        scatter += d * d.transpose();
      }
    }
    out.pi(g) = static_cast<double>(count) / static_cast<double>(x1.rows());
    out.components.push_back({mean, scatter / static_cast<double>(count)});
  }
  return out;
}

InitialPartition initial_partition(const SupervisedDataset& data, int num_components,
                                   int restarts, std::uint64_t seed) {
  data.validate();
  if (num_components != data.num_classes()) {
    throw Error(ErrorKind::input, "component count does not match the label count");
  }
  Eigen::MatrixXd pooled(data.n1() + data.n2(), data.dim());
  pooled << data.labelled, data.unlabelled;
  const KMeansResult km = kmeans(pooled, num_components, restarts, seed);

  std::vector<int> perm(static_cast<std::size_t>(num_components));
  for (int g = 0; g < num_components; ++g) perm[static_cast<std::size_t>(g)] = g;
  if (data.n1() > 0) {
    const std::span<const int> labelled_clusters(km.assignment.data(),
                                                 static_cast<std::size_t>(data.n1()));
    perm = align_clusters(labelled_clusters, data.labels.classes(), num_components);
  }
  InitialPartition part;
  part.unlabelled_classes.reserve(static_cast<std::size_t>(data.n2()));
  for (Eigen::Index k = 0; k < data.n2(); ++k) {
    const int c = km.assignment[static_cast<std::size_t>(data.n1() + k)];
    part.unlabelled_classes.push_back(perm[static_cast<std::size_t>(c)]);
  }
  return part;
}

MixtureParams initial_params(const SupervisedDataset& data, const InitialPartition& part,
                             SupervisionWeight w) {
  if (static_cast<Eigen::Index>(part.unlabelled_classes.size()) != data.n2()) {
    throw Error(ErrorKind::input, "initial partition does not cover the unlabelled rows");
  }
  return weighted_m_step(data, one_hot(part.unlabelled_classes, data.num_classes()), w);
}

MixtureParams kmeans_init(const SupervisedDataset& data, int num_components, SupervisionWeight w,
                          std::uint64_t seed, int restarts) {
  return initial_params(data, initial_partition(data, num_components, restarts, seed), w);
}

FitResult em_fit_from(const SupervisedDataset& data, const MixtureParams& init,
                      SupervisionWeight w, const EmConfig& cfg) {
  data.validate();
  init.validate();
  check_dims(data, init);
  if (!(cfg.epsilon > 0.0)) throw Error(ErrorKind::input, "epsilon must be positive");
  if (cfg.max_iter < 1) throw Error(ErrorKind::input, "max_iter must be at least 1");
  if (w.labelled() > 0.0 && data.n1() == 0) {
    throw Error(ErrorKind::insufficient_labels, "a positive supervision weight needs labelled rows");
  }
  if (w.unlabelled() > 0.0 && data.n2() == 0) {
    throw Error(ErrorKind::input, "a supervision weight below 1 needs unlabelled rows");
  }
  if (w.unlabelled() == 0.0) {
    const Eigen::VectorXd counts = data.labels.indicators().colwise().sum();
    for (int g = 0; g < data.num_classes(); ++g) {
      if (counts(g) == 0.0) {
        throw Error(ErrorKind::insufficient_labels,
                    "class " + std::to_string(g) + " has no labelled rows");
      }
    }
  }

  FitResult fit;
  fit.params = init;
  Evaluation ev = evaluate(data, FactoredMixture(fit.params), w);
  fit.wll_trace.push_back(ev.wll);
  if (cfg.keep_trajectory) fit.trajectory.push_back(fit.params);

  for (int it = 1; it <= cfg.max_iter; ++it) {
    const Responsibilities resp = normalize(std::move(ev.joint2));
    fit.params = weighted_m_step(data, resp, w);
    ev = evaluate(data, FactoredMixture(fit.params), w);
    const double prev = fit.wll_trace.back();
    fit.wll_trace.push_back(ev.wll);
    if (cfg.keep_trajectory) fit.trajectory.push_back(fit.params);
    fit.iterations = it;
    if (ev.wll - prev < cfg.epsilon) {
      fit.converged = true;
      break;
    }
  }
  if (!std::isfinite(fit.wll_trace.back())) {
    throw Error(ErrorKind::degenerate_component, "weighted log-likelihood is not finite");
  }
  fit.resp = normalize(std::move(ev.joint2));
  fit.hard_assignments = hard_assignments(fit.resp);
  return fit;
}

FitResult em_fit(const SupervisedDataset& data, int num_components, SupervisionWeight w,
                 const EmConfig& cfg) {
  if (num_components < 1) throw Error(ErrorKind::input, "need at least one component");
  return em_fit_from(data, kmeans_init(data, num_components, w, cfg.seed, cfg.restarts), w, cfg);
}

}  // namespace fsc
