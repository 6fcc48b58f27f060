#include "fsc/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fsc/error.hpp"

namespace fsc {

void MixtureParams::validate() const {
  const int g = num_components();
  if (g < 1) throw Error(ErrorKind::input, "mixture needs at least one component");
  if (pi.size() != g) {
    throw Error(ErrorKind::input, "mixing proportion count differs from component count");
  }
  if ((pi.array() <= 0.0).any() || !pi.allFinite()) {
    throw Error(ErrorKind::input, "mixing proportions must be positive");
  }
  if (std::abs(pi.sum() - 1.0) > 1e-10) {
    throw Error(ErrorKind::input, "mixing proportions must sum to 1");
  }
  const Eigen::Index p = dim();
  for (const auto& c : components) {
    if (c.mean.size() != p || c.covariance.rows() != p || c.covariance.cols() != p) {
      throw Error(ErrorKind::input, "mixture components differ in dimension");
    }
  }
}

HardLabels::HardLabels(std::span<const int> classes, int num_classes)
    : indicators_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(classes.size()), num_classes)),
      classes_(classes.begin(), classes.end()) {
  for (std::size_t j = 0; j < classes.size(); ++j) {
    const int c = classes[j];
    if (c < 0 || c >= num_classes) {
      throw Error(ErrorKind::input, "class index " + std::to_string(c) +
                                        " outside [0, " + std::to_string(num_classes) + ")");
    }
    indicators_(static_cast<Eigen::Index>(j), c) = 1.0;
  }
}

FactoredMixture::FactoredMixture(const MixtureParams& m) : params_(m) {
  factors_.reserve(m.components.size());
  for (const auto& c : m.components) factors_.emplace_back(c.covariance);
}

Eigen::MatrixXd FactoredMixture::joint_log_densities(const Eigen::MatrixXd& rows) const {
  const int G = params_.num_components();
  Eigen::MatrixXd out(rows.rows(), G);
  for (int g = 0; g < G; ++g) {
    out.col(g) = log_density_rows(rows, params_.components[static_cast<std::size_t>(g)].mean,
                                  factors_[static_cast<std::size_t>(g)])
                     .array() +
                 std::log(params_.pi(g));
  }
  return out;
}

Eigen::VectorXd log_sum_exp_rows(const Eigen::MatrixXd& log_weights) {
  Eigen::VectorXd out(log_weights.rows());
  for (Eigen::Index i = 0; i < log_weights.rows(); ++i) {
    const double top = log_weights.row(i).maxCoeff();
    if (!std::isfinite(top)) {
      out(i) = top;
      continue;
    }
    out(i) = top + std::log((log_weights.row(i).array() - top).exp().sum());
  }
  return out;
}

double mixture_log_density(const Eigen::VectorXd& x, const MixtureParams& m) {
  m.validate();
  if (x.size() != m.dim()) throw Error(ErrorKind::input, "mixture_log_density: dimension mismatch");
  const FactoredMixture fm(m);
  return log_sum_exp_rows(fm.joint_log_densities(x.transpose()))(0);
}

Responsibilities responsibilities(const Eigen::MatrixXd& rows, const FactoredMixture& m) {
  if (rows.cols() != m.params().dim()) {
    throw Error(ErrorKind::input, "responsibilities: dimension mismatch");
  }
  if (!rows.allFinite()) throw Error(ErrorKind::input, "responsibilities: non-finite input");
  Eigen::MatrixXd logw = m.joint_log_densities(rows);
  const Eigen::VectorXd norm = log_sum_exp_rows(logw);
  logw.colwise() -= norm;
  return logw.array().exp().matrix();
}

Responsibilities responsibilities(const Eigen::MatrixXd& rows, const MixtureParams& m) {
  m.validate();
  return responsibilities(rows, FactoredMixture(m));
}

std::vector<int> hard_assignments(const Responsibilities& resp) {
  std::vector<int> out(static_cast<std::size_t>(resp.rows()));
  for (Eigen::Index i = 0; i < resp.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index g = 1; g < resp.cols(); ++g) {
      if (resp(i, g) > resp(i, best)) best = g;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

double mixture_kl_matched(const MixtureParams& m1, const MixtureParams& m2) {
  if (m1.num_components() != m2.num_components()) {
    throw Error(ErrorKind::input, "mixture_kl_matched: component counts differ");
  }
  if (m1.dim() != m2.dim()) throw Error(ErrorKind::input, "mixture_kl_matched: dimension mismatch");
  constexpr double kFloor = 1e-12;
  double total = 0.0;
  for (int g = 0; g < m1.num_components(); ++g) {
    const auto k = static_cast<std::size_t>(g);
    const double p1 = std::max(m1.pi(g), kFloor);
    const double p2 = std::max(m2.pi(g), kFloor);
    total += p1 * (gaussian_kl(m1.components[k], m2.components[k]) + std::log(p1 / p2));
  }
  return total;
}

}  // namespace fsc
