#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fsc/gaussian.hpp"

namespace fsc {

/// Mixing proportions plus one Gaussian per component.
struct MixtureParams {
  Eigen::VectorXd pi;
  std::vector<GaussianParams> components;

  int num_components() const { return static_cast<int>(components.size()); }
  Eigen::Index dim() const { return components.empty() ? 0 : components.front().dim(); }

  /// Throws Error(input) unless pi > 0, sum(pi) = 1 (1e-10) and all
  /// components share one dimension.
  void validate() const;
};

/// One-hot class indicators for labelled rows (n1 x G).
class HardLabels {
 public:
  HardLabels() = default;
  HardLabels(std::span<const int> classes, int num_classes);

  const Eigen::MatrixXd& indicators() const { return indicators_; }
  Eigen::Index rows() const { return indicators_.rows(); }
  int num_classes() const { return static_cast<int>(indicators_.cols()); }
  const std::vector<int>& classes() const { return classes_; }

 private:
  Eigen::MatrixXd indicators_;
  std::vector<int> classes_;
};

/// Soft memberships of unlabelled rows; every row sums to 1.
using Responsibilities = Eigen::MatrixXd;

/// Factored components of a mixture, reused across many density evaluations.
class FactoredMixture {
 public:
  explicit FactoredMixture(const MixtureParams& m);

  const MixtureParams& params() const { return params_; }
  const SpdFactor& factor(int g) const { return factors_[static_cast<std::size_t>(g)]; }

  /// n x G matrix of log pi_g + log phi(x_i | theta_g).
  Eigen::MatrixXd joint_log_densities(const Eigen::MatrixXd& rows) const;

 private:
  MixtureParams params_;
  std::vector<SpdFactor> factors_;
};

double mixture_log_density(const Eigen::VectorXd& x, const MixtureParams& m);

/// log sum_g exp(row_g) for each row of a log-weight matrix.
Eigen::VectorXd log_sum_exp_rows(const Eigen::MatrixXd& log_weights);

Responsibilities responsibilities(const Eigen::MatrixXd& rows, const MixtureParams& m);
Responsibilities responsibilities(const Eigen::MatrixXd& rows, const FactoredMixture& m);

/// Argmax per row, ties broken toward the lowest index.
std::vector<int> hard_assignments(const Responsibilities& resp);

/// Matching-based approximation of KL(m1 || m2): components are paired by
/// index and proportions are clamped at 1e-12 before the log ratio.
double mixture_kl_matched(const MixtureParams& m1, const MixtureParams& m2);

}  // namespace fsc
