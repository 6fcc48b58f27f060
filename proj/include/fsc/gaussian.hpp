#pragma once

#include <Eigen/Dense>

namespace fsc {

struct GaussianParams {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;

  Eigen::Index dim() const { return mean.size(); }
};

/// Cholesky factor of a covariance matrix with its cached log-determinant.
///
/// The input is symmetrized before factoring. When the plain factorization
/// fails, a ridge of 1e-8 * trace/p is added to the diagonal, then 1e-6 *
/// trace/p; if that also fails an Error of kind singular_covariance is thrown.
class SpdFactor {
 public:
  explicit SpdFactor(const Eigen::MatrixXd& covariance);

  const Eigen::MatrixXd& lower() const { return lower_; }
  double log_det() const { return log_det_; }
  /// Ridge actually added to the diagonal (0 when none was needed).
  double ridge() const { return ridge_; }
  Eigen::Index dim() const { return lower_.rows(); }

  /// Squared Mahalanobis norm d' S^-1 d.
  double mahalanobis_sq(const Eigen::VectorXd& d) const;
  /// S^-1 B for a p x k right-hand side.
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;

 private:
  Eigen::MatrixXd lower_;
  double log_det_ = 0.0;
  double ridge_ = 0.0;
};

double log_density(const Eigen::VectorXd& x, const GaussianParams& g);
double log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                   const SpdFactor& factor);

/// Log density of every row of `rows` (n x p) under N(mean, LL').
Eigen::VectorXd log_density_rows(const Eigen::MatrixXd& rows,
                                 const Eigen::VectorXd& mean,
                                 const SpdFactor& factor);

/// KL(g1 || g2) in closed form.
double gaussian_kl(const GaussianParams& g1, const GaussianParams& g2);
double gaussian_kl(const GaussianParams& g1, const SpdFactor& f1,
                   const GaussianParams& g2, const SpdFactor& f2);

}  // namespace fsc
