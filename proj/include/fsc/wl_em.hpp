#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fsc/mixture.hpp"

namespace fsc {

/// Labelled block (X1, Z1) plus unlabelled block X2. Rows are observations.
struct SupervisedDataset {
  Eigen::MatrixXd labelled;
  HardLabels labels;
  Eigen::MatrixXd unlabelled;

  SupervisedDataset() = default;
  SupervisedDataset(Eigen::MatrixXd x1, std::span<const int> classes, int num_classes,
                    Eigen::MatrixXd x2);

  Eigen::Index n1() const { return labelled.rows(); }
  Eigen::Index n2() const { return unlabelled.rows(); }
  Eigen::Index dim() const { return labelled.cols(); }
  int num_classes() const { return labels.num_classes(); }

  void validate() const;
};

/// Supervision weight lambda_c: labelled rows get lambda_c, unlabelled rows
/// get 1 - lambda_c.
class SupervisionWeight {
 public:
  explicit SupervisionWeight(double lambda_c);

  double lambda_c() const { return lambda_; }
  double labelled() const { return lambda_; }
  double unlabelled() const { return 1.0 - lambda_; }

 private:
  double lambda_;
};

struct EmConfig {
  double epsilon = 1e-5;
  int max_iter = 1000;
  int restarts = 10;          // k-means restarts used for initialization
  std::uint64_t seed = 0;     // k-means seed
  bool keep_trajectory = false;
};

struct FitResult {
  MixtureParams params;
  Responsibilities resp;              // for the unlabelled rows
  std::vector<int> hard_assignments;  // argmax of resp, lowest index on ties
  std::vector<double> wll_trace;      // weighted log-likelihood, initial value first
  int iterations = 0;
  bool converged = false;
  std::vector<MixtureParams> trajectory;  // filled when EmConfig::keep_trajectory
};

double weighted_log_likelihood(const SupervisedDataset& data, const MixtureParams& m,
                               SupervisionWeight w);

/// Closed-form maximizer of the weighted complete-data objective given
/// memberships for the unlabelled rows (labelled rows keep their labels).
///
/// Throws degenerate_component when a component's weighted mass is below
/// 1e-10, and singular_covariance when its weights are concentrated on too
/// few rows to support a full covariance (effective sample size below p+1).
MixtureParams weighted_m_step(const SupervisedDataset& data, const Responsibilities& unlabelled_resp,
                              SupervisionWeight w);

/// Plug-in discriminant-analysis estimates from labelled rows only.
MixtureParams da_fit(const Eigen::MatrixXd& x1, const HardLabels& z1);

struct KMeansResult {
  std::vector<int> assignment;
  Eigen::MatrixXd centres;  // k x p
  double within_ss = 0.0;
};

/// k-means++ seeding followed by Lloyd iterations; the best of `restarts`
/// runs by within-cluster sum of squares is returned.
KMeansResult kmeans(const Eigen::MatrixXd& rows, int k, int restarts, std::uint64_t seed,
                    int max_iter = 100);

/// Permutation cluster -> class maximizing agreement on the labelled rows.
/// Exhaustive search for k <= 6, Hungarian assignment above.
std::vector<int> align_clusters(std::span<const int> clusters, std::span<const int> classes, int k);

/// Hard class memberships for the unlabelled rows used to seed EM. One
/// partition is shared by every weight in a sweep.
struct InitialPartition {
  std::vector<int> unlabelled_classes;
};

InitialPartition initial_partition(const SupervisedDataset& data, int num_components,
                                   int restarts, std::uint64_t seed);
MixtureParams initial_params(const SupervisedDataset& data, const InitialPartition& part,
                             SupervisionWeight w);
MixtureParams kmeans_init(const SupervisedDataset& data, int num_components, SupervisionWeight w,
                          std::uint64_t seed, int restarts = 10);

FitResult em_fit_from(const SupervisedDataset& data, const MixtureParams& init,
                      SupervisionWeight w, const EmConfig& cfg);
FitResult em_fit(const SupervisedDataset& data, int num_components, SupervisionWeight w,
                 const EmConfig& cfg);

}  // namespace fsc
