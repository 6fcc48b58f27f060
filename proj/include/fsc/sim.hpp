#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fsc/data_io.hpp"
#include "fsc/metrics.hpp"
#include "fsc/weight_select.hpp"
#include "fsc/wl_em.hpp"

namespace fsc {

/// Two-component bivariate design: component 1 is N((0,0), [[1,.7],[.7,1]]),
/// component 2 is N((0,delta), I), mixed with proportion pi.
struct SimSpec {
  long n = 300;
  double delta = 1.0;
  double pi = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Sample {
  Eigen::MatrixXd x;
  Partition truth;
};

Sample simulate(const SimSpec& spec);

enum class MaskMode { random, biased };

struct MaskSpec {
  double p_labelled = 0.1;
  MaskMode mode = MaskMode::random;

  void validate() const;
};

struct MaskedData {
  SupervisedDataset data;
  std::vector<long> labelled_rows;    // original row indices, ascending
  std::vector<long> unlabelled_rows;  // original row indices, ascending
  Partition labelled_truth;
  Partition unlabelled_truth;
};

/// Hides the labels of all but round(p * n) rows.
///
/// Random mode draws the labelled rows uniformly without replacement. Biased
/// mode (two classes only) labels the class-0 rows with the largest first
/// coordinate and the class-1 rows with the smallest, with per-class quotas
/// proportional to class sizes. Throws degenerate_mask when some class ends
/// up with no labelled row, unless `allow_missing_class` is set.
MaskedData mask_labels(const Partition& truth, const Eigen::MatrixXd& x, int num_classes,
                       const MaskSpec& mask, std::uint64_t seed, bool allow_missing_class = false);

/// Deterministic per-unit seed derived from a master seed and a path of
/// indices (replicate, design point, purpose).
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

/// First path element of the seeds run_experiment derives per unit:
/// {simulate, design, replicate}, {mask, design, mask, replicate} and
/// {init, design, mask, replicate}.
namespace seed_purpose {
inline constexpr std::uint64_t simulate = 1;
inline constexpr std::uint64_t mask = 2;
inline constexpr std::uint64_t init = 3;
}  // namespace seed_purpose

struct ExperimentConfig {
  std::vector<double> deltas{1, 2, 3, 4, 5};  // simulation mode only
  SimSpec sim;
  /// Real-data mode: replicates re-mask this dataset instead of simulating.
  std::optional<Dataset> dataset;
  std::vector<double> masks{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  MaskMode mode = MaskMode::random;
  LambdaGrid grid = LambdaGrid::standard();
  int reps = 100;
  std::vector<Strategy> strategies;
  EmConfig em;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool ari_all_rows = false;

  int num_components() const;
  void validate() const;
};

struct ResultRow {
  int replicate = 0;
  double delta = 0.0;  // NaN in real-data mode
  double p = 0.0;      // labelled fraction
  double lambda = 0.0;
  std::string strategy;  // "grid" for fixed grid weights
  double ari = 0.0;
  double wll = 0.0;
  int iters = 0;
  bool converged = false;
  std::string error;  // empty on success
  // Matching-based KL of this fit against the anchors (grid rows only):
  // forward = KL(anchor || fit), reverse = KL(fit || anchor).
  double kl_da_fwd = 0.0, kl_clust_fwd = 0.0, kl_da_rev = 0.0, kl_clust_rev = 0.0;

  bool ok() const { return error.empty(); }
};

struct ResultTable {
  std::vector<ResultRow> rows;
};

ResultTable run_experiment(const ExperimentConfig& cfg);

struct AggregateRow {
  double delta = 0.0, p = 0.0, lambda = 0.0;
  double mean_ari = 0.0, se_ari = 0.0;
  int n_ok = 0, n_fail = 0;
};

struct StrategyAggregateRow {
  double delta = 0.0, p = 0.0;
  std::string strategy;
  double mean_lambda = 0.0, mean_ari = 0.0, se_ari = 0.0;
  int n_ok = 0, n_fail = 0;
};

struct KlAggregateRow {
  double delta = 0.0, p = 0.0, lambda = 0.0;
  double kl_da_fwd = 0.0, kl_clust_fwd = 0.0, kl_da_rev = 0.0, kl_clust_rev = 0.0;
  int n_ok = 0;
};

struct Aggregates {
  std::vector<AggregateRow> grid;
  /// Per-replicate strategies averaged, plus "ari-oracle-mean": the grid
  /// weight with the highest mean ARI at each design point.
  std::vector<StrategyAggregateRow> strategies;
  std::vector<KlAggregateRow> kl;
};

Aggregates aggregate(const ResultTable& table);

void write_runs_csv(std::ostream& out, const ResultTable& table);
void write_aggregate_csv(std::ostream& out, const Aggregates& agg);
void write_strategies_csv(std::ostream& out, const Aggregates& agg);
void write_kl_csv(std::ostream& out, const Aggregates& agg);

/// Shortest round-trip decimal, "NA" for NaN.
std::string format_number(double v);

}  // namespace fsc
