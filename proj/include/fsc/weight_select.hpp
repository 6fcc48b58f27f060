#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fsc/metrics.hpp"
#include "fsc/wl_em.hpp"

namespace fsc {

/// Strictly increasing supervision weights in [0, 1].
class LambdaGrid {
 public:
  explicit LambdaGrid(std::vector<double> values);

  /// 0, 0.1, ..., 1.0
  static LambdaGrid standard();
  /// "start:end:step", inclusive of `end` when the step divides the range,
  /// or a comma-separated list of values.
  static LambdaGrid parse(std::string_view text);

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  /// Index of a grid value within 1e-9 of `lambda`, if any.
  std::optional<std::size_t> find(double lambda) const;

 private:
  std::vector<double> values_;
};

enum class Strategy { fixed, n2_ratio, max_ratio, kl1, kl2, ari_oracle };

const char* to_string(Strategy s);
/// Accepts the CLI spellings: fixed, n2, max, kl1, kl2, ari-oracle.
Strategy parse_strategy(std::string_view name);

struct WeightChoice {
  Strategy strategy = Strategy::fixed;
  double lambda = 0.0;
  /// Per-grid criterion values (KL sum or ARI); NaN where a fit failed.
  std::vector<double> diagnostics;
  /// KL terms against the DA and clustering anchors (KL strategies only).
  std::vector<double> kl_da;
  std::vector<double> kl_clust;
};

/// n2 / n: the share of unlabelled rows.
double lambda_n2(long n1, long n2);
/// max(n1, n2) / n.
double lambda_max(long n1, long n2);

/// Fits at every grid weight from one shared initial partition, plus the
/// DA (lambda = 1) and clustering (lambda = 0) anchors. Failed fits keep
/// their error message instead of a result.
struct GridSweep {
  LambdaGrid grid{std::vector<double>{0.0}};
  std::vector<std::optional<FitResult>> fits;
  std::vector<std::string> errors;
  std::optional<FitResult> da_anchor;
  std::optional<FitResult> clust_anchor;
  std::string da_error;
  std::string clust_error;
};

GridSweep sweep_grid(const SupervisedDataset& data, int num_components, const LambdaGrid& grid,
                     const InitialPartition& init, const EmConfig& cfg);

/// Kl1 minimizes KL(DA || fit) + KL(clust || fit); kl2 swaps the arguments.
WeightChoice select_kl(const GridSweep& sweep, Strategy variant);
WeightChoice select_kl(const SupervisedDataset& data, int num_components, const LambdaGrid& grid,
                       Strategy variant, const EmConfig& cfg);

/// Grid weight whose hard assignments best match `truth`; ties go to the
/// smaller weight and missing assignments (failed fits) are skipped.
WeightChoice select_ari_oracle(const LambdaGrid& grid,
                               std::span<const std::optional<std::vector<int>>> assignments,
                               std::span<const int> truth);

/// The weighted log-likelihood is linear in lambda_c, so maximizing it over
/// the weight always lands on a boundary. Returns that boundary (0 or 1) for
/// fixed parameters; diagnostic only, never used as a selection strategy.
double wl_maximizing_boundary(const SupervisedDataset& data, const MixtureParams& m);

}  // namespace fsc
