#include "fsc/weight_select.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <string>

#include "fsc/error.hpp"

namespace fsc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double parse_double(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::input, "not a number: '" + std::string(s) + "'");
  }
  return v;
}

std::optional<FitResult> try_fit(const SupervisedDataset& data, const InitialPartition& init,
                                 double lambda, const EmConfig& cfg, std::string& error) {
  try {
    const SupervisionWeight w(lambda);
    return em_fit_from(data, initial_params(data, init, w), w, cfg);
  } catch (const Error& e) {
    error = std::string(to_string(e.kind())) + ": " + e.what();
    return std::nullopt;
  }
}

}  // namespace

LambdaGrid::LambdaGrid(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw Error(ErrorKind::input, "lambda grid is empty");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!(values_[i] >= 0.0 && values_[i] <= 1.0)) {
      throw Error(ErrorKind::input, "lambda grid values must lie in [0, 1]");
    }
    if (i > 0 && !(values_[i] > values_[i - 1])) {
      throw Error(ErrorKind::input, "lambda grid must be strictly increasing");
    }
  }
}

LambdaGrid LambdaGrid::standard() { return parse("0:1:0.1"); }

LambdaGrid LambdaGrid::parse(std::string_view text) {
  std::vector<double> values;
  if (text.find(':') != std::string_view::npos) {
    const auto c1 = text.find(':');
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string_view::npos) {
      throw Error(ErrorKind::input, "grid must be start:end:step");
    }
    const double start = parse_double(text.substr(0, c1));
    const double end = parse_double(text.substr(c1 + 1, c2 - c1 - 1));
    const double step = parse_double(text.substr(c2 + 1));
    if (!(step > 0.0) || end < start) throw Error(ErrorKind::input, "grid needs step > 0 and end >= start");
    const double span = (end - start) / step;
    const auto count = static_cast<long>(std::floor(span + 1e-9));
    for (long i = 0; i <= count; ++i) {
      // Snap to a short decimal so 0.1 * 3 prints as 0.3.
      const double v = start + static_cast<double>(i) * step;
      values.push_back(std::round(v * 1e12) / 1e12);
    }
  } else {
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto comma = text.find(',', pos);
      const auto piece = text.substr(pos, comma == std::string_view::npos ? text.npos : comma - pos);
      values.push_back(parse_double(piece));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
  }
  return LambdaGrid(std::move(values));
}

std::optional<std::size_t> LambdaGrid::find(double lambda) const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (std::abs(values_[i] - lambda) < 1e-9) return i;
  }
  return std::nullopt;
}

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::fixed: return "fixed";
    case Strategy::n2_ratio: return "n2";
    case Strategy::max_ratio: return "max";
    case Strategy::kl1: return "kl1";
    case Strategy::kl2: return "kl2";
    case Strategy::ari_oracle: return "ari-oracle";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (const Strategy s : {Strategy::fixed, Strategy::n2_ratio, Strategy::max_ratio, Strategy::kl1,
                           Strategy::kl2, Strategy::ari_oracle}) {
    if (name == to_string(s)) return s;
  }
  throw Error(ErrorKind::input, "unknown weight strategy '" + std::string(name) + "'");
}

double lambda_n2(long n1, long n2) {
  if (n1 < 0 || n2 < 0 || n1 + n2 < 1) throw Error(ErrorKind::input, "need n1 + n2 >= 1");
  return static_cast<double>(n2) / static_cast<double>(n1 + n2);
}

double lambda_max(long n1, long n2) {
  if (n1 < 0 || n2 < 0 || n1 + n2 < 1) throw Error(ErrorKind::input, "need n1 + n2 >= 1");
  return static_cast<double>(std::max(n1, n2)) / static_cast<double>(n1 + n2);
}

GridSweep sweep_grid(const SupervisedDataset& data, int num_components, const LambdaGrid& grid,
                     const InitialPartition& init, const EmConfig& cfg) {
  if (num_components != data.num_classes()) {
    throw Error(ErrorKind::input, "component count does not match the label count");
  }
  GridSweep sweep;
  sweep.grid = grid;
  sweep.fits.resize(grid.size());
  sweep.errors.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    sweep.fits[i] = try_fit(data, init, grid[i], cfg, sweep.errors[i]);
  }
  if (const auto i = grid.find(1.0)) {
    sweep.da_anchor = sweep.fits[*i];
    sweep.da_error = sweep.errors[*i];
  } else {
    sweep.da_anchor = try_fit(data, init, 1.0, cfg, sweep.da_error);
  }
  if (const auto i = grid.find(0.0)) {
    sweep.clust_anchor = sweep.fits[*i];
    sweep.clust_error = sweep.errors[*i];
  } else {
    sweep.clust_anchor = try_fit(data, init, 0.0, cfg, sweep.clust_error);
  }
  return sweep;
}

WeightChoice select_kl(const GridSweep& sweep, Strategy variant) {
  if (variant != Strategy::kl1 && variant != Strategy::kl2) {
    throw Error(ErrorKind::input, "select_kl needs the kl1 or kl2 variant");
  }
  if (!sweep.da_anchor) {
    throw Error(ErrorKind::strategy_unavailable, "DA anchor fit failed: " + sweep.da_error);
  }
  if (!sweep.clust_anchor) {
    throw Error(ErrorKind::strategy_unavailable, "clustering anchor fit failed: " + sweep.clust_error);
  }
  const MixtureParams& da = sweep.da_anchor->params;
  const MixtureParams& clust = sweep.clust_anchor->params;

  WeightChoice choice;
  choice.strategy = variant;
  const std::size_t n = sweep.grid.size();
  choice.diagnostics.assign(n, kNaN);
  choice.kl_da.assign(n, kNaN);
  choice.kl_clust.assign(n, kNaN);
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < n; ++i) {
    if (!sweep.fits[i]) continue;
    const MixtureParams& fit = sweep.fits[i]->params;
    try {
      if (variant == Strategy::kl1) {
        choice.kl_da[i] = mixture_kl_matched(da, fit);
        choice.kl_clust[i] = mixture_kl_matched(clust, fit);
      } else {
        choice.kl_da[i] = mixture_kl_matched(fit, da);
        choice.kl_clust[i] = mixture_kl_matched(fit, clust);
      }
    } catch (const Error&) {
      continue;
    }
    choice.diagnostics[i] = choice.kl_da[i] + choice.kl_clust[i];
    if (!best || choice.diagnostics[i] < choice.diagnostics[*best]) best = i;
  }
  if (!best) throw Error(ErrorKind::strategy_unavailable, "no grid weight produced a fit");
  choice.lambda = sweep.grid[*best];
  return choice;
}

WeightChoice select_kl(const SupervisedDataset& data, int num_components, const LambdaGrid& grid,
                       Strategy variant, const EmConfig& cfg) {
  const InitialPartition init = initial_partition(data, num_components, cfg.restarts, cfg.seed);
  return select_kl(sweep_grid(data, num_components, grid, init, cfg), variant);
}

WeightChoice select_ari_oracle(const LambdaGrid& grid,
                               std::span<const std::optional<std::vector<int>>> assignments,
                               std::span<const int> truth) {
  if (assignments.size() != grid.size()) {
    throw Error(ErrorKind::input, "one assignment vector per grid weight is required");
  }
  WeightChoice choice;
  choice.strategy = Strategy::ari_oracle;
  choice.diagnostics.assign(grid.size(), kNaN);
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!assignments[i]) continue;
    choice.diagnostics[i] = ari(*assignments[i], truth);
    if (!best || choice.diagnostics[i] > choice.diagnostics[*best]) best = i;
  }
  if (!best) throw Error(ErrorKind::strategy_unavailable, "no grid weight produced a fit");
  choice.lambda = grid[*best];
  return choice;
}

double wl_maximizing_boundary(const SupervisedDataset& data, const MixtureParams& m) {
  const double q1 = data.n1() > 0 ? weighted_log_likelihood(data, m, SupervisionWeight(1.0)) : 0.0;
  const double q2 = data.n2() > 0 ? weighted_log_likelihood(data, m, SupervisionWeight(0.0)) : 0.0;
  return q1 > q2 ? 1.0 : 0.0;
}

}  // namespace fsc
