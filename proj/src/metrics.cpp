#include "fsc/metrics.hpp"

#include <map>
#include <unordered_map>

#include "fsc/error.hpp"

namespace fsc {

namespace {

double choose2(double n) { return 0.5 * n * (n - 1.0); }

}  // namespace

Partition compact(std::span<const int> labels) {
  std::unordered_map<int, int> ids;
  Partition out;
  out.reserve(labels.size());
  for (const int l : labels) {
    const auto [it, inserted] = ids.try_emplace(l, static_cast<int>(ids.size()));
    out.push_back(it->second);
  }
  return out;
}

double ari(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::input, "ari: partitions differ in length");
  if (a.size() < 2) throw Error(ErrorKind::undefined_index, "ari needs at least two observations");

  const Partition ca = compact(a);
  const Partition cb = compact(b);
  std::map<std::pair<int, int>, double> table;
  std::unordered_map<int, double> rows, cols;
  for (std::size_t i = 0; i < ca.size(); ++i) {
    table[{ca[i], cb[i]}] += 1.0;
    rows[ca[i]] += 1.0;
    cols[cb[i]] += 1.0;
  }

  double sum_cells = 0.0;
  for (const auto& [key, count] : table) sum_cells += choose2(count);
  double sum_rows = 0.0;
  for (const auto& [key, count] : rows) sum_rows += choose2(count);
  double sum_cols = 0.0;
  for (const auto& [key, count] : cols) sum_cols += choose2(count);

  const double expected = sum_rows * sum_cols / choose2(static_cast<double>(a.size()));
  const double max_index = 0.5 * (sum_rows + sum_cols);
  const double denom = max_index - expected;
  if (denom == 0.0) return ca == cb ? 1.0 : 0.0;
  return (sum_cells - expected) / denom;
}

}  // namespace fsc
