#pragma once

#include <span>
#include <vector>

namespace fsc {

/// Class index per observation.
using Partition = std::vector<int>;

/// Relabels classes to 0..G-1 in order of first appearance.
Partition compact(std::span<const int> labels);

/// Hubert-Arabie adjusted Rand index. Symmetric and invariant to class
/// renaming. When the chance-corrected denominator vanishes the result is 1
/// for identical partitions and 0 otherwise. Throws undefined_index for n < 2.
double ari(std::span<const int> a, std::span<const int> b);

}  // namespace fsc
