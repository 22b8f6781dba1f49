#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace tsgc {

/// Counts of co-membership between a reference and a predicted partition.
/// Rows follow the sorted distinct truth ids, columns the sorted predicted ids.
struct ContingencyTable {
  std::vector<int> truth_ids;
  std::vector<int> pred_ids;
  std::vector<std::vector<std::int64_t>> counts;
  std::vector<std::int64_t> row_sums;
  std::vector<std::int64_t> col_sums;
  std::int64_t n = 0;
};

ContingencyTable contingency(std::span<const int> truth, std::span<const int> pred);

struct PairCounts {
  std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
};

/// Unordered-pair agreement counts computed from the contingency table.
PairCounts pair_counts(std::span<const int> truth, std::span<const int> pred);

/// (TP + TN) / C(n, 2). Requires n >= 2.
double rand_index(std::span<const int> truth, std::span<const int> pred);

/// Mutual information over the geometric mean of the two entropies.
/// A single-cluster side has zero entropy: returns 1 if both sides are a
/// single cluster, otherwise 0.
double nmi(std::span<const int> truth, std::span<const int> pred);

}  // namespace tsgc
