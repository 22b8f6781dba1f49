#include "tsgc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "tsgc/common.hpp"

namespace tsgc {
namespace {

void check_lengths(std::span<const int> truth, std::span<const int> pred) {
  if (truth.size() != pred.size()) {
    throw Error("label length mismatch: " + std::to_string(truth.size()) + " vs " + std::to_string(pred.size()));
  }
}

std::int64_t choose2(std::int64_t m) { return m * (m - 1) / 2; }

}  // namespace

ContingencyTable contingency(std::span<const int> truth, std::span<const int> pred) {
  check_lengths(truth, pred);
  ContingencyTable t;
  std::map<int, std::size_t> rows, cols;
  for (int v : truth) rows.emplace(v, 0);
  for (int v : pred) cols.emplace(v, 0);
  for (auto& [id, idx] : rows) {
    idx = t.truth_ids.size();
    t.truth_ids.push_back(id);
  }
  for (auto& [id, idx] : cols) {
    idx = t.pred_ids.size();
    t.pred_ids.push_back(id);
  }
  t.counts.assign(rows.size(), std::vector<std::int64_t>(cols.size(), 0));
  t.row_sums.assign(rows.size(), 0);
  t.col_sums.assign(cols.size(), 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto r = rows[truth[i]];
    const auto c = cols[pred[i]];
    ++t.counts[r][c];
    ++t.row_sums[r];
    ++t.col_sums[c];
  }
  t.n = static_cast<std::int64_t>(truth.size());
  return t;
}

PairCounts pair_counts(std::span<const int> truth, std::span<const int> pred) {
  const auto t = contingency(truth, pred);
  std::int64_t same_both = 0, same_truth = 0, same_pred = 0;
  for (const auto& row : t.counts)
    for (auto v : row) same_both += choose2(v);
  for (auto v : t.row_sums) same_truth += choose2(v);
  for (auto v : t.col_sums) same_pred += choose2(v);
  PairCounts pc;
  pc.tp = same_both;
  pc.fp = same_pred - same_both;
  pc.fn = same_truth - same_both;
  pc.tn = choose2(t.n) - pc.tp - pc.fp - pc.fn;
  return pc;
}

double rand_index(std::span<const int> truth, std::span<const int> pred) {
  check_lengths(truth, pred);
  if (truth.size() < 2) throw Error("rand_index: need at least 2 items");
  const auto pc = pair_counts(truth, pred);
  return static_cast<double>(pc.tp + pc.tn) / static_cast<double>(pc.tp + pc.tn + pc.fp + pc.fn);
}

double nmi(std::span<const int> truth, std::span<const int> pred) {
  check_lengths(truth, pred);
  if (truth.empty()) throw Error("nmi: empty labels");
  const auto t = contingency(truth, pred);
  const bool single_truth = t.truth_ids.size() == 1;
  const bool single_pred = t.pred_ids.size() == 1;
  if (single_truth || single_pred) return single_truth && single_pred ? 1.0 : 0.0;

  const double n = static_cast<double>(t.n);
  double mi = 0.0;
  for (std::size_t i = 0; i < t.counts.size(); ++i) {
    for (std::size_t j = 0; j < t.counts[i].size(); ++j) {
      const double nij = static_cast<double>(t.counts[i][j]);
      if (nij == 0.0) continue;
      mi += nij * std::log(n * nij / (static_cast<double>(t.row_sums[i]) * static_cast<double>(t.col_sums[j])));
    }
  }
  double ht = 0.0, hp = 0.0;
  for (auto g : t.row_sums) ht += static_cast<double>(g) * std::log(static_cast<double>(g) / n);
  for (auto p : t.col_sums) hp += static_cast<double>(p) * std::log(static_cast<double>(p) / n);
  const double value = mi / std::sqrt(ht * hp);
  return std::clamp(value, 0.0, 1.0);
}

}  // namespace tsgc
