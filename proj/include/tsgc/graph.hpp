#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tsgc/wdtw.hpp"

namespace tsgc {

/// Binary, symmetric, zero-diagonal adjacency obtained by thresholding a
/// distance matrix. Density is counted over the n(n-1) off-diagonal entries.
struct AdjacencyView {
  std::size_t n = 0;
  std::vector<std::uint8_t> a;  // row-major n x n
  double delta = 0.0;
  double alpha_target = 0.0;
  double alpha_achieved = 0.0;

  bool edge(std::size_t i, std::size_t j) const { return a[i * n + j] != 0; }
  std::size_t edge_count() const;  // unordered pairs
  std::size_t degree(std::size_t i) const;
};

/// D^-1/2 (A + I) D^-1/2 in dense row-major form.
struct NormalizedAdjacency {
  std::size_t n = 0;
  std::vector<double> m;

  double operator()(std::size_t i, std::size_t j) const { return m[i * n + j]; }
};

/// delta = (k+1)-th smallest off-diagonal entry, k = round(alpha * n(n-1)),
/// clamped so that delta is at most the largest entry.
double threshold_from_density(const DistanceMatrix& s, double alpha);

/// a[i][j] = 1 iff i != j and S[i][j] < delta. alpha_target is left at 0;
/// use `adjacency_from_density` to fill both density fields.
AdjacencyView build_adjacency(const DistanceMatrix& s, double delta);

AdjacencyView adjacency_from_density(const DistanceMatrix& s, double alpha);

NormalizedAdjacency normalize_adjacency(const AdjacencyView& a);

/// Edge list `i j` (0-based, i<j) under a
/// `# n=.. delta=.. alpha=.. alpha_achieved=..` header.
void write_edge_list(const std::filesystem::path& path, const AdjacencyView& a);
AdjacencyView read_edge_list(const std::filesystem::path& path);

}  // namespace tsgc
