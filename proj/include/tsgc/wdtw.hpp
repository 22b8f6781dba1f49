#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsgc/dataset.hpp"

namespace tsgc {

/// affine: w[d] = 1 + gamma*d.  linear: w[d] = gamma*d (zero cost on the diagonal).
enum class WeightMode { Affine, Linear };

WeightMode parse_weight_mode(const std::string& text);
std::string to_string(WeightMode mode);

struct WdtwConfig {
  double gamma = 0.2;
  std::size_t window = 10;
  WeightMode weight_mode = WeightMode::Affine;

  void validate() const;
  double weight(std::size_t offset) const {
    const double d = static_cast<double>(offset);
    return weight_mode == WeightMode::Affine ? 1.0 + gamma * d : gamma * d;
  }
};

/// Dense symmetric n x n matrix, row-major.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  std::size_t n() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const DistanceMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// Minimum over monotone warping paths (right, down, diagonal steps) inside
/// the band |i-j| <= max(window, |N-M|) of sum w[|i-j|] * |x_i - y_j|.
/// If `cells_visited` is non-null it receives the number of DP cells filled.
double wdtw_distance(std::span<const double> x, std::span<const double> y, const WdtwConfig& cfg,
                     std::size_t* cells_visited = nullptr);

/// All-pairs distances; pairs are spread over `workers` threads. The result
/// does not depend on the worker count.
DistanceMatrix distance_matrix(const Dataset& ds, const WdtwConfig& cfg, std::size_t workers = 1);

/// Distance-matrix cache file: a `WDTW1 n=.. gamma=.. window=.. mode=..`
/// header line, then n rows of n comma-separated shortest-form decimals.
void write_distance_cache(const std::filesystem::path& path, const DistanceMatrix& s, const WdtwConfig& cfg);

struct DistanceCache {
  WdtwConfig cfg;
  DistanceMatrix matrix;
};
DistanceCache read_distance_cache(const std::filesystem::path& path);

/// Returns the cached matrix when the file exists and its header matches
/// (n, cfg) exactly; otherwise nullopt.
std::optional<DistanceMatrix> try_load_distance_cache(const std::filesystem::path& path, std::size_t n,
                                                      const WdtwConfig& cfg);

}  // namespace tsgc
