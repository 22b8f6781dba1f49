#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "tsgc/diff.hpp"

namespace tsgc {

struct GmmConfig {
  int max_iters = 200;
  double tol = 1e-6;
  int restarts = 5;
  std::uint64_t seed = 0;
  double variance_floor = 1e-6;
};

struct GmmDiagnostics {
  std::vector<double> log_likelihood;  // one entry per E-step of the selected restart
  int iterations = 0;
  bool converged = false;
  bool variance_floor_active = false;
  int best_restart = 0;
};

/// Diagonal-covariance Gaussian mixture.
struct GmmModel {
  int k = 0;
  Eigen::VectorXd weights;
  Matrix means;      // k x H
  Matrix variances;  // k x H
  GmmDiagnostics diagnostics;

  Eigen::Index dim() const { return means.cols(); }
  /// Total log-likelihood of the rows of z.
  double log_likelihood(const Matrix& z) const;
};

/// n x k, rows sum to one.
struct Responsibilities {
  Matrix r;
};

/// EM from k-means++ seeding followed by 10 Lloyd iterations; the best of
/// `cfg.restarts` runs by final log-likelihood is returned (ties keep the
/// lowest restart index).
GmmModel fit_em(const Matrix& z, int k, const GmmConfig& cfg = {});

/// Log-sum-exp normalized posterior p(c | z_i) for every row.
Responsibilities responsibilities(const GmmModel& m, const Matrix& z);

/// Per-row log p(z_i, c) = log w_c + log N(z_i; mean_c, diag var_c), n x k.
Matrix joint_log_density(const Eigen::VectorXd& log_weights, const Matrix& means, const Matrix& variances,
                         const Matrix& z);

/// Normalizes a matrix of per-row log weights into responsibilities.
Responsibilities normalize_log_rows(const Matrix& log_joint);

/// argmax responsibility per row, ties to the lowest component index.
std::vector<int> predict(const GmmModel& m, const Matrix& z);
std::vector<int> argmax_rows(const Matrix& r);

struct ElbowResult {
  int k = 0;
  std::vector<std::pair<int, double>> curve;  // (k, negative log-likelihood)
};

/// Fits one mixture per k and returns the k with the largest discrete second
/// difference of the negative log-likelihood curve. With fewer than three
/// candidates there is no interior point and the smallest k is returned.
ElbowResult elbow_select_k(const Matrix& z, const std::vector<int>& k_range, const GmmConfig& cfg = {});

void write_gmm(const std::filesystem::path& path, const GmmModel& m);
GmmModel read_gmm(const std::filesystem::path& path);

}  // namespace tsgc
