#pragma once

// Variational graph autoencoder with a Gaussian-mixture prior on the latent
// space. Two-layer GCN encoder with a shared first layer, inner-product
// decoder, and a mixture-regularized objective.

#include <cstdint>
#include <vector>

#include "tsgc/adam.hpp"
#include "tsgc/dataset.hpp"
#include "tsgc/diff.hpp"
#include "tsgc/gmm.hpp"
#include "tsgc/graph.hpp"

namespace tsgc {

enum class Mode { Train, Infer };

inline constexpr double kDecoderClamp = 1e-7;
inline constexpr double kLogVarBound = 10.0;

struct EncoderParams {
  DiffMatrix w0;       // features x hidden, shared by both heads
  DiffMatrix w_mu;     // hidden x latent
  DiffMatrix w_sigma;  // hidden x latent

  static EncoderParams glorot(Eigen::Index features, Eigen::Index hidden, Eigen::Index latent, Rng& rng);
  std::vector<DiffMatrix> parameters() const { return {w0, w_mu, w_sigma}; }
};

struct MixturePrior {
  DiffMatrix pi_logits;      // 1 x K, weights are softmax(pi_logits)
  DiffMatrix mu_tilde;       // K x H
  DiffMatrix log_var_tilde;  // K x H

  static MixturePrior from_gmm(const GmmModel& gmm);
  int k() const { return static_cast<int>(mu_tilde.rows()); }
  Eigen::VectorXd weights() const;
  void clamp_log_var();
  std::vector<DiffMatrix> parameters() const { return {pi_logits, mu_tilde, log_var_tilde}; }
};

struct TrainConfig {
  double lambda = 0.001;
  double lr = 1e-4;
  int epochs = 500;
  int pretrain_epochs = 100;
  int hidden = 32;
  int latent = 16;
  double dropout_p = 0.01;
  int k = 2;
  std::uint64_t seed = 0;
  bool eval_on_mu = true;
  /// Up-weights the A_ij = 1 terms of the reconstruction loss by
  /// (#zeros / #ones). Off by default.
  bool pos_weight = false;
  GmmConfig gmm;

  void validate() const;
};

struct LossBreakdown {
  double recon = 0.0;
  double reg = 0.0;
  double total = 0.0;
};

struct Encoding {
  DiffMatrix mu;
  DiffMatrix log_sigma;
};

/// Dense n x m feature matrix; shorter series are right-padded with zeros.
Matrix feature_matrix(const Dataset& ds);
Matrix to_matrix(const NormalizedAdjacency& a);
Matrix to_matrix(const AdjacencyView& a);

/// mu = A relu(A X W0) W_mu, log_sigma = A relu(A X W0) W_sigma with dropout on
/// the hidden layer in train mode. log_sigma is clamped to half the
/// log-variance bound.
Encoding encode(const DiffMatrix& x, const DiffMatrix& a_norm, const EncoderParams& p, Mode mode, Rng& rng,
                double dropout_p);

/// z = mu + exp(log_sigma) * eps in train mode; z = mu in infer mode.
DiffMatrix reparameterize(const DiffMatrix& mu, const DiffMatrix& log_sigma, Rng& rng, Mode mode);
DiffMatrix reparameterize(const DiffMatrix& mu, const DiffMatrix& log_sigma, const Matrix& eps);

/// sigmoid(z z^T), clamped to [1e-7, 1 - 1e-7].
DiffMatrix decode(const DiffMatrix& z);

/// Mean binary cross-entropy over all n^2 entries (zero diagonal included).
DiffMatrix recon_loss(const Matrix& adjacency, const DiffMatrix& a_hat, bool pos_weight = false);

/// p(c | z_i) under the prior, treated as data (no gradient).
Responsibilities posterior_responsibilities(const Matrix& z, const MixturePrior& prior);

/// Mixture regularizer; q is held constant. With lambda = 1,
/// recon + reg is the negative evidence lower bound.
DiffMatrix reg_loss(const DiffMatrix& mu, const DiffMatrix& log_sigma, const Matrix& q, const MixturePrior& prior);

/// Per-epoch randomness, drawn up front so a loss evaluation can be replayed.
struct EpochNoise {
  Matrix dropout_mask;  // n x hidden, entries 0 or 1/(1-p); empty = no dropout
  Matrix eps;           // n x H; empty = use mu
};

EpochNoise draw_noise(Eigen::Index n, Eigen::Index hidden, Eigen::Index latent, double dropout_p, bool sample_z,
                      Rng& rng);

struct LossGraph {
  DiffMatrix total;
  DiffMatrix recon;
  DiffMatrix reg;  // invalid when the regularizer was not requested
  Matrix z;
  Responsibilities q;
};

/// Full objective for one epoch. When `q_override` is non-null it replaces the
/// responsibilities computed from the sampled z.
LossGraph build_loss(const Matrix& ax, const DiffMatrix& a_norm, const Matrix& adjacency, const EncoderParams& enc,
                     const MixturePrior* prior, double lambda, const EpochNoise& noise, bool pos_weight,
                     const Matrix* q_override = nullptr);

struct TrainResult {
  EncoderParams encoder;
  MixturePrior prior;
  Matrix embeddings;
  std::vector<LossBreakdown> pretrain_history;
  std::vector<LossBreakdown> history;
  GmmModel init_gmm;
};

/// Stage-wise driver so callers (e.g. elbow selection) can stop after
/// pretraining and choose K before the mixture phase.
class Trainer {
 public:
  Trainer(const Dataset& ds, const AdjacencyView& a, TrainConfig cfg);

  void pretrain();
  /// Fits a K-component mixture on the current embeddings and copies it into the prior.
  void init_prior(int k);
  void fit();
  Matrix embed() const;
  TrainResult result() const;

  const TrainConfig& config() const { return cfg_; }

 private:
  LossBreakdown step(bool with_prior, AdamState& state, std::uint64_t epoch, const char* phase);

  TrainConfig cfg_;
  Matrix x_;
  Matrix ax_;  // A_norm X, constant across epochs
  Matrix adjacency_;
  DiffMatrix a_norm_;
  EncoderParams enc_;
  MixturePrior prior_;
  bool has_prior_ = false;
  GmmModel init_gmm_;
  std::vector<LossBreakdown> pretrain_history_;
  std::vector<LossBreakdown> history_;
};

/// Pretrain, mixture initialization, joint training, final embeddings.
TrainResult train(const Dataset& ds, const AdjacencyView& a, const TrainConfig& cfg);

struct ClusterResult {
  std::vector<int> assignments;
  GmmModel gmm;
};

/// Fresh mixture fit on the embeddings, argmax assignments.
ClusterResult cluster(const Matrix& embeddings, int k, const GmmConfig& cfg);

}  // namespace tsgc
