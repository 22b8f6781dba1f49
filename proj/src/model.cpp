#include "tsgc/model.hpp"

#include <cmath>
#include <random>
#include <string>

namespace tsgc {
namespace {

constexpr double kLogSigmaBound = kLogVarBound / 2.0;

Encoding encode_from_ax(const DiffMatrix& ax, const DiffMatrix& a_norm, const EncoderParams& p,
                        const Matrix* dropout_mask) {
  DiffMatrix hidden = relu(matmul(ax, p.w0));
  if (dropout_mask && dropout_mask->size() > 0) hidden = apply_mask(hidden, *dropout_mask);
  const DiffMatrix propagated = matmul(a_norm, hidden);
  Encoding out;
  out.mu = matmul(propagated, p.w_mu);
  out.log_sigma = clamp(matmul(propagated, p.w_sigma), -kLogSigmaBound, kLogSigmaBound);
  return out;
}

}  // namespace

EncoderParams EncoderParams::glorot(Eigen::Index features, Eigen::Index hidden, Eigen::Index latent, Rng& rng) {
  EncoderParams p;
  p.w0 = glorot_init(features, hidden, rng);
  p.w_mu = glorot_init(hidden, latent, rng);
  p.w_sigma = glorot_init(hidden, latent, rng);
  return p;
}

MixturePrior MixturePrior::from_gmm(const GmmModel& gmm) {
  MixturePrior prior;
  Matrix logits(1, gmm.k);
  for (int c = 0; c < gmm.k; ++c) logits(0, c) = std::log(std::max(gmm.weights(c), 1e-300));
  prior.pi_logits = DiffMatrix::parameter(std::move(logits));
  prior.mu_tilde = DiffMatrix::parameter(gmm.means);
  prior.log_var_tilde = DiffMatrix::parameter(gmm.variances.array().log().matrix());
  prior.clamp_log_var();
  return prior;
}

Eigen::VectorXd MixturePrior::weights() const {
  const Eigen::RowVectorXd logits = pi_logits.value().row(0);
  const double mx = logits.maxCoeff();
  Eigen::VectorXd w = (logits.array() - mx).exp().transpose();
  return w / w.sum();
}

void MixturePrior::clamp_log_var() {
  auto& v = log_var_tilde.mutable_value();
  v = v.cwiseMax(-kLogVarBound).cwiseMin(kLogVarBound);
}

void TrainConfig::validate() const {
  if (!(lambda >= 0.0)) throw Error("train: lambda must be >= 0");
  if (!(lr > 0.0)) throw Error("train: lr must be > 0");
  if (epochs < 0 || pretrain_epochs < 0) throw Error("train: epoch counts must be >= 0");
  if (hidden < 1 || latent < 1) throw Error("train: hidden and latent widths must be >= 1");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw Error("train: dropout must lie in [0, 1)");
  if (k < 1) throw Error("train: k must be >= 1");
}

Matrix feature_matrix(const Dataset& ds) {
  const auto n = static_cast<Eigen::Index>(ds.size());
  const auto m = static_cast<Eigen::Index>(ds.max_length());
  Matrix x = Matrix::Zero(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& v = ds.series[static_cast<std::size_t>(i)].values;
    for (std::size_t t = 0; t < v.size(); ++t) x(i, static_cast<Eigen::Index>(t)) = v[t];
  }
  return x;
}

Matrix to_matrix(const NormalizedAdjacency& a) {
  const auto n = static_cast<Eigen::Index>(a.n);
  return Eigen::Map<const Matrix>(a.m.data(), n, n);
}

Matrix to_matrix(const AdjacencyView& a) {
  const auto n = static_cast<Eigen::Index>(a.n);
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = a.a[static_cast<std::size_t>(i)];
  return out;
}

Encoding encode(const DiffMatrix& x, const DiffMatrix& a_norm, const EncoderParams& p, Mode mode, Rng& rng,
                double dropout_p) {
  if (a_norm.rows() != a_norm.cols() || a_norm.cols() != x.rows()) {
    throw Error("encode: adjacency and feature shapes disagree");
  }
  if (x.cols() != p.w0.rows()) throw Error("encode: feature width does not match w0");
  const DiffMatrix ax = matmul(a_norm, x);
  Matrix mask;
  if (mode == Mode::Train && dropout_p > 0.0) {
    mask = draw_noise(x.rows(), p.w0.cols(), 0, dropout_p, false, rng).dropout_mask;
  }
  return encode_from_ax(ax, a_norm, p, mask.size() ? &mask : nullptr);
}

DiffMatrix reparameterize(const DiffMatrix& mu, const DiffMatrix& log_sigma, const Matrix& eps) {
  if (mu.rows() != log_sigma.rows() || mu.cols() != log_sigma.cols()) throw Error("reparameterize: shape mismatch");
  if (eps.size() == 0) return mu;
  return add(mu, hadamard(exp(log_sigma), DiffMatrix::constant(eps)));
}

DiffMatrix reparameterize(const DiffMatrix& mu, const DiffMatrix& log_sigma, Rng& rng, Mode mode) {
  if (mode == Mode::Infer) return reparameterize(mu, log_sigma, Matrix());
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix eps(mu.rows(), mu.cols());
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps.data()[i] = normal(rng);
  return reparameterize(mu, log_sigma, eps);
}

DiffMatrix decode(const DiffMatrix& z) {
  return clamp(sigmoid(matmul(z, transpose(z))), kDecoderClamp, 1.0 - kDecoderClamp);
}

DiffMatrix recon_loss(const Matrix& adjacency, const DiffMatrix& a_hat, bool pos_weight) {
  if (adjacency.rows() != a_hat.rows() || adjacency.cols() != a_hat.cols()) throw Error("recon_loss: shape mismatch");
  const double count = static_cast<double>(adjacency.size());
  double w = 1.0;
  if (pos_weight) {
    const double ones = adjacency.sum();
    if (ones > 0.0) w = (count - ones) / ones;
  }
  const DiffMatrix pos = DiffMatrix::constant(adjacency * w);
  const DiffMatrix neg = DiffMatrix::constant((1.0 - adjacency.array()).matrix());
  const DiffMatrix log_p = log(a_hat);
  const DiffMatrix log_q = log(add_scalar(scale(a_hat, -1.0), 1.0));
  return scale(sum(add(hadamard(pos, log_p), hadamard(neg, log_q))), -1.0 / count);
}

Responsibilities posterior_responsibilities(const Matrix& z, const MixturePrior& prior) {
  const Eigen::VectorXd logw = prior.weights().array().log();
  return normalize_log_rows(
      joint_log_density(logw, prior.mu_tilde.value(), prior.log_var_tilde.value().array().exp().matrix(), z));
}

DiffMatrix reg_loss(const DiffMatrix& mu, const DiffMatrix& log_sigma, const Matrix& q, const MixturePrior& prior) {
  const Eigen::Index n = mu.rows();
  const Eigen::Index h = mu.cols();
  const int k = prior.k();
  if (log_sigma.rows() != n || log_sigma.cols() != h) throw Error("reg_loss: mu/log_sigma shape mismatch");
  if (q.rows() != n || q.cols() != k) throw Error("reg_loss: responsibilities shape mismatch");
  if (prior.mu_tilde.cols() != h) throw Error("reg_loss: prior latent width mismatch");

  const DiffMatrix qc = DiffMatrix::constant(q);
  const DiffMatrix& lv = prior.log_var_tilde;
  const DiffMatrix& mt = prior.mu_tilde;

  // Gaussian cross term, expanded so everything stays two-dimensional:
  // sum_h [lv + var/pv + (mu - mt)^2/pv] = L_c + (var inv^T)_ic + (mu^2 inv^T)_ic
  //                                      - 2 (mu (mt*inv)^T)_ic + M_c
  const DiffMatrix var = exp(scale(log_sigma, 2.0));
  const DiffMatrix inv = exp(scale(lv, -1.0));
  const DiffMatrix inv_t = transpose(inv);
  const DiffMatrix per_pair = add(add(matmul(var, inv_t), matmul(hadamard(mu, mu), inv_t)),
                                  scale(matmul(mu, transpose(hadamard(mt, inv))), -2.0));
  const DiffMatrix per_comp = transpose(add(sum_rows(lv), sum_rows(hadamard(hadamard(mt, mt), inv))));
  const DiffMatrix gauss = scale(sum(hadamard(qc, row_broadcast(per_pair, per_comp))), 0.5);

  // - sum q log(pi / q) = - sum q log pi + sum q log q   (0 log 0 = 0)
  double q_log_q = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const double v = q.data()[i];
    if (v > 0.0) q_log_q += v * std::log(v);
  }
  const DiffMatrix log_pi = log_softmax_rows(prior.pi_logits);
  const DiffMatrix cat = add_scalar(scale(sum(matmul(qc, transpose(log_pi))), -1.0), q_log_q);

  // - 1/2 sum_h (1 + log var) = -nH/2 - sum log_sigma
  const DiffMatrix entropy = add_scalar(scale(sum(log_sigma), -1.0), -0.5 * static_cast<double>(n * h));

  return scale(add(add(gauss, cat), entropy), 1.0 / static_cast<double>(n));
}

EpochNoise draw_noise(Eigen::Index n, Eigen::Index hidden, Eigen::Index latent, double dropout_p, bool sample_z,
                      Rng& rng) {
  EpochNoise noise;
  if (dropout_p > 0.0) {
    std::bernoulli_distribution keep(1.0 - dropout_p);
    const double survivor = 1.0 / (1.0 - dropout_p);
    noise.dropout_mask.resize(n, hidden);
    for (Eigen::Index i = 0; i < noise.dropout_mask.size(); ++i) {
      noise.dropout_mask.data()[i] = keep(rng) ? survivor : 0.0;
    }
  }
  if (sample_z) {
    std::normal_distribution<double> normal(0.0, 1.0);
    noise.eps.resize(n, latent);
    for (Eigen::Index i = 0; i < noise.eps.size(); ++i) noise.eps.data()[i] = normal(rng);
  }
  return noise;
}

LossGraph build_loss(const Matrix& ax, const DiffMatrix& a_norm, const Matrix& adjacency, const EncoderParams& enc,
                     const MixturePrior* prior, double lambda, const EpochNoise& noise, bool pos_weight,
                     const Matrix* q_override) {
  const Encoding e = encode_from_ax(DiffMatrix::constant(ax), a_norm, enc, &noise.dropout_mask);
  const DiffMatrix z = reparameterize(e.mu, e.log_sigma, noise.eps);
  LossGraph g;
  g.z = z.value();
  g.recon = recon_loss(adjacency, decode(z), pos_weight);
  g.total = g.recon;
  if (prior) {
    g.q = q_override ? Responsibilities{*q_override} : posterior_responsibilities(g.z, *prior);
    g.reg = reg_loss(e.mu, e.log_sigma, g.q.r, *prior);
    g.total = add(g.recon, scale(g.reg, lambda));
  }
  return g;
}

Trainer::Trainer(const Dataset& ds, const AdjacencyView& a, TrainConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (a.n != ds.size()) throw Error("train: adjacency has " + std::to_string(a.n) + " nodes, dataset has " +
                                    std::to_string(ds.size()) + " series");
  if (static_cast<std::size_t>(cfg_.k) > ds.size()) {
    throw Error("train: K = " + std::to_string(cfg_.k) + " exceeds n = " + std::to_string(ds.size()));
  }
  x_ = feature_matrix(ds);
  const Matrix a_norm = to_matrix(normalize_adjacency(a));
  ax_ = a_norm * x_;
  a_norm_ = DiffMatrix::constant(a_norm);
  adjacency_ = to_matrix(a);
  Rng init = SeedStream(cfg_.seed).split("init").rng();
  enc_ = EncoderParams::glorot(x_.cols(), cfg_.hidden, cfg_.latent, init);
}

LossBreakdown Trainer::step(bool with_prior, AdamState& state, std::uint64_t epoch, const char* phase) {
  Rng rng = SeedStream(cfg_.seed).split(phase).split(epoch).rng();
  // Pretraining is a plain (non-variational) graph autoencoder on mu.
  const EpochNoise noise =
      draw_noise(x_.rows(), cfg_.hidden, cfg_.latent, cfg_.dropout_p, /*sample_z=*/with_prior, rng);
  const LossGraph g = build_loss(ax_, a_norm_, adjacency_, enc_, with_prior ? &prior_ : nullptr, cfg_.lambda, noise,
                                 cfg_.pos_weight);
  LossBreakdown lb;
  lb.recon = g.recon.item();
  lb.reg = with_prior ? g.reg.item() : 0.0;
  lb.total = g.total.item();
  if (!std::isfinite(lb.total) || !std::isfinite(lb.recon) || !std::isfinite(lb.reg)) {
    throw Error(std::string("non-finite loss at ") + phase + " epoch " + std::to_string(epoch) +
                " (recon=" + format_double(lb.recon) + ", reg=" + format_double(lb.reg) + ")");
  }
  backward(g.total);
  auto params = enc_.parameters();
  if (with_prior) {
    for (auto& p : prior_.parameters()) params.push_back(p);
  }
  adam_step(params, state, cfg_.lr);
  if (with_prior) prior_.clamp_log_var();
  return lb;
}

void Trainer::pretrain() {
  AdamState state;
  for (int e = 0; e < cfg_.pretrain_epochs; ++e) {
    pretrain_history_.push_back(step(false, state, static_cast<std::uint64_t>(e), "pretrain"));
  }
}

void Trainer::init_prior(int k) {
  if (k < 1 || static_cast<Eigen::Index>(k) > x_.rows()) throw Error("init_prior: invalid K");
  cfg_.k = k;
  GmmConfig gcfg = cfg_.gmm;
  gcfg.seed = SeedStream(cfg_.seed).split("prior-gmm").seed();
  init_gmm_ = fit_em(embed(), k, gcfg);
  prior_ = MixturePrior::from_gmm(init_gmm_);
  has_prior_ = true;
}

void Trainer::fit() {
  if (!has_prior_) throw Error("fit: mixture prior not initialized");
  AdamState state;
  for (int e = 0; e < cfg_.epochs; ++e) {
    history_.push_back(step(true, state, static_cast<std::uint64_t>(e), "train"));
  }
}

Matrix Trainer::embed() const {
  const Encoding e = encode_from_ax(DiffMatrix::constant(ax_), a_norm_, enc_, nullptr);
  if (cfg_.eval_on_mu) return e.mu.value();
  Rng rng = SeedStream(cfg_.seed).split("eval").rng();
  return reparameterize(e.mu, e.log_sigma, rng, Mode::Train).value();
}

TrainResult Trainer::result() const {
  TrainResult r;
  r.encoder = enc_;
  r.prior = prior_;
  r.embeddings = embed();
  r.pretrain_history = pretrain_history_;
  r.history = history_;
  r.init_gmm = init_gmm_;
  return r;
}

TrainResult train(const Dataset& ds, const AdjacencyView& a, const TrainConfig& cfg) {
  Trainer t(ds, a, cfg);
  t.pretrain();
  t.init_prior(cfg.k);
  t.fit();
  return t.result();
}

ClusterResult cluster(const Matrix& embeddings, int k, const GmmConfig& cfg) {
  ClusterResult out;
  out.gmm = fit_em(embeddings, k, cfg);
  out.assignments = predict(out.gmm, embeddings);
  return out;
}

}  // namespace tsgc
