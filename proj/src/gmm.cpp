#include "tsgc/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace tsgc {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double row_sq_dist(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

// k-means++ seeding, then `iters` Lloyd iterations. Returns labels.
std::vector<int> kmeans(const Matrix& z, int k, int iters, Rng& rng, Matrix& centers) {
  const Eigen::Index n = z.rows();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  centers.resize(k, z.cols());
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());

  auto first = static_cast<Eigen::Index>(unif(rng) * static_cast<double>(n));
  first = std::min(first, n - 1);
  centers.row(0) = z.row(first);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], row_sq_dist(z, i, centers, c - 1));
      total += d2[i];
    }
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double u = unif(rng) * total;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        u -= d2[i];
        if (u < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = std::min(static_cast<Eigen::Index>(unif(rng) * static_cast<double>(n)), n - 1);
    }
    centers.row(c) = z.row(pick);
  }

  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  for (int it = 0; it <= iters; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = row_sq_dist(z, i, centers, 0);
      for (int c = 1; c < k; ++c) {
        const double d = row_sq_dist(z, i, centers, c);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      labels[i] = best;
    }
    if (it == iters) break;
    Matrix sums = Matrix::Zero(k, z.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels[i]) += z.row(i);
      ++counts[labels[i]];
    }
    for (int c = 0; c < k; ++c)
      if (counts[c] > 0) centers.row(c) = sums.row(c) / counts[c];
  }
  return labels;
}

struct EmRun {
  GmmModel model;
  double final_ll = -std::numeric_limits<double>::infinity();
};

EmRun run_em(const Matrix& z, int k, const GmmConfig& cfg, Rng& rng) {
  const Eigen::Index n = z.rows();
  const Eigen::Index h = z.cols();
  Matrix centers;
  const auto labels = kmeans(z, k, 10, rng, centers);

  GmmModel m;
  m.k = k;
  m.weights = Eigen::VectorXd::Zero(k);
  m.means = centers;
  m.variances = Matrix::Zero(k, h);
  Matrix sq = Matrix::Zero(k, h);
  for (Eigen::Index i = 0; i < n; ++i) {
    m.weights(labels[i]) += 1.0;
    sq.row(labels[i]) += (z.row(i) - centers.row(labels[i])).array().square().matrix();
  }
  const Eigen::RowVectorXd global_var =
      ((z.rowwise() - z.colwise().mean()).array().square().colwise().sum() / static_cast<double>(n)).matrix();
  for (int c = 0; c < k; ++c) {
    if (m.weights(c) > 0.0) {
      m.variances.row(c) = sq.row(c) / m.weights(c);
    } else {
      m.variances.row(c) = global_var;
      m.weights(c) = 1.0;  // an empty k-means cell still gets a chance in EM
    }
  }
  m.weights /= m.weights.sum();
  m.variances = m.variances.cwiseMax(cfg.variance_floor);

  auto& diag = m.diagnostics;
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < cfg.max_iters; ++it) {
    // E-step.
    const Matrix log_joint = joint_log_density(m.weights.array().log().matrix(), m.means, m.variances, z);
    Matrix resp(n, k);
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mx = log_joint.row(i).maxCoeff();
      const double lse = mx + std::log((log_joint.row(i).array() - mx).exp().sum());
      ll += lse;
      resp.row(i) = (log_joint.row(i).array() - lse).exp();
    }
    diag.log_likelihood.push_back(ll);
    diag.iterations = it + 1;
    if (it > 0 && ll - prev_ll < cfg.tol) {
      diag.converged = true;
      break;
    }
    prev_ll = ll;

    // M-step.
    const Eigen::VectorXd nk = resp.colwise().sum().transpose();
    for (int c = 0; c < k; ++c) {
      if (nk(c) < 1e-300) {
        m.weights(c) = 0.0;
        continue;
      }
      m.weights(c) = nk(c) / static_cast<double>(n);
      Eigen::RowVectorXd mu = (resp.col(c).transpose() * z) / nk(c);
      Eigen::RowVectorXd var = Eigen::RowVectorXd::Zero(h);
      for (Eigen::Index i = 0; i < n; ++i) var += resp(i, c) * (z.row(i) - mu).array().square().matrix();
      var /= nk(c);
      m.means.row(c) = mu;
      m.variances.row(c) = var.cwiseMax(cfg.variance_floor);
    }
    m.weights /= m.weights.sum();
  }
  diag.variance_floor_active = (m.variances.array() <= cfg.variance_floor).any();
  EmRun run;
  run.final_ll = diag.log_likelihood.empty() ? m.log_likelihood(z) : diag.log_likelihood.back();
  run.model = std::move(m);
  return run;
}

}  // namespace

Matrix joint_log_density(const Eigen::VectorXd& log_weights, const Matrix& means, const Matrix& variances,
                         const Matrix& z) {
  const Eigen::Index n = z.rows();
  const Eigen::Index k = means.rows();
  const Eigen::Index h = z.cols();
  if (means.cols() != h || variances.rows() != k || variances.cols() != h || log_weights.size() != k) {
    throw Error("gmm: shape mismatch between model and data");
  }
  Matrix out(n, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const double log_det = variances.row(c).array().log().sum();
    const Eigen::RowVectorXd inv = variances.row(c).cwiseInverse();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double maha = ((z.row(i) - means.row(c)).array().square() * inv.array()).sum();
      out(i, c) = log_weights(c) - 0.5 * (static_cast<double>(h) * kLog2Pi + log_det + maha);
    }
  }
  return out;
}

Responsibilities normalize_log_rows(const Matrix& log_joint) {
  Responsibilities out;
  out.r.resize(log_joint.rows(), log_joint.cols());
  for (Eigen::Index i = 0; i < log_joint.rows(); ++i) {
    const double mx = log_joint.row(i).maxCoeff();
    Eigen::RowVectorXd e = (log_joint.row(i).array() - mx).exp();
    out.r.row(i) = e / e.sum();
  }
  return out;
}

double GmmModel::log_likelihood(const Matrix& z) const {
  const Matrix lj = joint_log_density(weights.array().log().matrix(), means, variances, z);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < lj.rows(); ++i) {
    const double mx = lj.row(i).maxCoeff();
    ll += mx + std::log((lj.row(i).array() - mx).exp().sum());
  }
  return ll;
}

GmmModel fit_em(const Matrix& z, int k, const GmmConfig& cfg) {
  if (k < 1) throw Error("fit_em: k must be >= 1");
  if (z.rows() < 1 || z.cols() < 1) throw Error("fit_em: empty data");
  if (k > z.rows()) throw Error("fit_em: k = " + std::to_string(k) + " exceeds n = " + std::to_string(z.rows()));
  if (!z.allFinite()) throw Error("fit_em: non-finite data");
  const int restarts = std::max(1, cfg.restarts);
  const SeedStream root(cfg.seed);

  EmRun best;
  int best_index = -1;
  for (int r = 0; r < restarts; ++r) {
    Rng rng = root.split(static_cast<std::uint64_t>(r)).rng();
    EmRun run = run_em(z, k, cfg, rng);
    if (best_index < 0 || run.final_ll > best.final_ll) {
      best = std::move(run);
      best_index = r;
    }
  }
  best.model.diagnostics.best_restart = best_index;
  return best.model;
}

Responsibilities responsibilities(const GmmModel& m, const Matrix& z) {
  return normalize_log_rows(joint_log_density(m.weights.array().log().matrix(), m.means, m.variances, z));
}

std::vector<int> argmax_rows(const Matrix& r) {
  std::vector<int> out(static_cast<std::size_t>(r.rows()));
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < r.cols(); ++c)
      if (r(i, c) > r(i, best)) best = c;
    out[i] = static_cast<int>(best);
  }
  return out;
}

std::vector<int> predict(const GmmModel& m, const Matrix& z) {
  // Argmax of the unnormalized log joint equals argmax of the responsibilities
  // but keeps exact ties exact.
  return argmax_rows(joint_log_density(m.weights.array().log().matrix(), m.means, m.variances, z));
}

ElbowResult elbow_select_k(const Matrix& z, const std::vector<int>& k_range, const GmmConfig& cfg) {
  if (k_range.empty()) throw Error("elbow_select_k: empty k range");
  ElbowResult out;
  for (int k : k_range) {
    const auto m = fit_em(z, k, cfg);
    out.curve.emplace_back(k, -m.log_likelihood(z));
  }
  out.k = out.curve.front().first;
  if (out.curve.size() < 3) {
    for (const auto& [k, nll] : out.curve) out.k = std::min(out.k, k);
    return out;
  }
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < out.curve.size(); ++i) {
    const double d2 = out.curve[i - 1].second - 2.0 * out.curve[i].second + out.curve[i + 1].second;
    if (d2 > best) {
      best = d2;
      out.k = out.curve[i].first;
    }
  }
  return out;
}

void write_gmm(const std::filesystem::path& path, const GmmModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "GMM1 k=" << m.k << " dim=" << m.dim() << '\n';
  out << "weights";
  for (Eigen::Index c = 0; c < m.k; ++c) out << ' ' << format_double(m.weights(c));
  out << '\n';
  for (const auto* block : {"mean", "var"}) {
    const Matrix& src = std::string(block) == "mean" ? m.means : m.variances;
    for (Eigen::Index c = 0; c < m.k; ++c) {
      out << block << ' ' << c;
      for (Eigen::Index j = 0; j < src.cols(); ++j) out << ' ' << format_double(src(c, j));
      out << '\n';
    }
  }
}

GmmModel read_gmm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::string line, tag;
  GmmModel m;
  Eigen::Index dim = 0;
  if (!std::getline(in, line) || std::sscanf(line.c_str(), "GMM1 k=%d dim=%td", &m.k, &dim) != 2 || m.k < 1) {
    throw Error("gmm file: bad header");
  }
  m.weights.resize(m.k);
  m.means.resize(m.k, dim);
  m.variances.resize(m.k, dim);
  auto read_values = [&](std::istringstream& ls, auto&& sink, Eigen::Index count) {
    std::string field;
    for (Eigen::Index j = 0; j < count; ++j) {
      if (!(ls >> field)) throw Error("gmm file: short row");
      sink(j, parse_double(field));
    }
  };
  std::getline(in, line);
  {
    std::istringstream ls(line);
    ls >> tag;
    if (tag != "weights") throw Error("gmm file: expected weights");
    read_values(ls, [&](Eigen::Index j, double v) { m.weights(j) = v; }, m.k);
  }
  for (auto* target : {&m.means, &m.variances}) {
    for (int c = 0; c < m.k; ++c) {
      if (!std::getline(in, line)) throw Error("gmm file: truncated");
      std::istringstream ls(line);
      int idx = -1;
      ls >> tag >> idx;
      if (idx != c) throw Error("gmm file: rows out of order");
      read_values(ls, [&](Eigen::Index j, double v) { (*target)(c, j) = v; }, dim);
    }
  }
  return m;
}

}  // namespace tsgc
