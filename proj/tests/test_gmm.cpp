#include <doctest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"
#include "tsgc/common.hpp"
#include "tsgc/gmm.hpp"
#include "tsgc/metrics.hpp"

using namespace tsgc;

namespace {

struct Blobs {
  Matrix z;
  std::vector<int> labels;
};

/// `centers` rows are blob centers; points are center + N(0, sd^2 I).
Blobs make_blobs(const Matrix& centers, int per_blob, double sd, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, sd);
  Blobs b;
  b.z.resize(centers.rows() * per_blob, centers.cols());
  for (Eigen::Index c = 0; c < centers.rows(); ++c)
    for (int p = 0; p < per_blob; ++p) {
      const Eigen::Index i = c * per_blob + p;
      for (Eigen::Index h = 0; h < centers.cols(); ++h) b.z(i, h) = centers(c, h) + g(rng);
      b.labels.push_back(static_cast<int>(c));
    }
  return b;
}

GmmModel two_component(double m0, double m1, double w0 = 0.5) {
  GmmModel m;
  m.k = 2;
  m.weights = Eigen::VectorXd(2);
  m.weights << w0, 1.0 - w0;
  m.means = Matrix(2, 1);
  m.means << m0, m1;
  m.variances = Matrix::Ones(2, 1);
  return m;
}

}  // namespace

TEST_CASE("k = 1 is the closed-form fit") {
  Rng rng(4);
  std::normal_distribution<double> g(2.0, 3.0);
  Matrix z(40, 3);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = g(rng);
  const auto m = fit_em(z, 1);
  const Eigen::RowVectorXd mean = z.colwise().mean();
  const Eigen::RowVectorXd var = (z.rowwise() - mean).array().square().colwise().mean();
  CHECK((m.means.row(0) - mean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((m.variances.row(0) - var).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(m.weights(0) == doctest::Approx(1.0));
  CHECK(predict(m, z) == std::vector<int>(40, 0));
}

TEST_CASE("two separated blobs are recovered exactly") {
  Matrix centers(2, 2);
  centers << -5, -5, 5, 5;
  const auto b = make_blobs(centers, 100, 1.0, 7);
  const auto m = fit_em(b.z, 2, {.seed = 3});
  CHECK(nmi(b.labels, predict(m, b.z)) == 1.0);
  CHECK(std::abs(m.weights.sum() - 1.0) < 1e-12);
  CHECK(m.variances.minCoeff() >= 1e-6);
  CHECK(m.diagnostics.converged);
}

TEST_CASE("fit is deterministic for a seed") {
  Matrix centers(3, 2);
  centers << 0, 0, 4, 0, 0, 4;
  const auto b = make_blobs(centers, 30, 1.0, 1);
  const auto a = fit_em(b.z, 3, {.seed = 11});
  const auto c = fit_em(b.z, 3, {.seed = 11});
  CHECK(a.weights == c.weights);
  CHECK(a.means == c.means);
  CHECK(a.variances == c.variances);
}

TEST_CASE("EM log-likelihood never decreases") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix z(60, 2);
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = g(rng) + (i % 3) * 1.5;
    for (int k = 1; k <= 4; ++k) {
      const auto m = fit_em(z, k, {.max_iters = 200, .tol = 1e-10, .restarts = 2, .seed = seed});
      const auto& ll = m.diagnostics.log_likelihood;
      REQUIRE_FALSE(ll.empty());
      for (std::size_t t = 1; t < ll.size(); ++t) CHECK(ll[t] >= ll[t - 1] - 1e-9);
    }
  }
}

TEST_CASE("identical points flag the variance floor") {
  const Matrix z = Matrix::Constant(10, 2, 3.0);
  const auto m = fit_em(z, 2);
  CHECK(m.diagnostics.variance_floor_active);
  CHECK(m.variances.minCoeff() >= 1e-6);
  CHECK(std::isfinite(m.log_likelihood(z)));
}

TEST_CASE("fit errors") {
  const Matrix z = Matrix::Zero(3, 2);
  CHECK_THROWS_AS(fit_em(z, 4), Error);
  CHECK_THROWS_AS(fit_em(z, 0), Error);
}

TEST_CASE("responsibilities") {
  SUBCASE("midpoint is split evenly") {
    const auto m = two_component(-2.0, 2.0);
    const Matrix z = Matrix::Zero(1, 1);
    const auto r = responsibilities(m, z).r;
    CHECK(r(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(predict(m, z) == std::vector<int>{0});
  }
  SUBCASE("direct density evaluation") {
    const auto m = two_component(0.0, 4.0);
    const Matrix z = Matrix::Zero(1, 1);
    CHECK(std::abs(responsibilities(m, z).r(0, 0) - 0.9996646498695336) < 1e-15);
  }
  SUBCASE("degenerate weights") {
    auto m = two_component(0.0, 1.0, 1.0);
    m.weights(1) = 1e-300;
    Matrix z(3, 1);
    z << -1, 0.5, 3;
    const auto r = responsibilities(m, z).r;
    for (int i = 0; i < 3; ++i) CHECK(r(i, 0) == doctest::Approx(1.0));
  }
  SUBCASE("rows sum to one for arbitrary models") {
    Rng rng(6);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    GmmModel m;
    m.k = 4;
    m.weights = Eigen::VectorXd::Constant(4, 0.25);
    m.means = Matrix(4, 3);
    m.variances = Matrix::Constant(4, 3, 0.01);
    for (Eigen::Index i = 0; i < m.means.size(); ++i) m.means.data()[i] = u(rng);
    Matrix z(50, 3);
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = 5.0 * u(rng);
    const auto r = responsibilities(m, z).r;
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
      CHECK(std::abs(r.row(i).sum() - 1.0) < 1e-12);
      CHECK(r.row(i).minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("argmax tie-break and permutation equivariance") {
  Matrix r(2, 3);
  r << 0.4, 0.4, 0.2, 0.1, 0.45, 0.45;
  CHECK(argmax_rows(r) == std::vector<int>{0, 1});

  Matrix centers(3, 1);
  centers << -6, 0, 6;
  const auto b = make_blobs(centers, 20, 0.5, 2);
  const auto m = fit_em(b.z, 3, {.seed = 1});
  GmmModel p = m;
  const int perm[3] = {2, 0, 1};
  for (int c = 0; c < 3; ++c) {
    p.weights(perm[c]) = m.weights(c);
    p.means.row(perm[c]) = m.means.row(c);
    p.variances.row(perm[c]) = m.variances.row(c);
  }
  const auto a0 = predict(m, b.z), a1 = predict(p, b.z);
  for (std::size_t i = 0; i < a0.size(); ++i) CHECK(a1[i] == perm[a0[i]]);
  CHECK(nmi(a0, a1) == 1.0);
}

TEST_CASE("elbow finds three blobs") {
  Matrix centers = Matrix::Zero(3, 3);
  for (int c = 0; c < 3; ++c) centers(c, c) = 12.0;
  const auto b = make_blobs(centers, 40, 1.0, 5);
  const auto e = elbow_select_k(b.z, {1, 2, 3, 4, 5, 6, 7, 8}, {.seed = 2});
  CHECK(e.k == 3);
  CHECK(e.curve.size() == 8);
  CHECK(elbow_select_k(b.z, {4}).k == 4);
}

TEST_CASE("gmm file round-trip") {
  const auto dir = test_dir("gmm_io");
  Matrix centers(2, 2);
  centers << -3, 0, 3, 1;
  const auto b = make_blobs(centers, 15, 1.0, 9);
  const auto m = fit_em(b.z, 2);
  write_gmm(dir / "g.txt", m);
  const auto back = read_gmm(dir / "g.txt");
  CHECK(back.k == 2);
  CHECK(back.weights == m.weights);
  CHECK(back.means == m.means);
  CHECK(back.variances == m.variances);
}
