#include <doctest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "test_util.hpp"
#include "tsgc/adam.hpp"
#include "tsgc/checkpoint.hpp"
#include "tsgc/diff.hpp"

using namespace tsgc;

namespace {

Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

Matrix row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) m(0, i++) = x;
  return m;
}

void require_close_grads(const std::vector<DiffMatrix>& params, const std::function<DiffMatrix()>& loss) {
  const auto r = gradcheck::check(params, loss);
  INFO(r.worst);
  CHECK(r.max_rel_error < 1e-4);
}

}  // namespace

TEST_CASE("elementwise definitions") {
  const auto a = DiffMatrix::constant(row({-1.0, 0.0, 2.0}));
  CHECK(relu(a).value() == row({0.0, 0.0, 2.0}));
  CHECK(sigmoid(DiffMatrix::scalar(0.0)).item() == 0.5);
  CHECK(exp(DiffMatrix::scalar(0.0)).item() == 1.0);
  CHECK(transpose(a).rows() == 3);
  CHECK(sum(a).item() == 1.0);
  CHECK(mean(a).item() == doctest::Approx(1.0 / 3.0));
  CHECK(clamp(a, -0.5, 1.0).value() == row({-0.5, 0.0, 1.0}));
  CHECK_THROWS_AS(log(a), Error);
}

TEST_CASE("shape errors") {
  const auto a = DiffMatrix::constant(Matrix::Zero(2, 3));
  const auto b = DiffMatrix::constant(Matrix::Zero(2, 2));
  CHECK_THROWS_AS(matmul(a, b), Error);
  CHECK_THROWS_AS(add(a, b), Error);
  CHECK_THROWS_AS(hadamard(a, b), Error);
  CHECK_THROWS_AS(row_broadcast(a, b), Error);
  CHECK_THROWS_AS(backward(a), Error);
}

TEST_CASE("simple closed-form gradients") {
  Rng rng(1);
  auto w = DiffMatrix::parameter(random_matrix(rng, 2, 2));
  backward(sum(w));
  CHECK(w.grad() == Matrix::Ones(2, 2));

  w.zero_grad();
  backward(sum(hadamard(w, w)));
  CHECK(w.grad().isApprox(2.0 * w.value()));

  // A second backward on the same graph accumulates.
  w.zero_grad();
  const auto loss = sum(hadamard(w, w));
  backward(loss);
  backward(loss);
  CHECK(w.grad().isApprox(4.0 * w.value()));
}

TEST_CASE("every op passes a finite-difference check") {
  Rng rng(42);
  auto a = DiffMatrix::parameter(random_matrix(rng, 3, 4));
  auto b = DiffMatrix::parameter(random_matrix(rng, 4, 2));
  auto c = DiffMatrix::parameter(random_matrix(rng, 3, 4));
  auto r = DiffMatrix::parameter(random_matrix(rng, 1, 4));
  auto pos = DiffMatrix::parameter(random_matrix(rng, 3, 4, 0.5, 2.0));
  const Matrix weights = random_matrix(rng, 3, 4);
  const Matrix wts2 = random_matrix(rng, 3, 2);
  const Matrix col = random_matrix(rng, 3, 1);
  // Weighted sums keep the loss from being a symmetric function of the inputs.
  auto wsum = [&](const DiffMatrix& m) { return sum(hadamard(m, DiffMatrix::constant(weights))); };

  require_close_grads({a, b}, [&] { return sum(hadamard(matmul(a, b), DiffMatrix::constant(wts2))); });
  require_close_grads({a, c}, [&] { return wsum(add(a, c)); });
  require_close_grads({a, c}, [&] { return wsum(sub(a, c)); });
  require_close_grads({a, c}, [&] { return wsum(hadamard(a, c)); });
  require_close_grads({a}, [&] { return wsum(scale(a, -2.5)); });
  require_close_grads({a}, [&] { return wsum(add_scalar(a, 0.3)); });
  require_close_grads({a}, [&] { return wsum(relu(add_scalar(a, 0.013))); });
  require_close_grads({a}, [&] { return wsum(sigmoid(a)); });
  require_close_grads({a}, [&] { return wsum(exp(a)); });
  require_close_grads({pos}, [&] { return wsum(log(pos)); });
  require_close_grads({a}, [&] { return sum(hadamard(transpose(a), DiffMatrix::constant(weights.transpose()))); });
  require_close_grads({a}, [&] { return mean(hadamard(a, a)); });
  require_close_grads({a}, [&] { return sum(hadamard(sum_rows(hadamard(a, a)), DiffMatrix::constant(col))); });
  require_close_grads({a}, [&] { return sum(hadamard(sum_cols(hadamard(a, a)), r)); });
  require_close_grads({a, r}, [&] { return wsum(row_broadcast(hadamard(a, a), r)); });
  require_close_grads({a}, [&] { return wsum(log_softmax_rows(a)); });
  require_close_grads({a}, [&] { return wsum(clamp(a, -0.75, 0.75)); });
  require_close_grads({a}, [&] { return wsum(apply_mask(a, weights)); });
}

TEST_CASE("dropout") {
  Rng rng(5);
  const auto a = DiffMatrix::constant(random_matrix(rng, 50, 40));
  CHECK(dropout(a, 0.0, rng, true).handle() == a.handle());
  CHECK(dropout(a, 0.4, rng, false).handle() == a.handle());
  const auto d = dropout(a, 0.4, rng, true);
  std::size_t zeros = 0;
  for (Eigen::Index i = 0; i < d.value().size(); ++i) {
    const double v = d.value().data()[i];
    if (v == 0.0) {
      ++zeros;
    } else {
      CHECK(v == doctest::Approx(a.value().data()[i] / 0.6));
    }
  }
  const double frac = static_cast<double>(zeros) / 2000.0;
  CHECK(frac > 0.33);
  CHECK(frac < 0.47);
  CHECK_THROWS_AS(dropout(a, 1.0, rng, true), Error);
}

TEST_CASE("glorot init") {
  Rng r1(9), r2(9);
  const auto one = glorot_init(1, 1, r1);
  CHECK(std::abs(one.item()) <= std::sqrt(3.0));
  const auto a = glorot_init(100, 100, r1);
  const auto b = glorot_init(100, 100, r2);
  CHECK_FALSE(a.value() == b.value());
  Rng r3(9), r4(9);
  CHECK(glorot_init(30, 20, r3).value() == glorot_init(30, 20, r4).value());
  const double bound = std::sqrt(6.0 / 200.0);
  CHECK(a.value().maxCoeff() <= bound);
  CHECK(a.value().minCoeff() >= -bound);
  CHECK(std::abs(a.value().mean()) < 0.02);
}

TEST_CASE("adam") {
  SUBCASE("first step moves by about lr against the gradient") {
    auto p = DiffMatrix::parameter(Matrix::Constant(1, 1, 1.0));
    p.mutable_grad()(0, 0) = 3.0;
    AdamState st;
    std::vector<DiffMatrix> ps{p};
    adam_step(ps, st, 0.01);
    CHECK(p.item() == doctest::Approx(1.0 - 0.01 * 3.0 / (3.0 + 1e-8)).epsilon(1e-12));
    CHECK(st.step_count == 1);
    CHECK(p.grad()(0, 0) == 0.0);
  }
  SUBCASE("zero gradient leaves the parameter") {
    auto p = DiffMatrix::parameter(Matrix::Constant(2, 2, 0.5));
    AdamState st;
    std::vector<DiffMatrix> ps{p};
    adam_step(ps, st, 0.1);
    CHECK(p.value() == Matrix::Constant(2, 2, 0.5));
    CHECK(st.step_count == 1);
  }
  SUBCASE("constant gradient gives monotone movement") {
    auto p = DiffMatrix::parameter(Matrix::Constant(1, 1, 0.0));
    AdamState st;
    std::vector<DiffMatrix> ps{p};
    double prev = 0.0;
    for (int i = 0; i < 3; ++i) {
      p.mutable_grad()(0, 0) = -2.0;
      adam_step(ps, st, 0.05);
      CHECK(p.item() > prev);
      prev = p.item();
    }
  }
  SUBCASE("minimizes a quadratic") {
    Rng rng(3);
    const Matrix target = random_matrix(rng, 3, 3);
    auto p = DiffMatrix::parameter(Matrix::Zero(3, 3));
    AdamState st;
    std::vector<DiffMatrix> ps{p};
    for (int i = 0; i < 2000; ++i) {
      const auto diff = sub(p, DiffMatrix::constant(target));
      backward(sum(hadamard(diff, diff)));
      adam_step(ps, st, 0.01);
    }
    CHECK((p.value() - target).cwiseAbs().maxCoeff() < 1e-3);
  }
}

TEST_CASE("checkpoint round-trip is exact") {
  const auto dir = test_dir("checkpoint");
  Rng rng(12);
  std::vector<NamedTensor> ts{{"w0", random_matrix(rng, 5, 3)}, {"bias", random_matrix(rng, 1, 7, -1e-300, 1e300)}};
  ts[0].value(0, 0) = 0.1;
  write_checkpoint(dir / "c.txt", ts);
  const auto back = read_checkpoint(dir / "c.txt");
  REQUIRE(back.size() == 2);
  CHECK(back[0].name == "w0");
  CHECK(back[0].value == ts[0].value);
  CHECK(find_tensor(back, "bias") == ts[1].value);
  CHECK_THROWS_AS(find_tensor(back, "nope"), Error);
}
