#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tsgc/common.hpp"
#include "tsgc/metrics.hpp"

using namespace tsgc;

TEST_CASE("known values") {
  const std::vector<int> a{0, 0, 1, 1}, b{1, 1, 0, 0}, c{0, 0, 0, 0}, d{0, 1, 0, 1};
  CHECK(rand_index(a, b) == 1.0);
  CHECK(nmi(a, b) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rand_index(a, c) == doctest::Approx(2.0 / 6.0));
  CHECK(nmi(a, c) == 0.0);
  CHECK(nmi(c, c) == 1.0);
  CHECK(nmi(a, d) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(rand_index(a, d) == doctest::Approx(2.0 / 6.0));
}

TEST_CASE("contingency table") {
  const std::vector<int> t{5, 5, 7, 9}, p{1, 2, 2, 2};
  const auto ct = contingency(t, p);
  CHECK(ct.truth_ids == std::vector<int>{5, 7, 9});
  CHECK(ct.pred_ids == std::vector<int>{1, 2});
  CHECK(ct.counts[0] == std::vector<std::int64_t>{1, 1});
  CHECK(ct.row_sums == std::vector<std::int64_t>{2, 1, 1});
  CHECK(ct.col_sums == std::vector<std::int64_t>{1, 3});
  CHECK(ct.n == 4);
  const auto pc = pair_counts(t, p);
  CHECK(pc.tp + pc.tn + pc.fp + pc.fn == 6);
  CHECK(pc.tp == 0);
  CHECK(pc.fp == 3);
}

TEST_CASE("metric errors") {
  const std::vector<int> one{0}, two{0, 1}, three{0, 1, 2};
  CHECK_THROWS_AS(rand_index(one, one), Error);
  CHECK_THROWS_AS(rand_index(two, three), Error);
  CHECK_THROWS_AS(nmi(two, three), Error);
}

TEST_CASE("agree with pairwise and direct oracles") {
  Rng rng(17);
  for (int t = 0; t < 100; ++t) {
    std::uniform_int_distribution<int> size(2, 30), ka(1, 5), kb(1, 5);
    const int n = size(rng);
    std::uniform_int_distribution<int> la(0, ka(rng) - 1), lb(0, kb(rng) - 1);
    std::vector<int> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = la(rng);
      b[i] = lb(rng);
    }
    const double ri = rand_index(a, b), nm = nmi(a, b);
    CHECK(std::abs(ri - oracle::rand_index_pairs(a, b)) < 1e-12);
    CHECK(std::abs(nm - oracle::nmi_direct(a, b)) < 1e-12);
    CHECK(ri >= 0.0);
    CHECK(ri <= 1.0);
    CHECK(nm >= 0.0);
    CHECK(nm <= 1.0);
    CHECK(rand_index(b, a) == ri);
    CHECK(std::abs(nmi(b, a) - nm) < 1e-15);
    // Relabeling either side changes nothing.
    std::vector<int> relabeled(n);
    for (int i = 0; i < n; ++i) relabeled[i] = 10 - 3 * b[i];
    CHECK(rand_index(a, relabeled) == ri);
    CHECK(std::abs(nmi(a, relabeled) - nm) < 1e-15);
    CHECK(rand_index(a, a) == 1.0);
  }
}
