#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "qpl/errors.hpp"
#include "qpl/operators.hpp"

using namespace qpl;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;
}  // namespace

TEST_CASE("box indexing round-trips in one and three dimensions") {
  for (int dim : {1, 2, 3}) {
    BoxSpec box{dim, 2};
    CHECK(box.side() == 5);
    for (int idx = 0; idx < box.size(); ++idx) {
      auto site = box.site_of(idx);
      REQUIRE(static_cast<int>(site.size()) == dim);
      for (int c : site) {
        CHECK(c >= -2);
        CHECK(c <= 2);
      }
      CHECK(box.index_of(site) == idx);
    }
  }

  BoxSpec box{2, 3};
  int idx = box.index_of({-3, 2});
  CHECK(box.dist_l1(idx) == 5);
  CHECK(box.boundary_gap(idx) == 0);
  CHECK(box.dist_l1(box.index_of({0, 0})) == 0);
  CHECK(box.boundary_gap(box.index_of({1, -1})) == 2);
}

TEST_CASE("almost Mathieu box has the advertised entries") {
  const double lambda = 3.0, alpha = kGolden, theta = 0.1234;
  const int N = 7;
  auto h = build_amo(lambda, alpha, theta, N);
  CHECK(h.tridiagonal);
  CHECK(h.size() == 2 * N + 1);
  CHECK(h.sym_defect() == 0.0);
  for (int i = 0; i < h.size(); ++i) {
    int n = i - N;
    CHECK(h.at(i, i) == doctest::Approx(2.0 * lambda * std::cos(kTwoPi * (theta + n * alpha)))
                            .epsilon(1e-15));
    if (i + 1 < h.size()) CHECK(h.at(i, i + 1) == 1.0);
    if (i + 2 < h.size()) CHECK(h.at(i, i + 2) == 0.0);
  }
  CHECK(h.norm_inf() <= 2.0 * lambda + 2.0);
  CHECK(h.meta.at("family") == "amo");
}

TEST_CASE("phase shift by alpha translates the potential by one site") {
  const double lambda = 2.0, alpha = std::sqrt(2.0) - 1.0, theta = 0.31;
  const int N = 6;
  auto h0 = build_amo(lambda, alpha, theta, N);
  auto h1 = build_amo(lambda, alpha, theta + alpha, N);
  for (int i = 0; i + 1 < h0.size(); ++i)
    CHECK(h1.at(i, i) == doctest::Approx(h0.at(i + 1, i + 1)).epsilon(1e-13));
}

TEST_CASE("cosine potential long-range build reduces to the nearest-neighbor one") {
  auto v = cosine_poly(1, 0, 2.0);  // hopping coefficients 1 at |k| = 1
  const double lambda = 1.7, theta = 0.42;
  const int N = 5;
  auto hlr = build_longrange(v, lambda, {kGolden}, theta, N);
  auto hnn = build_amo(lambda, kGolden, theta, N);
  for (int i = 0; i < hlr.size(); ++i)
    for (int j = 0; j < hlr.size(); ++j)
      CHECK(hlr.at(i, j) == doctest::Approx(hnn.at(i, j)).epsilon(1e-15));
  CHECK(hlr.meta.at("hop_cut") == "1");
}

TEST_CASE("exponentially decaying hoppings are cut at the tail tolerance") {
  // v(theta) = sum_k e^{-|k|} e^{2 pi i k theta}, real and even
  ScalarPoly v(1, 1);
  for (int k = -30; k <= 30; ++k) v.c[{k, 0, 0}] = cplx(std::exp(-std::abs(k)), 0.0);
  auto h = build_longrange(v, 0.0, {kGolden}, 0.0, 8, 1e-6);
  int K = std::stoi(h.meta.at("hop_cut"));
  CHECK(K >= 13);  // e^{-14} < 1e-6 < e^{-13}
  CHECK(K <= 14);
  for (int i = 0; i < h.size(); ++i) {
    for (int j = 0; j < h.size(); ++j) {
      int k = std::abs(i - j);
      if (k == 0)
        CHECK(h.at(i, i) == doctest::Approx(1.0).epsilon(1e-15));  // V_0 only, lambda = 0
      else if (k <= K)
        CHECK(h.at(i, j) == doctest::Approx(std::exp(-k)).epsilon(1e-15));
      else
        CHECK(h.at(i, j) == 0.0);
    }
  }
  CHECK_FALSE(h.tridiagonal);
}

TEST_CASE("a potential with complex or odd part is rejected") {
  ScalarPoly bad(1, 1);
  bad.c[{1, 0, 0}] = cplx(0.0, 1.0);  // v(theta) = i e^{2 pi i theta}: not real
  CHECK_THROWS_AS(build_longrange(bad, 1.0, {kGolden}, 0.0, 3), NonHermitianPotential);

  ScalarPoly odd(1, 1);
  odd.c[{1, 0, 0}] = cplx(0.0, 0.5);
  odd.c[{-1, 0, 0}] = cplx(0.0, -0.5);  // v = -sin: real-valued but odd, so hoppings
  // would be complex-Hermitian; outside the real-symmetric storage by contract
  CHECK_THROWS_AS(build_longrange(odd, 1.0, {kGolden}, 0.0, 3), NonHermitianPotential);
}

TEST_CASE("two-frequency diagonal accumulates both cosines") {
  std::vector<double> alpha = {kGolden, std::sqrt(2.0) - 1.0};
  std::vector<double> theta = {0.15, 0.65};
  const double li = 0.8;
  auto h = build_md_schrodinger(li, alpha, theta, 4);
  CHECK(h.tridiagonal);
  for (int i = 0; i < h.size(); ++i) {
    int n = i - 4;
    double want = 0.0;
    for (int k = 0; k < 2; ++k) want += 2.0 * li * std::cos(kTwoPi * (theta[k] + n * alpha[k]));
    CHECK(h.at(i, i) == doctest::Approx(want).epsilon(1e-14));
    if (i + 1 < h.size()) CHECK(h.at(i, i + 1) == 1.0);
  }
}

TEST_CASE("lattice box couples exactly the l1 neighbors") {
  std::vector<double> alpha = {kGolden, std::sqrt(2.0) - 1.0};
  auto h = build_md_longrange(1.2, alpha, 0.37, 2);
  CHECK(h.size() == 25);
  CHECK(h.sym_defect() == 0.0);
  for (int i = 0; i < h.size(); ++i) {
    auto si = h.box.site_of(i);
    for (int j = 0; j < h.size(); ++j) {
      auto sj = h.box.site_of(j);
      int d = std::abs(si[0] - sj[0]) + std::abs(si[1] - sj[1]);
      if (d == 1)
        CHECK(h.at(i, j) == 1.0);
      else if (d > 1)
        CHECK(h.at(i, j) == 0.0);
    }
    double dot = si[0] * alpha[0] + si[1] * alpha[1];
    CHECK(h.at(i, i) == doctest::Approx(2.0 * 1.2 * std::cos(kTwoPi * (0.37 + dot))).epsilon(1e-14));
  }
}

TEST_CASE("apply agrees with the dense matrix action") {
  auto h = build_md_longrange(0.9, {kGolden, kGolden * kGolden}, 0.2, 3);
  int n = h.size();
  std::vector<double> x(n), y(n), want(n, 0.0);
  for (int i = 0; i < n; ++i) x[i] = std::sin(0.37 * i + 0.11);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) want[i] += h.at(i, j) * x[j];
  h.apply(x.data(), y.data());
  for (int i = 0; i < n; ++i) CHECK(y[i] == doctest::Approx(want[i]).epsilon(1e-13));
}

TEST_CASE("oversized boxes are refused up front") {
  CHECK_THROWS_AS(build_md_longrange(1.0, {0.1, 0.2, 0.3}, 0.0, 10), BoxTooLarge);  // 21^3 sites
  CHECK_THROWS_AS(build_amo(1.0, kGolden, 0.0, 3000), BoxTooLarge);
  CHECK_NOTHROW(build_amo(1.0, kGolden, 0.0, 2000));  // 4001 sites, within the cap
}

TEST_CASE("frequency and phase dimensions must line up") {
  CHECK_THROWS_AS(build_md_schrodinger(1.0, {kGolden, 0.3}, {0.1}, 3), InconsistentInput);
  CHECK_THROWS_AS(build_longrange(cosine_poly(1, 0, 2.0), 1.0, {0.1, 0.2}, 0.0, 3),
                  InconsistentInput);
}
