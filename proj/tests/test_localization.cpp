#include <doctest.h>

#include <cmath>
#include <random>

#include "qpl/eigensolver.hpp"
#include "qpl/errors.hpp"
#include "qpl/localization.hpp"
#include "qpl/operators.hpp"

using namespace qpl;

namespace {

const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;

std::vector<double> peaked(const BoxSpec& box, const std::vector<int>& c, double gamma,
                           double amp) {
  std::vector<double> u(box.size());
  for (int i = 0; i < box.size(); ++i) {
    auto s = box.site_of(i);
    int d = 0;
    for (std::size_t j = 0; j < s.size(); ++j) d += std::abs(s[j] - c[j]);
    u[i] = amp * std::exp(-gamma * d);
  }
  return u;
}

void normalize(std::vector<double>& u) {
  double s = 0.0;
  for (double v : u) s += v * v;
  s = std::sqrt(s);
  for (double& v : u) v /= s;
}

}  // namespace

TEST_CASE("decay fit recovers an exact exponential profile") {
  BoxSpec box{1, 20};
  auto u = peaked(box, {3}, 0.5, 0.7);
  auto fit = decay_fit(box, u, 2);
  CHECK(fit.gamma == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(std::log(0.7)).epsilon(1e-10));
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.center == std::vector<int>{3});

  // shift equivariance
  auto v = peaked(box, {-4}, 0.5, 0.7);
  auto fit2 = decay_fit(box, v, 2);
  CHECK(fit2.gamma == doctest::Approx(fit.gamma).epsilon(1e-10));
  CHECK(fit2.center == std::vector<int>{-4});
}

TEST_CASE("decay fit in two dimensions and the flat case") {
  BoxSpec box{2, 7};
  auto u = peaked(box, {1, -2}, 0.8, 1.0);
  auto fit = decay_fit(box, u, 1);
  CHECK(fit.gamma == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(fit.center == std::vector<int>{1, -2});

  BoxSpec line{1, 15};
  std::vector<double> flat(line.size(), 0.1);
  auto ffit = decay_fit(line, flat, 2);
  CHECK(ffit.gamma == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(ffit.r2 == doctest::Approx(1.0));
}

TEST_CASE("decay fit refuses starved inputs") {
  BoxSpec box{1, 5};
  std::vector<double> u(box.size(), 0.5);
  CHECK_THROWS_AS(decay_fit(box, u, 3), TooFewSamples);
  std::vector<double> dead(box.size(), 1e-15);
  dead[5] = 1.0;
  CHECK_THROWS_AS(decay_fit(box, dead, 0), TooFewSamples);
  CHECK_THROWS_AS(decay_fit(box, std::vector<double>(3, 1.0), 0), InconsistentInput);
}

TEST_CASE("supercritical eigenvector decays at the coupling rate") {
  auto h = build_amo(3.0, kGolden, 0.123, 60);
  auto dec = eigen_all(h);
  auto& u = dec.vectors[h.size() / 2];
  auto fit = decay_fit(h.box, u, 8);
  CHECK(fit.gamma == doctest::Approx(std::log(3.0)).epsilon(0.15));
}

TEST_CASE("single-bump certificate sits at the trivial shift") {
  BoxSpec box{1, 18};
  auto u = peaked(box, {0}, 0.9, 0.35);
  auto cert = certify_good(box, u, 0.9, 6);
  CHECK(cert.ell == std::vector<int>{0});
  CHECK(cert.C == doctest::Approx(0.35).epsilon(1e-6));
  CHECK(cert.C_ell == kCellFloor);
  CHECK(cert.fit_residual <= 0.0);
  CHECK_FALSE(cert.normalized);

  normalize(u);
  auto cert2 = certify_good(box, u, 0.9, 6);
  CHECK(cert2.normalized);
}

TEST_CASE("two-bump certificate recovers the secondary peak") {
  BoxSpec box{1, 18};
  std::vector<double> u(box.size());
  const double g = 1.0, w = 0.3;
  for (int i = 0; i < box.size(); ++i) {
    int m = box.site_of(i)[0];
    u[i] = std::exp(-g * std::abs(m)) + w * std::exp(-g * std::abs(m + 5));
  }
  auto cert = certify_good(box, u, g, 8);
  CHECK(cert.ell == std::vector<int>{5});
  CHECK(cert.C == doctest::Approx(1.0).epsilon(0.2));
  CHECK(cert.C_ell == doctest::Approx(w).epsilon(0.2));
  CHECK(cert.fit_residual <= 0.0);

  // enlarging the search never worsens the budget
  double prev = 1e300;
  for (int r : {0, 2, 5, 8, 12}) {
    auto c = certify_good(box, u, g, r);
    CHECK(c.objective() <= prev * (1.0 + 1e-12));
    CHECK(c.fit_residual <= 0.0);
    prev = c.objective();
  }
}

TEST_CASE("certificates at an unattainable rate are refused") {
  BoxSpec box{1, 20};
  std::vector<double> flat(box.size(), 1.0);
  CHECK_THROWS_AS(certify_good(box, flat, 1.0, 4), NoFiniteCertificate);
  // a slow profile cannot carry a fast-rate certificate either
  auto slow = peaked(box, {0}, 0.1, 1.0);
  CHECK_THROWS_AS(certify_good(box, slow, 1.2, 4), NoFiniteCertificate);
  CHECK_THROWS_AS(certify_good(box, slow, -0.5, 4), InconsistentInput);
}

TEST_CASE("random rough profiles still certify pointwise when feasible") {
  BoxSpec box{1, 16};
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> jitter(0.2, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> u(box.size());
    for (int i = 0; i < box.size(); ++i) {
      int m = box.site_of(i)[0];
      u[i] = jitter(rng) * std::exp(-0.8 * std::abs(m - 2));
    }
    auto cert = certify_good(box, u, 0.7, 5);
    CHECK(cert.fit_residual <= 0.0);
    CHECK(cert.C_ell >= kCellFloor);
    CHECK(cert.C_ell <= 1.0);
  }
}

TEST_CASE("sule envelope of a synthetic family is tight") {
  BoxSpec box{1, 20};
  EigenDecomposition dec;
  const double g = 0.6, eps = 0.01;
  for (int c = -15; c <= 15; c += 3) {
    auto u = peaked(box, {c}, g, std::exp(eps * std::abs(c)));
    dec.vectors.push_back(u);
    dec.values.push_back(c);
  }
  auto fit = sule_fit(box, dec, eps);
  CHECK(fit.gamma == doctest::Approx(g).epsilon(1e-10));
  CHECK(fit.C_sule == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("supercritical box has a finite sule constant") {
  auto h = build_amo(3.0, kGolden, 0.321, 60);
  auto dec = eigen_all(h);
  auto fit = sule_fit(h.box, dec, 0.1);
  CHECK(fit.gamma == doctest::Approx(std::log(3.0)).epsilon(0.2));
  CHECK(fit.C_sule > 0.0);
  CHECK(fit.C_sule < 1e6);
}

TEST_CASE("phase center map flags delocalized boxes and tracks localized ones") {
  std::vector<double> thetas;
  std::vector<EigenDecomposition> free_decs, loc_decs;
  const int N = 30;
  for (int t = 0; t < 8; ++t) {
    double th = t / 8.0 + 0.013;
    thetas.push_back(th);
    free_decs.push_back(eigen_all(build_amo(0.0, kGolden, th, N)));
    loc_decs.push_back(eigen_all(build_amo(3.0, kGolden, th, N)));
  }
  BoxSpec box{1, N};
  auto free_map = phase_center_map(box, thetas, free_decs);
  for (auto& e : free_map) CHECK_FALSE(e.localized);

  auto loc_map = phase_center_map(box, thetas, loc_decs);
  int center0 = 0, localized = 0;
  for (auto& e : loc_map) {
    if (e.localized) ++localized;
    if (e.center == std::vector<int>{0}) ++center0;
  }
  CHECK(localized == 8);
  CHECK(center0 >= 7);  // fraction with a center-0 eigenvector above 0.9
}

TEST_CASE("shifting the phase by alpha shifts centers by one site") {
  // H(theta + alpha) is the one-site translate of H(theta) up to the walls,
  // so eigenvectors matched by eigenvalue carry their peaks one site left
  const int N = 24;
  const double lambda = 3.0, th = 0.05;
  BoxSpec box{1, N};
  auto a = eigen_all(build_amo(lambda, kGolden, th, N));
  auto b = eigen_all(build_amo(lambda, kGolden, th + kGolden, N));
  auto peak = [&](const std::vector<double>& u) {
    int p = 0;
    for (int i = 1; i < static_cast<int>(u.size()); ++i)
      if (std::fabs(u[i]) > std::fabs(u[p])) p = i;
    return box.site_of(p)[0];
  };
  int checked = 0, matched = 0;
  for (std::size_t m = 0; m < a.values.size(); ++m) {
    int pa = peak(a.vectors[m]);
    if (std::abs(pa) >= N / 2) continue;  // wall effects
    // nearest eigenvalue in the shifted box
    std::size_t best = 0;
    for (std::size_t k = 1; k < b.values.size(); ++k)
      if (std::fabs(b.values[k] - a.values[m]) < std::fabs(b.values[best] - a.values[m])) best = k;
    if (std::fabs(b.values[best] - a.values[m]) > 1e-6) continue;
    ++checked;
    if (peak(b.vectors[best]) == pa - 1) ++matched;
  }
  CHECK(checked >= 20);
  CHECK(matched >= checked * 9 / 10);
}
