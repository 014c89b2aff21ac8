#include "qpl/operators.hpp"

#include <cmath>

#include "qpl/util.hpp"

namespace qpl {

int BoxSpec::index_of(const std::vector<int>& n) const {
  int idx = 0;
  for (int i = 0; i < dim; ++i) idx = idx * side() + (n[i] + halfwidth);
  return idx;
}

std::vector<int> BoxSpec::site_of(int idx) const {
  std::vector<int> n(dim);
  for (int i = dim - 1; i >= 0; --i) {
    n[i] = idx % side() - halfwidth;
    idx /= side();
  }
  return n;
}

int BoxSpec::dist_l1(int idx) const {
  auto n = site_of(idx);
  int d = 0;
  for (int v : n) d += std::abs(v);
  return d;
}

int BoxSpec::dist_linf(int idx) const {
  auto n = site_of(idx);
  int d = 0;
  for (int v : n) d = std::max(d, std::abs(v));
  return d;
}

int BoxSpec::boundary_gap(int idx) const {
  auto n = site_of(idx);
  int g = halfwidth;
  for (int v : n) g = std::min(g, halfwidth - std::abs(v));
  return g;
}

void TruncatedOperator::apply(const double* x, double* y) const {
  int n = size();
  for (int i = 0; i < n; ++i) {
    KahanSum s;
    const double* row = mat.data() + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) s.add(row[j] * x[j]);
    y[i] = s.value();
  }
}

double TruncatedOperator::sym_defect() const {
  int n = size();
  double d = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) d = std::max(d, std::fabs(at(i, j) - at(j, i)));
  return d;
}

double TruncatedOperator::norm_inf() const {
  int n = size();
  double m = 0.0;
  for (int i = 0; i < n; ++i) {
    double r = 0.0;
    for (int j = 0; j < n; ++j) r += std::fabs(at(i, j));
    m = std::max(m, r);
  }
  return m;
}

namespace {

TruncatedOperator make_box(int dim, int N) {
  if (N < 0) throw BoxTooLarge("box halfwidth must be >= 0");
  BoxSpec box{dim, N};
  double sz = std::pow(2.0 * N + 1.0, dim);
  if (sz > kMaxSites)
    throw BoxTooLarge("box with " + std::to_string(static_cast<long long>(sz)) +
                      " sites exceeds cap " + std::to_string(kMaxSites));
  TruncatedOperator op;
  op.box = box;
  op.mat.assign(static_cast<std::size_t>(box.size()) * box.size(), 0.0);
  return op;
}

}  // namespace

TruncatedOperator build_amo(double lambda, double alpha, double theta, int N) {
  TruncatedOperator op = make_box(1, N);
  op.tridiagonal = true;
  int n = op.size();
  for (int i = 0; i < n; ++i) {
    int site = i - N;
    op.at(i, i) = 2.0 * lambda * std::cos(2.0 * M_PI * (theta + site * alpha));
    if (i + 1 < n) {
      op.at(i, i + 1) = 1.0;
      op.at(i + 1, i) = 1.0;
    }
  }
  op.meta["family"] = "amo";
  op.meta["lambda"] = fmt_g17(lambda);
  op.meta["alpha"] = fmt_g17(alpha);
  op.meta["theta"] = fmt_g17(theta);
  op.meta["halfwidth"] = std::to_string(N);
  return op;
}

TruncatedOperator build_longrange(const ScalarPoly& v, double lambda,
                                  const std::vector<double>& alpha, double theta, int N,
                                  double tail_tol) {
  int d = v.dim;
  if (static_cast<int>(alpha.size()) != d)
    throw InconsistentInput("frequency dimension must match the potential dimension");
  // Real even V <=> real Fourier coefficients; complex-Hermitian hoppings are
  // outside this artifact's real-symmetric storage.
  for (auto& [k, c] : v.c)
    if (std::fabs(c.imag()) > 1e-12)
      throw NonHermitianPotential("potential coefficients must be real (even potential); a mode has imag " +
                                  fmt_g17(c.imag()));
  double defect = v.reality_defect();
  if (defect > 1e-12)
    throw NonHermitianPotential("potential is not real-valued, defect " + fmt_g17(defect));

  // hop cut K: keep |k|_1 <= K where the dropped coefficients are below
  // tail_tol (the h-norm tail bound ||V||_h e^{-2 pi h K} at the stored band).
  int band = v.band();
  int K = 0;
  for (auto& [k, c] : v.c)
    if (std::abs(c) > tail_tol) K = std::max(K, key_l1(k));

  TruncatedOperator op = make_box(d, N);
  op.tridiagonal = (d == 1 && K <= 1);
  int n = op.size();
  for (int i = 0; i < n; ++i) {
    auto si = op.box.site_of(i);
    double dot = 0.0;
    for (int j = 0; j < d; ++j) dot += si[j] * alpha[j];
    op.at(i, i) = 2.0 * lambda * std::cos(2.0 * M_PI * (theta + dot)) + v.get({0, 0, 0}).real();
    for (auto& [k, c] : v.c) {
      int l1 = key_l1(k);
      if (l1 == 0 || l1 > K) continue;
      auto sj = si;
      bool in = true;
      for (int j = 0; j < d; ++j) {
        sj[j] = si[j] - k[j];
        if (std::abs(sj[j]) > N) in = false;
      }
      if (in) op.at(i, op.box.index_of(sj)) = c.real();
    }
  }
  op.meta["family"] = "longrange";
  op.meta["lambda"] = fmt_g17(lambda);
  op.meta["theta"] = fmt_g17(theta);
  op.meta["halfwidth"] = std::to_string(N);
  op.meta["hop_cut"] = std::to_string(K);
  op.meta["band"] = std::to_string(band);
  return op;
}

TruncatedOperator build_md_schrodinger(double lambda_inv, const std::vector<double>& alpha,
                                       const std::vector<double>& theta, int N) {
  if (alpha.size() != theta.size() || alpha.empty() || alpha.size() > 3)
    throw InconsistentInput("frequency/phase dimension mismatch or unsupported dimension");
  TruncatedOperator op = make_box(1, N);
  op.tridiagonal = true;
  int n = op.size();
  for (int i = 0; i < n; ++i) {
    int site = i - N;
    double d = 0.0;
    for (std::size_t j = 0; j < alpha.size(); ++j)
      d += std::cos(2.0 * M_PI * (theta[j] + site * alpha[j]));
    op.at(i, i) = 2.0 * lambda_inv * d;
    if (i + 1 < n) {
      op.at(i, i + 1) = 1.0;
      op.at(i + 1, i) = 1.0;
    }
  }
  op.meta["family"] = "md_schrodinger";
  op.meta["dim_freq"] = std::to_string(alpha.size());
  op.meta["halfwidth"] = std::to_string(N);
  return op;
}

TruncatedOperator build_md_longrange(double lambda, const std::vector<double>& alpha, double theta,
                                     int N) {
  int d = static_cast<int>(alpha.size());
  if (d < 1 || d > 3) throw InconsistentInput("supported lattice dimensions: 1..3");
  TruncatedOperator op = make_box(d, N);
  op.tridiagonal = (d == 1);
  int n = op.size();
  for (int i = 0; i < n; ++i) {
    auto site = op.box.site_of(i);
    double dot = 0.0;
    for (int j = 0; j < d; ++j) dot += site[j] * alpha[j];
    op.at(i, i) = 2.0 * lambda * std::cos(2.0 * M_PI * (theta + dot));
    for (int j = 0; j < d; ++j) {
      for (int dir : {-1, 1}) {
        auto nb = site;
        nb[j] += dir;
        if (std::abs(nb[j]) > N) continue;  // Dirichlet wall
        op.at(i, op.box.index_of(nb)) = 1.0;
      }
    }
  }
  op.meta["family"] = "md_longrange";
  op.meta["lambda"] = fmt_g17(lambda);
  op.meta["theta"] = fmt_g17(theta);
  op.meta["dim"] = std::to_string(d);
  op.meta["halfwidth"] = std::to_string(N);
  return op;
}

}  // namespace qpl
