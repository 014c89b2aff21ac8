#include "qpl/eigensolver.hpp"

#include <cfloat>
#include <cmath>
#include <numeric>

#include "qpl/util.hpp"

namespace qpl {

void tridiagonalize(std::vector<double>& a, int n, std::vector<double>& d, std::vector<double>& e) {
  d.assign(n, 0.0);
  e.assign(n, 0.0);
  auto A = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };

  for (int i = n - 1; i >= 1; --i) {
    int l = i - 1;
    double h = 0.0;
    if (l > 0) {
      double scale = 0.0;
      for (int k = 0; k <= l; ++k) scale += std::fabs(A(i, k));
      if (scale == 0.0) {
        e[i] = A(i, l);
      } else {
        for (int k = 0; k <= l; ++k) {
          A(i, k) /= scale;
          h += A(i, k) * A(i, k);
        }
        double f = A(i, l);
        double g = (f >= 0.0) ? -std::sqrt(h) : std::sqrt(h);
        e[i] = scale * g;
        h -= f * g;
        A(i, l) = f - g;
        f = 0.0;
        for (int j = 0; j <= l; ++j) {
          A(j, i) = A(i, j) / h;
          g = 0.0;
          for (int k = 0; k <= j; ++k) g += A(j, k) * A(i, k);
          for (int k = j + 1; k <= l; ++k) g += A(k, j) * A(i, k);
          e[j] = g / h;
          f += e[j] * A(i, j);
        }
        double hh = f / (h + h);
        for (int j = 0; j <= l; ++j) {
          f = A(i, j);
          double gj = e[j] - hh * f;
          e[j] = gj;
          for (int k = 0; k <= j; ++k) A(j, k) -= f * e[k] + gj * A(i, k);
        }
      }
    } else {
      e[i] = A(i, l);
    }
    d[i] = h;
  }
  d[0] = 0.0;
  e[0] = 0.0;
  for (int i = 0; i < n; ++i) {
    int l = i - 1;
    if (d[i] != 0.0) {
      for (int j = 0; j <= l; ++j) {
        double g = 0.0;
        for (int k = 0; k <= l; ++k) g += A(i, k) * A(k, j);
        for (int k = 0; k <= l; ++k) A(k, j) -= g * A(k, i);
      }
    }
    d[i] = A(i, i);
    A(i, i) = 1.0;
    for (int j = 0; j <= l; ++j) {
      A(j, i) = 0.0;
      A(i, j) = 0.0;
    }
  }
}

namespace {

// Implicit-shift QL sweeps on (d, e), rotations accumulated into the n x n
// row-major matrix z (columns become eigenvectors).
void ql_implicit(std::vector<double>& d, std::vector<double>& e, std::vector<double>& z, int n) {
  auto Z = [&](int i, int j) -> double& { return z[static_cast<std::size_t>(i) * n + j]; };
  for (int i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;

  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
        if (std::fabs(e[m]) <= DBL_EPSILON * dd) break;
      }
      if (m != l) {
        if (iter++ == 60)
          throw NoConvergence("QL sweep cap (60) hit at eigenvalue index " + std::to_string(l));
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));  // Wilkinson shift
        double s = 1.0, c = 1.0, p = 0.0;
        bool underflow = false;
        for (int i = m - 1; i >= l; --i) {
          double f = s * e[i];
          double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          for (int k = 0; k < n; ++k) {
            f = Z(k, i + 1);
            Z(k, i + 1) = s * Z(k, i) + c * f;
            Z(k, i) = c * Z(k, i) - s * f;
          }
        }
        if (underflow) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

void extract_tridiagonal(const TruncatedOperator& h, std::vector<double>& d,
                         std::vector<double>& e) {
  int n = h.size();
  d.resize(n);
  e.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    d[i] = h.at(i, i);
    if (i > 0) e[i] = h.at(i - 1, i);
  }
}

double mat_scale(const std::vector<double>& d, const std::vector<double>& e) {
  double s = 0.0;
  for (double v : d) s = std::max(s, std::fabs(v));
  for (double v : e) s = std::max(s, std::fabs(v));
  return s;
}

// Deterministic orthonormalization of near-degenerate clusters, in ascending
// eigenvalue order.
void orthonormalize_clusters(EigenDecomposition& dec, double scale) {
  int n = static_cast<int>(dec.values.size());
  int i = 0;
  while (i < n) {
    int j = i + 1;
    while (j < n && dec.values[j] - dec.values[j - 1] < 1e-12 * scale) ++j;
    if (j - i > 1) {
      for (int a = i; a < j; ++a) {
        auto& u = dec.vectors[a];
        for (int b = i; b < a; ++b) {
          const auto& v = dec.vectors[b];
          double dot = 0.0;
          for (std::size_t k = 0; k < u.size(); ++k) dot += u[k] * v[k];
          for (std::size_t k = 0; k < u.size(); ++k) u[k] -= dot * v[k];
        }
        double nn = std::sqrt(std::inner_product(u.begin(), u.end(), u.begin(), 0.0));
        if (nn > 0.0)
          for (auto& x : u) x /= nn;
      }
    }
    i = j;
  }
}

// Solve (T - shift) x = rhs for tridiagonal T = (diag, off) by Gaussian
// elimination with partial pivoting (fill-in limited to two superdiagonals).
// rhs is overwritten with the solution.
void trisolve_pivot(const std::vector<double>& diag, const std::vector<double>& off, double shift,
                    std::vector<double>& x, double scale) {
  int n = static_cast<int>(diag.size());
  std::vector<double> u0(n), u1(n, 0.0), u2(n, 0.0);
  double c0 = diag[0] - shift;
  double c1 = (n > 1) ? off[1] : 0.0;
  double c2 = 0.0;
  for (int i = 0; i < n - 1; ++i) {
    double s0 = off[i + 1];
    double s1 = diag[i + 1] - shift;
    double s2 = (i + 2 < n) ? off[i + 2] : 0.0;
    if (std::fabs(s0) > std::fabs(c0)) {
      std::swap(c0, s0);
      std::swap(c1, s1);
      std::swap(c2, s2);
      std::swap(x[i], x[i + 1]);
    }
    if (c0 == 0.0) c0 = 1e-28 * scale + 1e-300;
    double m = s0 / c0;
    u0[i] = c0;
    u1[i] = c1;
    u2[i] = c2;
    x[i + 1] -= m * x[i];
    c0 = s1 - m * c1;
    c1 = s2 - m * c2;
    c2 = 0.0;
  }
  if (c0 == 0.0) c0 = 1e-28 * scale + 1e-300;
  u0[n - 1] = c0;
  x[n - 1] /= u0[n - 1];
  if (n >= 2) x[n - 2] = (x[n - 2] - u1[n - 2] * x[n - 1]) / u0[n - 2];
  for (int i = n - 3; i >= 0; --i) x[i] = (x[i] - u1[i] * x[i + 1] - u2[i] * x[i + 2]) / u0[i];
}

void fix_signs(EigenDecomposition& dec) {
  for (auto& u : dec.vectors) {
    std::size_t imax = 0;
    double best = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k)
      if (std::fabs(u[k]) > best) {
        best = std::fabs(u[k]);
        imax = k;
      }
    if (u[imax] < 0.0)
      for (auto& x : u) x = -x;
  }
}

void finish(const TruncatedOperator& h, EigenDecomposition& dec) {
  int n = h.size();
  double res = 0.0;
  std::vector<double> hu(n);
  for (std::size_t m = 0; m < dec.values.size(); ++m) {
    h.apply(dec.vectors[m].data(), hu.data());
    double r2 = 0.0;
    for (int k = 0; k < n; ++k) {
      double r = hu[k] - dec.values[m] * dec.vectors[m][k];
      r2 += r * r;
    }
    res = std::max(res, std::sqrt(r2));
  }
  dec.residual_bound = res;

  double od = 0.0;
  std::size_t mm = dec.values.size();
  for (std::size_t a = 0; a < mm; ++a) {
    for (std::size_t b = a; b < std::min(mm, a + 4); ++b) {
      double dot = 0.0;
      for (int k = 0; k < n; ++k) dot += dec.vectors[a][k] * dec.vectors[b][k];
      od = std::max(od, std::fabs(dot - (a == b ? 1.0 : 0.0)));
    }
  }
  dec.ortho_defect = od;
}

}  // namespace

int sturm_count(const std::vector<double>& d, const std::vector<double>& e, double x) {
  int n = static_cast<int>(d.size());
  int count = 0;
  double q = d[0] - x;
  if (q < 0.0) ++count;
  for (int i = 1; i < n; ++i) {
    double denom = q;
    if (denom == 0.0) denom = DBL_EPSILON * (std::fabs(e[i]) + DBL_MIN);
    q = d[i] - x - e[i] * e[i] / denom;
    if (q < 0.0) ++count;
  }
  return count;
}

EigenDecomposition eigen_all(const TruncatedOperator& h) {
  int n = h.size();
  std::vector<double> d, e, z;
  if (h.tridiagonal) {
    extract_tridiagonal(h, d, e);
    z.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i) * n + i] = 1.0;
  } else {
    z = h.mat;
    tridiagonalize(z, n, d, e);
  }
  ql_implicit(d, e, z, n);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return d[a] < d[b]; });

  EigenDecomposition dec;
  dec.values.resize(n);
  dec.vectors.assign(n, std::vector<double>(n));
  for (int m = 0; m < n; ++m) {
    dec.values[m] = d[order[m]];
    for (int k = 0; k < n; ++k) dec.vectors[m][k] = z[static_cast<std::size_t>(k) * n + order[m]];
  }
  double scale = std::max(h.norm_inf(), DBL_MIN);
  orthonormalize_clusters(dec, scale);
  fix_signs(dec);
  finish(h, dec);
  return dec;
}

EigenDecomposition eigen_window(const TruncatedOperator& h, double lo, double hi) {
  int n = h.size();
  std::vector<double> d, e, q;
  bool dense = !h.tridiagonal;
  if (dense) {
    q = h.mat;
    tridiagonalize(q, n, d, e);
  } else {
    extract_tridiagonal(h, d, e);
  }
  double scale = std::max(mat_scale(d, e), DBL_MIN);

  int k_lo = sturm_count(d, e, lo);
  int k_hi = sturm_count(d, e, hi);

  EigenDecomposition dec;
  std::vector<std::vector<double>> tvecs;
  for (int idx = k_lo; idx < k_hi; ++idx) {
    // bisection: find the idx-th eigenvalue (0-based) to high relative accuracy
    double a = lo, b = hi;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (a + b);
      if (sturm_count(d, e, mid) <= idx)
        a = mid;
      else
        b = mid;
      if (b - a < 1e-15 * scale) break;
    }
    double ev = 0.5 * (a + b);

    // inverse iteration on the tridiagonal with a deterministic seed
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = std::sin(1.7 * (i + 1));
    for (int pass = 0; pass < 4; ++pass) {
      trisolve_pivot(d, e, ev, x, scale);
      // deflate against near-degenerate neighbours already accepted, otherwise
      // repeated roots collapse onto one vector
      for (std::size_t m = 0; m < tvecs.size(); ++m) {
        if (std::fabs(dec.values[m] - ev) > 1e-7 * scale) continue;
        double dot = std::inner_product(x.begin(), x.end(), tvecs[m].begin(), 0.0);
        for (int i = 0; i < n; ++i) x[i] -= dot * tvecs[m][i];
      }
      double nn = std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
      if (nn < 1e-12) {
        for (int i = 0; i < n; ++i) x[i] = std::sin(2.3 * (i + 1) + pass);
        continue;
      }
      for (auto& v : x) v /= nn;
    }
    tvecs.push_back(x);
    dec.values.push_back(ev);
  }

  // map back to the original basis for the dense path
  dec.vectors.resize(tvecs.size());
  for (std::size_t m = 0; m < tvecs.size(); ++m) {
    if (dense) {
      std::vector<double> u(n, 0.0);
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += q[static_cast<std::size_t>(i) * n + k] * tvecs[m][k];
        u[i] = s;
      }
      dec.vectors[m] = std::move(u);
    } else {
      dec.vectors[m] = std::move(tvecs[m]);
    }
  }
  fix_signs(dec);
  finish(h, dec);
  return dec;
}

}  // namespace qpl
