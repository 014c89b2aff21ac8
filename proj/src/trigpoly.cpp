#include "qpl/trigpoly.hpp"

namespace qpl {

namespace {

// Dense 1-d convolution fast path.
template <class T>
Series<T> mul_dense_1d(const Series<T>& x, const Series<T>& y, double drop_tol) {
  int bx = x.band(), by = y.band();
  std::vector<T> xv(2 * bx + 1), yv(2 * by + 1), rv(2 * (bx + by) + 1);
  for (auto& [k, v] : x.c) xv[k[0] + bx] = v;
  for (auto& [k, v] : y.c) yv[k[0] + by] = v;
  for (int i = -bx; i <= bx; ++i) {
    const T& a = xv[i + bx];
    if (detail::coeff_norm(a) == 0.0) continue;
    for (int j = -by; j <= by; ++j) {
      const T& b = yv[j + by];
      if (detail::coeff_norm(b) == 0.0) continue;
      rv[i + j + bx + by] = rv[i + j + bx + by] + a * b;
    }
  }
  Series<T> r(x.dim, std::max(x.den, y.den));
  for (int m = -(bx + by); m <= bx + by; ++m) {
    const T& v = rv[m + bx + by];
    if (detail::coeff_norm(v) > drop_tol) r.c[{m, 0, 0}] = v;
  }
  return r;
}

}  // namespace

template <class T>
Series<T> mul(const Series<T>& x, const Series<T>& y, double drop_tol) {
  int dn = std::max(x.den, y.den);
  Series<T> a = x.aligned_to(dn), b = y.aligned_to(dn);
  Series<T> r(x.dim, dn);
  if (a.c.empty() || b.c.empty()) {
    r.normalize_den();
    return r;
  }
  if (x.dim == 1) {
    r = mul_dense_1d(a, b, drop_tol);
  } else {
    for (auto& [ka, va] : a.c)
      for (auto& [kb, vb] : b.c) r.add_to(key_add(ka, kb), va * vb);
    if (drop_tol > 0.0) r.drop(drop_tol);
  }
  r.normalize_den();
  return r;
}

template Series<cplx> mul(const Series<cplx>&, const Series<cplx>&, double);
template Series<Mat2> mul(const Series<Mat2>&, const Series<Mat2>&, double);

MatPoly poly_exp(const MatPoly& y, double drop_tol) {
  double n0 = y.norm_h(0.0);
  int s = 0;
  while (n0 > 0.25 && s < 60) {
    n0 *= 0.5;
    ++s;
  }
  MatPoly x = y * std::pow(0.5, s);
  MatPoly acc = MatPoly::constant(y.dim, Mat2::ident()).aligned_to(x.den);
  MatPoly term = acc;
  for (int k = 1; k <= 40; ++k) {
    term = mul(term, x, drop_tol * 1e-2);
    term = term * (1.0 / k);
    acc = acc + term;
    if (term.norm_h(0.0) < 1e-18) break;
  }
  for (int i = 0; i < s; ++i) {
    acc = mul(acc, acc, drop_tol);
  }
  acc.drop(drop_tol);
  return acc;
}

MatPoly poly_log_near_id(const MatPoly& w, double drop_tol) {
  MatPoly x = w - MatPoly::constant(w.dim, Mat2::ident());
  double n0 = x.norm_h(0.0);
  if (n0 > 0.6)
    throw OverflowGuard("series log requires near-identity input, ||W - id|| = " +
                        std::to_string(n0));
  MatPoly acc = x;
  MatPoly pw = x;
  for (int k = 2; k <= 80; ++k) {
    pw = mul(pw, x, drop_tol * 1e-2);
    MatPoly add = pw * ((k % 2 == 0 ? -1.0 : 1.0) / static_cast<double>(k));
    acc = acc + add;
    if (add.norm_h(0.0) < 1e-20) break;
  }
  acc.drop(drop_tol);
  return acc;
}

MatPoly poly_adjoint(const MatPoly& f) {
  MatPoly r(f.dim, f.den);
  for (auto& [k, v] : f.c) r.c[key_neg(k)] = v.adjoint();
  return r;
}

MatPoly half_rotation(int dim, const std::vector<int>& n) {
  // R_phi with phi = <n, theta>/2: cos and sin split over modes +-n (den 2).
  MatPoly r(dim, 2);
  ModeKey kp{0, 0, 0}, km{0, 0, 0};
  for (int i = 0; i < dim; ++i) {
    kp[i] = n[i];
    km[i] = -n[i];
  }
  cplx half(0.5, 0.0), ihalf(0.0, 0.5);
  // cos -> (e^{i.} + e^{-i.})/2, sin -> (e^{i.} - e^{-i.})/2i
  Mat2 cp{half, ihalf, -ihalf, half};    // coefficient at +n
  Mat2 cm{half, -ihalf, ihalf, half};    // coefficient at -n
  r.add_to(kp, cp);
  r.add_to(km, cm);  // n = 0 folds both onto the identity
  r.normalize_den();
  return r;
}

ScalarPoly cosine_poly(int dim, int axis, double amplitude) {
  ScalarPoly v(dim, 1);
  ModeKey kp{0, 0, 0}, km{0, 0, 0};
  kp[axis] = 1;
  km[axis] = -1;
  v.c[kp] = cplx(amplitude * 0.5, 0.0);
  v.c[km] = cplx(amplitude * 0.5, 0.0);
  return v;
}

}  // namespace qpl
