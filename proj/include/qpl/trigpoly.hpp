#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "qpl/mat2.hpp"

namespace qpl {

// Finite Fourier series on T^d (d <= 3) with frequencies n/den, den in {1,2}.
// den = 2 appears only through half-angle rotation conjugacies; products of two
// half-integer factors land back on integer modes.
using ModeKey = std::array<int, 3>;

inline int key_l1(const ModeKey& k) {
  return std::abs(k[0]) + std::abs(k[1]) + std::abs(k[2]);
}
inline ModeKey key_add(const ModeKey& a, const ModeKey& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline ModeKey key_neg(const ModeKey& a) { return {-a[0], -a[1], -a[2]}; }

namespace detail {
inline double coeff_norm(const cplx& v) { return std::abs(v); }
inline double coeff_norm(const Mat2& v) { return v.norm(); }
inline cplx coeff_conj(const cplx& v) { return std::conj(v); }
inline Mat2 coeff_conj(const Mat2& v) {
  return {std::conj(v.a), std::conj(v.b), std::conj(v.c), std::conj(v.d)};
}
}  // namespace detail

template <class T>
class Series {
 public:
  int dim = 1;
  int den = 1;
  std::map<ModeKey, T> c;  // ordered map => deterministic iteration

  Series() = default;
  explicit Series(int d, int dn = 1) : dim(d), den(dn) {}

  static Series constant(int d, const T& v) {
    Series s(d, 1);
    if (detail::coeff_norm(v) != 0.0) s.c[{0, 0, 0}] = v;
    return s;
  }

  void add_to(const ModeKey& k, const T& v) {
    auto it = c.find(k);
    if (it == c.end())
      c.emplace(k, v);
    else
      it->second = it->second + v;
  }

  T get(const ModeKey& k) const {
    auto it = c.find(k);
    return it == c.end() ? T{} : it->second;
  }

  int band() const {
    int b = 0;
    for (auto& [k, v] : c) b = std::max(b, key_l1(k));
    return b;
  }

  double norm_h(double h) const {
    double s = 0.0;
    for (auto& [k, v] : c)
      s += detail::coeff_norm(v) * std::exp(2.0 * M_PI * h * key_l1(k) / den);
    return s;
  }

  // Removes coefficients below abs_tol; returns the h-weighted mass dropped.
  double drop(double abs_tol, double h = 0.0) {
    double lost = 0.0;
    for (auto it = c.begin(); it != c.end();) {
      double n = detail::coeff_norm(it->second);
      if (n < abs_tol) {
        lost += n * std::exp(2.0 * M_PI * h * key_l1(it->first) / den);
        it = c.erase(it);
      } else {
        ++it;
      }
    }
    return lost;
  }

  Series operator+(const Series& o) const {
    Series r = align_with(o);
    for (auto& [k, v] : o.aligned_to(r.den).c) r.add_to(k, v);
    return r;
  }
  Series operator-(const Series& o) const {
    Series r = align_with(o);
    for (auto& [k, v] : o.aligned_to(r.den).c) r.add_to(k, v * (-1.0));
    return r;
  }
  Series operator*(double s) const {
    Series r = *this;
    for (auto& [k, v] : r.c) v = v * s;
    return r;
  }
  Series operator*(cplx s) const {
    Series r = *this;
    for (auto& [k, v] : r.c) v = v * s;
    return r;
  }

  // theta -> F(theta + delta): multiplies coefficients by e^{2 pi i <n,delta>/den}.
  Series shifted(const std::vector<double>& delta) const {
    Series r(dim, den);
    for (auto& [k, v] : c) {
      double dot = 0.0;
      for (int i = 0; i < dim; ++i) dot += static_cast<double>(k[i]) * delta[i];
      r.c[k] = v * std::exp(cplx(0.0, 2.0 * M_PI * dot / den));
    }
    return r;
  }

  // Coefficients of theta -> conj(F(theta)) (entrywise conjugate).
  Series conj_reflected() const {
    Series r(dim, den);
    for (auto& [k, v] : c) r.c[key_neg(k)] = detail::coeff_conj(v);
    return r;
  }

  // F is (entrywise) real-valued iff c(-n) = conj(c(n)); returns the defect.
  double reality_defect() const {
    double d0 = 0.0;
    for (auto& [k, v] : c) {
      T other = get(key_neg(k));
      T diff = detail::coeff_conj(other) - v;
      d0 = std::max(d0, detail::coeff_norm(diff));
    }
    return d0;
  }

  void realify() {
    Series r = conj_reflected();
    for (auto& [k, v] : c) v = (v + r.get(k)) * 0.5;
  }

  T eval(const std::vector<double>& theta) const {
    T s{};
    for (auto& [k, v] : c) {
      double dot = 0.0;
      for (int i = 0; i < dim; ++i) dot += static_cast<double>(k[i]) * theta[i];
      s = s + v * std::exp(cplx(0.0, 2.0 * M_PI * dot / den));
    }
    return s;
  }

  T eval_c(const std::vector<cplx>& theta) const {
    T s{};
    for (auto& [k, v] : c) {
      cplx dot = 0.0;
      for (int i = 0; i < dim; ++i) dot += static_cast<double>(k[i]) * theta[i];
      s = s + v * std::exp(cplx(0.0, 2.0 * M_PI) * dot / static_cast<double>(den));
    }
    return s;
  }

  Series aligned_to(int target_den) const {
    if (den == target_den) return *this;
    Series r(dim, target_den);
    int f = target_den / den;
    for (auto& [k, v] : c) r.c[{k[0] * f, k[1] * f, k[2] * f}] = v;
    return r;
  }

  // Collapses den=2 storage back to den=1 when every mode is even.
  void normalize_den() {
    if (den == 1) return;
    for (auto& [k, v] : c)
      if ((k[0] | k[1] | k[2]) & 1) return;
    std::map<ModeKey, T> nc;
    for (auto& [k, v] : c) nc[{k[0] / 2, k[1] / 2, k[2] / 2}] = v;
    c.swap(nc);
    den = 1;
  }

 private:
  Series align_with(const Series& o) const {
    int dn = std::max(den, o.den);
    return aligned_to(dn);
  }
};

using ScalarPoly = Series<cplx>;
using MatPoly = Series<Mat2>;

template <class T>
Series<T> mul(const Series<T>& x, const Series<T>& y, double drop_tol = 0.0);

extern template Series<cplx> mul(const Series<cplx>&, const Series<cplx>&, double);
extern template Series<Mat2> mul(const Series<Mat2>&, const Series<Mat2>&, double);

// Pointwise matrix products/exp/log on series.
MatPoly poly_exp(const MatPoly& y, double drop_tol = 1e-30);
MatPoly poly_log_near_id(const MatPoly& w, double drop_tol = 1e-30);
MatPoly poly_adjoint(const MatPoly& f);

// Real rotation by the half-angle 2 pi <n, theta> / 2 (den = 2 series, degree n).
MatPoly half_rotation(int dim, const std::vector<int>& n);

// Scalar helpers
ScalarPoly cosine_poly(int dim, int axis, double amplitude);  // amplitude*cos(2 pi theta_axis)

}  // namespace qpl
