#pragma once

#include <cmath>
#include <complex>

#include "qpl/errors.hpp"

namespace qpl {

using cplx = std::complex<double>;

// Row-major complex 2x2 matrix [[a,b],[c,d]].  Real SL(2,R) data is stored in
// the same type; reality is asserted where it matters.
struct Mat2 {
  cplx a{0.0}, b{0.0}, c{0.0}, d{0.0};

  static Mat2 ident() { return {1.0, 0.0, 0.0, 1.0}; }
  static Mat2 zero() { return {}; }

  cplx trace() const { return a + d; }
  cplx det() const { return a * d - b * c; }

  Mat2 operator+(const Mat2& o) const { return {a + o.a, b + o.b, c + o.c, d + o.d}; }
  Mat2 operator-(const Mat2& o) const { return {a - o.a, b - o.b, c - o.c, d - o.d}; }
  Mat2 operator*(const Mat2& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
  }
  Mat2 operator*(cplx s) const { return {a * s, b * s, c * s, d * s}; }
  Mat2 operator*(double s) const { return {a * s, b * s, c * s, d * s}; }

  // Exact inverse via the adjugate; caller guarantees det away from 0.
  Mat2 inverse() const {
    cplx dt = det();
    return Mat2{d, -b, -c, a} * (1.0 / dt);
  }

  Mat2 adjoint() const {
    return {std::conj(a), std::conj(c), std::conj(b), std::conj(d)};
  }

  double fro() const {
    return std::sqrt(std::norm(a) + std::norm(b) + std::norm(c) + std::norm(d));
  }

  // Operator 2-norm (largest singular value), closed form.  Entries are
  // rescaled first so the squared terms cannot overflow.
  double norm() const {
    double s = std::max(std::max(std::abs(a), std::abs(b)), std::max(std::abs(c), std::abs(d)));
    if (s == 0.0 || !std::isfinite(s)) return s;
    cplx ra = a / s, rb = b / s, rc = c / s, rd = d / s;
    double t = std::norm(ra) + std::norm(rb) + std::norm(rc) + std::norm(rd);
    double dd = std::norm(ra * rd - rb * rc);
    double disc = t * t - 4.0 * dd;
    if (disc < 0.0) disc = 0.0;
    return s * std::sqrt(0.5 * (t + std::sqrt(disc)));
  }

  double max_imag() const {
    double m = std::fabs(a.imag());
    m = std::max(m, std::fabs(b.imag()));
    m = std::max(m, std::fabs(c.imag()));
    return std::max(m, std::fabs(d.imag()));
  }

  Mat2 real_part() const {
    return {cplx(a.real(), 0.0), cplx(b.real(), 0.0), cplx(c.real(), 0.0), cplx(d.real(), 0.0)};
  }
};

inline Mat2 operator*(double s, const Mat2& m) { return m * s; }
inline Mat2 operator*(cplx s, const Mat2& m) { return m * s; }

// exp(X) for 2x2 via the traceless closed form: for tr X = 0, X^2 = -det(X) I,
// so exp X = cosh(mu) I + sinh(mu)/mu X with mu^2 = -det X.
Mat2 mexp(const Mat2& x);

// Principal log for matrices near +/- a rotation is handled in the su(1,1)
// helpers; the general-purpose near-identity log is series based.
Mat2 mlog_near_id(const Mat2& w);

// Rotation by the angle 2*pi*phi (phi in revolutions).
Mat2 rot2(double phi);

// Schrodinger one-step map [[e - v, -1], [1, 0]].
inline Mat2 schrodinger_step(double e, double v) { return {e - v, -1.0, 1.0, 0.0}; }

// Cayley-type conjugation between SL(2,R) and SU(1,1):
//   msu = M A M^{-1} with M = (1/2i) [[1, -i], [1, i]].
extern const Mat2 kCayley;
extern const Mat2 kCayleyInv;
Mat2 to_su11(const Mat2& sl2);
Mat2 from_su11(const Mat2& su);

// su(1,1) generator [[i t, nu], [conj(nu), -i t]].
struct Su11 {
  double t = 0.0;
  cplx nu{0.0};
  double sq() const { return t * t - std::norm(nu); }  // = sigma^2 for elliptic
};

Mat2 su11_mat(const Su11& g);

// Log of an SU(1,1) matrix with |Re trace/2| <= 1 (elliptic/parabolic range).
// Throws HyperbolicConstant outside that range.
Su11 su11_log(const Mat2& ahat);

}  // namespace qpl
