#include "qpl/mat2.hpp"

namespace qpl {

namespace {

// sinh(mu)/mu with the small-argument series.
cplx sinhc(cplx mu) {
  if (std::abs(mu) < 1e-4) {
    cplx m2 = mu * mu;
    return 1.0 + m2 / 6.0 + m2 * m2 / 120.0;
  }
  return std::sinh(mu) / mu;
}

}  // namespace

Mat2 mexp(const Mat2& x) {
  cplx half_tr = 0.5 * x.trace();
  Mat2 x0 = x - Mat2::ident() * half_tr;  // traceless part
  cplx mu2 = -x0.det();
  cplx mu = std::sqrt(mu2);
  Mat2 e = Mat2::ident() * std::cosh(mu) + x0 * sinhc(mu);
  return e * std::exp(half_tr);
}

Mat2 mlog_near_id(const Mat2& w) {
  Mat2 x = w - Mat2::ident();
  if (x.norm() > 0.8)
    throw OverflowGuard("matrix log series requires a near-identity argument");
  // log(I+X) = sum (-1)^{k+1} X^k / k
  Mat2 term = x;
  Mat2 acc = x;
  for (int k = 2; k <= 64; ++k) {
    term = term * x;
    Mat2 add = term * ((k % 2 == 0 ? -1.0 : 1.0) / static_cast<double>(k));
    acc = acc + add;
    if (add.norm() < 1e-18) break;
  }
  return acc;
}

Mat2 rot2(double phi) {
  double c = std::cos(2.0 * M_PI * phi), s = std::sin(2.0 * M_PI * phi);
  return {c, -s, s, c};
}

const Mat2 kCayley = [] {
  cplx i(0.0, 1.0);
  Mat2 m{1.0, -i, 1.0, i};
  return m * (1.0 / (2.0 * i));
}();
const Mat2 kCayleyInv = kCayley.inverse();

Mat2 to_su11(const Mat2& sl2) { return kCayley * sl2 * kCayleyInv; }
Mat2 from_su11(const Mat2& su) { return kCayleyInv * su * kCayley; }

Mat2 su11_mat(const Su11& g) {
  cplx i(0.0, 1.0);
  return {i * g.t, g.nu, std::conj(g.nu), -i * g.t};
}

Su11 su11_log(const Mat2& ahat) {
  // ahat = [[a, b], [conj(b), conj(a)]] with |a|^2 - |b|^2 = 1.
  double ca = ahat.a.real();  // cos(sigma)
  if (ca > 1.0 + 1e-9 || ca < -1.0 - 1e-9)
    throw HyperbolicConstant("constant part is not elliptic (|trace|/2 = " +
                             std::to_string(std::fabs(ca)) + ")");
  ca = std::clamp(ca, -1.0, 1.0);
  double sigma = std::acos(ca);
  double s = std::sin(sigma);
  Su11 g;
  if (s < 1e-12) {
    // At sigma ~ 0 the matrix is I + G; at sigma ~ pi use the flipped matrix.
    if (ca > 0.0) {
      g.t = ahat.a.imag();
      g.nu = ahat.b;
    } else {
      throw HyperbolicConstant("constant part is numerically parabolic near -Id");
    }
  } else {
    double f = sigma / s;
    g.t = ahat.a.imag() * f;
    g.nu = ahat.b * f;
  }
  return g;
}

}  // namespace qpl
