#include "qpl/duality.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <set>
#include <string>

namespace qpl {

namespace {

double dot_alpha(const std::vector<std::int64_t>& n, const std::vector<double>& alpha) {
  double s = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) s += static_cast<double>(n[i]) * alpha[i];
  return s;
}

cplx unit(double revolutions) { return std::polar(1.0, 2.0 * M_PI * revolutions); }

Mat2 conj_entries(const Mat2& m) {
  return {std::conj(m.a), std::conj(m.b), std::conj(m.c), std::conj(m.d)};
}

}  // namespace

Diagonalizer diagonalize_near_identity(const Su11& g, double rho) {
  double sq = g.sq();
  if (std::fabs(sq - rho * rho) > 1e-8 * std::max(1.0, rho * rho))
    throw InconsistentInput("angle mismatch: t^2 - |nu|^2 = " + std::to_string(sq) +
                            " vs rho^2 = " + std::to_string(rho * rho));
  double na = std::abs(g.nu);
  if (na == 0.0) return {Mat2::ident(), true, 0.0};
  const cplx i(0.0, 1.0);
  const Mat2 gm = su11_mat(g);
  if (rho * g.t > 0.0 && 4.0 * na <= std::fabs(rho)) {
    // Explicit branch: columns are the exact eigenvectors, det = 1, and
    // |w| <= |nu| / (|t| + |rho|) <= |nu / rho| / 2 keeps the normalizer tame.
    cplx w = g.nu / cplx(g.t + rho, 0.0);
    double s = 1.0 / std::sqrt(1.0 - std::norm(w));
    Mat2 u{cplx(s, 0.0), i * w * s, -i * std::conj(w) * s, cplx(s, 0.0)};
    Mat2 r = u.inverse() * gm * u - Mat2{i * rho, 0.0, 0.0, -i * rho};
    assert(r.norm() <= 1e-6 * (1.0 + gm.norm()));
    (void)r;
    return {u, true, na / std::fabs(rho)};
  }
  // Unitary column: the first column is an exact i*rho eigenvector (null
  // vector of the better-conditioned row of G - i rho), phase-fixed so the
  // larger component is positive real.
  cplx v1, v2;
  if (std::hypot(g.t - rho, na) >= std::hypot(g.t + rho, na)) {
    v1 = g.nu;
    v2 = -i * cplx(g.t - rho, 0.0);
  } else {
    v1 = i * cplx(g.t + rho, 0.0);
    v2 = std::conj(g.nu);
  }
  double nn = std::sqrt(std::norm(v1) + std::norm(v2));
  if (nn == 0.0) return {Mat2::ident(), false, 2.0};
  v1 /= nn;
  v2 /= nn;
  cplx big = std::abs(v1) >= std::abs(v2) ? v1 : v2;
  cplx ph = std::conj(big) / std::abs(big);
  v1 *= ph;
  v2 *= ph;
  Mat2 u{v1, -std::conj(v2), v2, std::conj(v1)};
  double res = std::abs(gm.a * v1 + gm.b * v2 - i * rho * v1) +
               std::abs(gm.c * v1 + gm.d * v2 - i * rho * v2);
  assert(res <= 1e-6 * (1.0 + gm.norm()));
  (void)res;
  return {u, false, 2.0};
}

DualEigenfunction build_dual_eigenfunction(const ConjugacyDecomposition& dec,
                                           const ConstantCocycle& a_final,
                                           const DualContext& ctx, double residual_tol) {
  const int d = ctx.freq.dim();
  const std::vector<double>& alpha = ctx.freq.alpha;

  std::vector<std::int64_t> ell = dec.ell, ell0 = dec.deg_b_tilde;
  ell.resize(d, 0);
  ell0.resize(d, 0);
  std::vector<std::int64_t> m(d);
  for (int k = 0; k < d; ++k) m[k] = ell[k] + ell0[k];
  double two_rho_hat = 2.0 * ctx.rho - dot_alpha(m, alpha);
  double dist = torus_dist(two_rho_hat);
  if (dist < 1e-12)
    throw RationalRotation("2 rho - <ell + ell0, alpha> is integer at precision (dist = " +
                           std::to_string(dist) + ")");

  // su(1,1) data of the effective constant, PSL sign folded in.
  Mat2 a_eff = a_final.A * static_cast<double>(ctx.psl_sign);
  Su11 g = su11_log(to_su11(a_eff));
  double sq = g.sq();
  if (sq <= 0.0 && std::abs(g.nu) > 0.0)
    throw InconsistentInput("final constant is not elliptic (t^2 - |nu|^2 = " +
                            std::to_string(sq) + ")");
  double sg = std::copysign(std::sqrt(std::max(sq, 0.0)), g.t);

  // Which complex eigenvalue of the constant carries e^{2 pi i rho_hat}: the
  // principal one (first column of U) or its conjugate.  A mismatch beyond
  // tolerance means dec/a_final/rho do not describe the same reduction.
  cplx target = unit(0.5 * two_rho_hat);
  cplx eig = std::exp(cplx(0.0, sg));
  double dplus = std::abs(target - eig), dminus = std::abs(target - std::conj(eig));
  if (std::min(dplus, dminus) > 1e-6)
    throw InconsistentInput("rotation number and final constant disagree (side gaps " +
                            std::to_string(dplus) + ", " + std::to_string(dminus) + ")");
  bool conj_side = dminus < dplus;

  Diagonalizer dg = diagonalize_near_identity(g, sg);
  // The Cayley frame is not unimodular; renormalize so det B_1 = 1 pointwise,
  // which the l2-mass bound below relies on.
  Mat2 w = kCayleyInv * dg.u;
  w = w * (1.0 / std::sqrt(w.det()));
  if (conj_side) w = conj_entries(w);
  assert(std::abs(w.det() - 1.0) < 1e-10);

  // B_1 = B_tilde R_{<ell,theta>/2} e^Y W, all on the den-2 lattice.
  MatPoly bt = dec.b_tilde;
  if (bt.c.empty()) {
    bt = MatPoly(d, 1);
    bt.add_to({0, 0, 0}, Mat2::ident());
  }
  MatPoly ypoly = dec.y;
  if (ypoly.c.empty()) ypoly = MatPoly(d, 1);
  std::vector<int> ell_int(d);
  for (int k = 0; k < d; ++k) ell_int[k] = static_cast<int>(ell[k]);
  MatPoly b1 = mul(bt, half_rotation(d, ell_int));
  b1 = mul(b1, poly_exp(ypoly));
  for (auto& [k, v] : b1.c) v = v * w;
  double norm_b1 = b1.norm_h(0.0);

  // (1,1) entry, demodulated by e^{-2 pi i <ell + ell0, theta>/2}.  The shift
  // must land on even den-2 modes; anything else means the decomposition's
  // parity bookkeeping is broken.
  MatPoly b1a = b1.aligned_to(2);
  ScalarPoly zhat(d, 1);
  double odd_mass = 0.0, total_mass = 0.0;
  for (auto& [k, v] : b1a.c) {
    ModeKey nk = k;
    for (int t = 0; t < d; ++t) nk[t] -= static_cast<int>(m[t]);
    double w11 = std::abs(v.a);
    total_mass += w11;
    bool even = true;
    for (int t = 0; t < d; ++t) even = even && ((nk[t] & 1) == 0);
    if (!even) {
      odd_mass += w11;
      continue;
    }
    if (v.a == cplx(0.0)) continue;
    zhat.add_to({nk[0] / 2, nk[1] / 2, nk[2] / 2}, v.a);
  }
  if (odd_mass > 1e-10 * std::max(1.0, total_mass))
    throw InconsistentInput("demodulated series misses the integer lattice (odd mass " +
                            std::to_string(odd_mass) + ")");

  auto l2 = [](const ScalarPoly& s) {
    double q = 0.0;
    for (auto& [k, v] : s.c) q += std::norm(v);
    return std::sqrt(q);
  };
  double mass = l2(zhat);
  if (mass == 0.0) throw InconsistentInput("dual series vanished");
  zhat.drop(mass * 1e-16);

  // Box sized so the truncated residual is the full-lattice residual: every
  // hop from a retained mode stays inside.
  auto extent = [&](const ScalarPoly& s) {
    int e = 0;
    for (auto& [k, v] : s.c)
      for (int t = 0; t < d; ++t) e = std::max(e, std::abs(k[t]));
    return e;
  };
  int vext = extent(ctx.v);
  auto sites = [&](int n) {
    long long r = 1;
    for (int t = 0; t < d; ++t) r *= 2LL * n + 1;
    return r;
  };
  double trim = mass * 1e-14;
  while (sites(extent(zhat) + vext) > kMaxSites && trim < mass * 1e-6) {
    zhat.drop(trim);
    trim *= 100.0;
  }
  double mass_kept = l2(zhat);
  ScalarPoly zn = zhat * (1.0 / mass_kept);
  int halfw = extent(zn) + vext;

  TruncatedOperator L = build_longrange(ctx.v, ctx.lambda, alpha, ctx.rho, halfw);
  int sz = L.size();
  std::vector<double> xr(sz, 0.0), xi(sz, 0.0), yr(sz), yi(sz);
  std::vector<int> site(d);
  for (auto& [k, v] : zn.c) {
    for (int t = 0; t < d; ++t) site[t] = k[t];
    int idx = L.box.index_of(site);
    xr[idx] = v.real();
    xi[idx] = v.imag();
  }
  L.apply(xr.data(), yr.data());
  L.apply(xi.data(), yi.data());
  double ev = ctx.lambda * ctx.energy;
  double rr = 0.0;
  for (int idx = 0; idx < sz; ++idx) {
    double re = yr[idx] - ev * xr[idx], im = yi[idx] - ev * xi[idx];
    rr += re * re + im * im;
  }
  double residual = std::sqrt(rr);
  if (residual > residual_tol)
    throw ResidualTooLarge("eigen-equation residual " + std::to_string(residual) +
                           " exceeds tolerance " + std::to_string(residual_tol));

  DualEigenfunction out;
  out.coefficients = zn;
  out.energy = ev;
  out.phase = ctx.rho;
  out.ell = ell;
  if (conj_side)
    for (auto& e : out.ell) e = -e;
  out.c = 8.0 * std::pow(dec.norm_b_tilde, 4);
  out.c_ell = std::min(1.0, dec.norm_y + 2.0 * std::abs(g.nu) / dist);
  out.dist = dist;
  out.residual = residual;
  out.mass_prenorm = mass;
  out.norm_b1 = norm_b1;
  out.mass_bound_ok = mass * 2.0 * norm_b1 >= 1.0 - 1e-9;
  out.diag_near_identity = dg.near_identity;
  out.diag_bound = dg.dist_id_bound;
  return out;
}

double duality_identity_check(const ScalarPoly& z, const ScalarPoly& v, double lambda,
                              const std::vector<double>& alpha, double rho, double energy) {
  const int d = static_cast<int>(alpha.size());
  int dn = std::max(z.den, v.den);
  ScalarPoly za = z.aligned_to(dn), va = v.aligned_to(dn);

  // Series route: -lambda * (defect of the Schrodinger-side relation).
  std::vector<double> ap(alpha), an(alpha);
  for (auto& x : an) x = -x;
  ScalarPoly lhs = mul(va, za) - za * (lambda * energy);
  lhs = lhs + za.shifted(an) * (lambda * unit(-rho));
  lhs = lhs + za.shifted(ap) * (lambda * unit(rho));

  // Raw route: (L - lambda E) zhat, convolution and cosine diagonal by hand.
  std::set<ModeKey> keys;
  for (auto& [k, c0] : lhs.c) keys.insert(k);
  for (auto& [k, c0] : za.c) keys.insert(k);
  for (auto& [kv, cv] : va.c)
    for (auto& [kz, cz] : za.c) keys.insert(key_add(kv, kz));
  double worst = 0.0;
  for (auto& n : keys) {
    cplx conv = 0.0;
    for (auto& [kv, cv] : va.c) {
      ModeKey rem{n[0] - kv[0], n[1] - kv[1], n[2] - kv[2]};
      conv += cv * za.get(rem);
    }
    double dot = 0.0;
    for (int t = 0; t < d; ++t) dot += static_cast<double>(n[t]) * alpha[t];
    cplx zc = za.get(n);
    cplx r = conv + 2.0 * lambda * std::cos(2.0 * M_PI * (rho + dot / dn)) * zc -
             lambda * energy * zc;
    worst = std::max(worst, std::abs(r - lhs.get(n)));
  }
  return worst;
}

}  // namespace qpl
