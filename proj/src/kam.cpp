#include "qpl/kam.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "qpl/util.hpp"

namespace qpl {

namespace {

std::int64_t l1(const std::vector<std::int64_t>& n) {
  std::int64_t s = 0;
  for (auto v : n) s += std::llabs(v);
  return s;
}

double dot_alpha(const std::vector<std::int64_t>& n, const std::vector<double>& alpha) {
  double s = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) s += static_cast<double>(n[i]) * alpha[i];
  return s;
}

ModeKey to_key(const std::vector<std::int64_t>& n) {
  ModeKey k{0, 0, 0};
  for (std::size_t i = 0; i < n.size() && i < 3; ++i) k[i] = static_cast<int>(n[i]);
  return k;
}

std::vector<std::int64_t> from_key(const ModeKey& k, int dim) {
  std::vector<std::int64_t> n(dim);
  for (int i = 0; i < dim; ++i) n[i] = k[i];
  return n;
}

MatPoly const_poly(int dim, const Mat2& m) { return MatPoly::constant(dim, m); }

// coefficientwise l * c * r (constant-frame change of a series)
MatPoly conj_coeffs(const MatPoly& f, const Mat2& l, const Mat2& r) {
  MatPoly g(f.dim, f.den);
  for (auto& [k, v] : f.c) g.c[k] = l * v * r;
  return g;
}

Mat2 project_sl2(const Mat2& m) {
  Mat2 r = m.real_part();
  double dt = r.det().real();
  if (!(dt > 0.0))
    throw NoConvergence("constant part has nonpositive determinant " + fmt_g17(dt));
  return r * (1.0 / std::sqrt(dt));
}

// SU(1,1) change of basis diagonalizing the su(1,1) generator of A:
// q^{-1} [[it, nu],[conj nu, -it]] q = diag(i sigma, -i sigma).
struct DiagFrame {
  Mat2 q = Mat2::ident();
  Mat2 q_inv = Mat2::ident();
  double sigma = 0.0;
  int s = 1;  // sign of sigma (+1 at zero)
};

DiagFrame diag_frame(const ConstantCocycle& a) {
  DiagFrame d;
  d.sigma = a.sigma();
  d.s = d.sigma < 0.0 ? -1 : 1;
  double an = std::abs(a.su11.nu);
  if (an == 0.0) return d;
  if (a.su11.sq() <= 0.0)
    throw HyperbolicConstant("cannot diagonalize a parabolic constant (t^2 <= |nu|^2)");
  // tanh(2r) = |nu|/t; r keeps the sign of t
  double r = 0.5 * std::atanh(an / a.su11.t);
  double ch = std::cosh(r), sh = std::sinh(r);
  cplx i(0.0, 1.0);
  cplx eiphi = a.su11.nu / an;
  d.q = Mat2{ch, i * eiphi * sh, -i * std::conj(eiphi) * sh, ch};
  d.q_inv = Mat2{ch, -i * eiphi * sh, i * std::conj(eiphi) * sh, ch};
  Mat2 g = su11_mat(a.su11);
  Mat2 dd = d.q_inv * g * d.q;
  double off = std::max(std::abs(dd.b), std::abs(dd.c));
  if (off > 1e-10 * (1.0 + g.norm()))
    throw NoConvergence("su(1,1) diagonalization residual " + fmt_g17(off));
  return d;
}

struct HomologicalParts {
  MatPoly y_sl2;  // real solution
  MatPoly y_d;    // the same solution in the diagonal frame
  DiagFrame frame;
};

HomologicalParts solve_parts(const ConstantCocycle& a, const MatPoly& f,
                             const FrequencyVector& freq, double range,
                             const std::vector<std::int64_t>* resonance,
                             double divisor_floor) {
  if (f.den != 1) throw InconsistentInput("homological data must live on integer modes");
  HomologicalParts parts;
  parts.frame = diag_frame(a);
  const DiagFrame& fr = parts.frame;
  MatPoly fd = conj_coeffs(f, fr.q_inv * kCayley, kCayleyInv * fr.q);

  ModeKey skip12{0, 0, 0}, skip21{0, 0, 0};
  bool have_skip = false;
  if (resonance) {
    std::vector<std::int64_t> r12(*resonance);
    for (auto& v : r12) v *= fr.s;
    skip12 = to_key(r12);
    for (auto& v : r12) v = -v;
    skip21 = to_key(r12);
    have_skip = true;
  }

  MatPoly yd(f.dim, 1);
  for (auto& [k, v] : fd.c) {
    int kl1 = key_l1(k);
    if (kl1 == 0 || static_cast<double>(kl1) > range) continue;
    double w = 2.0 * M_PI * dot_alpha(from_key(k, f.dim), freq.alpha);
    auto divided = [&](cplx num, double angle, const char* which) -> cplx {
      if (num == 0.0) return 0.0;
      cplx div = std::polar(1.0, angle) - 1.0;
      if (std::abs(div) < divisor_floor)
        throw DcViolatedMidRun(std::string(which) + " divisor " + fmt_g17(std::abs(div)) +
                               " below floor at |n| = " + std::to_string(kl1));
      return num / div;
    };
    Mat2 y{};
    y.a = divided(v.a, w, "diagonal");
    y.d = divided(v.d, w, "diagonal");
    if (!(have_skip && k == skip12)) y.b = divided(v.b, w - 2.0 * fr.sigma, "upper");
    if (!(have_skip && k == skip21)) y.c = divided(v.c, w + 2.0 * fr.sigma, "lower");
    if (y.norm() > 0.0) yd.c[k] = y;
  }
  parts.y_d = yd;
  parts.y_sl2 = conj_coeffs(yd, kCayleyInv * fr.q, fr.q_inv * kCayley);
  parts.y_sl2.realify();
  return parts;
}

void for_grid(int d, int per_axis, const std::function<void(const std::vector<double>&)>& fn) {
  std::vector<double> th(d, 0.0);
  std::function<void(int)> rec = [&](int axis) {
    if (axis == d) {
      fn(th);
      return;
    }
    for (int i = 0; i < per_axis; ++i) {
      th[axis] = (static_cast<double>(i) + 0.31) / per_axis;
      rec(axis + 1);
    }
  };
  rec(0);
}

}  // namespace

double ConstantCocycle::sigma() const {
  double sq = su11.sq();
  double mag = sq > 0.0 ? std::sqrt(sq) : 0.0;
  return su11.t < 0.0 ? -mag : mag;
}

ConstantCocycle ConstantCocycle::from_matrix(const Mat2& a) {
  ConstantCocycle c;
  c.A = a;
  double tr = a.trace().real();
  if (std::fabs(tr) > 2.0 + 1e-9)
    throw HyperbolicConstant("|trace|/2 = " + fmt_g17(std::fabs(tr) / 2.0));
  c.xi = std::acos(std::clamp(tr / 2.0, -1.0, 1.0)) / (2.0 * M_PI);
  c.su11 = su11_log(to_su11(a));
  Mat2 back = from_su11(mexp(su11_mat(c.su11)));
  double err = (back - a).norm();
  if (err > 1e-10 * (1.0 + a.norm()))
    throw NoConvergence("su(1,1) round-trip defect " + fmt_g17(err));
  return c;
}

MatPoly homological_solve(const ConstantCocycle& a, const MatPoly& f,
                          const FrequencyVector& freq, double range,
                          const std::vector<std::int64_t>* resonance,
                          double divisor_floor) {
  return solve_parts(a, f, freq, range, resonance, divisor_floor).y_sl2;
}

KamState kam_initial_state(const Cocycle& c, double h, const KamConfig& cfg) {
  if (!(h > 0.0)) throw InconsistentInput("initial radius must be positive");
  const int d = c.dim();
  KamState st;
  st.freq = c.freq;
  st.h = h;
  st.deg.assign(d, 0);
  st.B = const_poly(d, Mat2::ident());
  Mat2 a0 = Mat2::ident();
  MatPoly f0(d, 1);
  switch (c.form) {
    case Cocycle::Form::Constant:
      a0 = c.constant;
      break;
    case Cocycle::Form::Schrodinger: {
      // S_E^V = [[E - v0, -1],[1, 0]] e^{f0} exactly, with f0 the nilpotent
      // lower-triangular carrying the oscillating part of the potential.
      cplx v0 = c.potential.get({0, 0, 0});
      a0 = Mat2{c.energy - v0, -1.0, 1.0, 0.0};
      for (auto& [k, v] : c.potential.c) {
        if (key_l1(k) == 0) continue;
        f0.c[k] = Mat2{0.0, 0.0, v, 0.0};
      }
      break;
    }
    case Cocycle::Form::Poly: {
      a0 = project_sl2(c.poly.get({0, 0, 0}));
      MatPoly g = mul(const_poly(d, a0.inverse()), c.poly, cfg.drop_tol);
      f0 = poly_log_near_id(g, cfg.drop_tol);
      f0.realify();
      for (auto& [k, v] : f0.c) {  // traceless representative (det drift is noise)
        cplx t = (v.a + v.d) * 0.5;
        v.a -= t;
        v.d -= t;
      }
      break;
    }
  }
  st.A = ConstantCocycle::from_matrix(a0);
  st.f = std::move(f0);
  st.eps = st.f.norm_h(h);
  return st;
}

KamStepResult kam_step(const KamState& st, double h_next, const KamConfig& cfg) {
  if (!(h_next > 0.0) || !(h_next < st.h))
    throw InconsistentInput("step radius must satisfy 0 < h_next < h");
  const int d = st.freq.dim();
  const auto& alpha = st.freq.alpha;

  KamStepResult out;
  KamStepReport& rep = out.report;
  KamState next = st;
  next.step = st.step + 1;
  next.h = h_next;

  double eps = st.f.norm_h(st.h);
  rep.eps = eps;

  if (eps < 1e-300) {
    next.f = MatPoly(d, 1);
    next.eps = 0.0;
    next.range = 0.0;
    rep.factor = const_poly(d, Mat2::ident());
    out.state = std::move(next);
    return out;
  }

  double d0 = cfg.d0 > 0.0 ? cfg.d0 : st.freq.kappa / 100.0;
  double base = std::min(1.0, 1.0 / st.h) * (st.h - h_next);
  rep.gate_bound =
      d0 / std::pow(st.A.A.norm(), cfg.c0) * std::pow(base, cfg.c0 * st.freq.tau);
  rep.gate_ok = eps <= rep.gate_bound;
  if (!rep.gate_ok && !cfg.force_gate)
    throw SmallnessGateFailed("eps = " + fmt_g17(eps) + " exceeds " + fmt_g17(rep.gate_bound) +
                              " at step " + std::to_string(st.step));

  double range = 2.0 * std::fabs(std::log(eps)) / (st.h - h_next);
  rep.range = range;
  next.range = range;

  // frequency certification up to the truncation range, within budget; the
  // divisor floor below still guards every mode actually divided
  std::int64_t want = static_cast<std::int64_t>(std::ceil(std::min(range, 9.0e18)));
  if (want > cfg.dc_bound_cap) {
    want = cfg.dc_bound_cap;
    rep.scan_truncated = true;
  }
  if (st.freq.certified_bound < want) {
    try {
      FrequencyVector fresh = certify_dc(alpha, st.freq.tau, want);
      next.freq.kappa = std::min(st.freq.kappa, fresh.kappa);
      next.freq.certified_bound = fresh.certified_bound;
    } catch (const RationalResonance& e) {
      throw DcViolatedMidRun(std::string("frequency failed certification: ") + e.what());
    }
  }

  // resonance scan: the ball |n|_1 <= min(range, budget), plus every mode f
  // actually carries beyond the ball
  double xi2 = 2.0 * st.A.xi;
  double thr_base = std::pow(eps, 1.0 / 15.0);
  auto threshold_at = [&](std::int64_t nl1) {
    double t = thr_base;
    if (cfg.kappa_rot > 0.0)
      t = std::min(t, 0.5 * cfg.kappa_rot /
                          std::pow(static_cast<double>(nl1) + 1.0, cfg.tau_rot));
    return t;
  };
  std::int64_t budget;
  if (d == 1)
    budget = cfg.scan_cap / 2;
  else if (d == 2)
    budget = static_cast<std::int64_t>(std::sqrt(static_cast<double>(cfg.scan_cap) / 2.0));
  else
    budget = static_cast<std::int64_t>(std::cbrt(static_cast<double>(cfg.scan_cap)));
  std::int64_t ball = static_cast<std::int64_t>(std::min(range, 9.0e18));
  if (ball > budget) {
    ball = budget;
    rep.scan_truncated = true;
  }

  std::vector<std::int64_t> found;
  double found_gap = 0.0, found_thr = 0.0;
  int candidates = 0;
  auto consider = [&](const std::vector<std::int64_t>& n) {
    std::int64_t nl1 = l1(n);
    if (nl1 == 0 || static_cast<double>(nl1) > range) return;
    double gap = torus_dist(xi2 - dot_alpha(n, alpha));
    double thr = threshold_at(nl1);
    if (gap >= thr) return;
    ++candidates;
    if (found.empty() || nl1 < l1(found) || (nl1 == l1(found) && gap < found_gap)) {
      found = n;
      found_gap = gap;
      found_thr = thr;
    }
  };
  if (ball >= 1) for_each_index(d, ball, consider);
  for (auto& [k, v] : st.f.c)
    if (key_l1(k) > ball) consider(from_key(k, d));

  if (candidates > 1 && !cfg.allow_multiple_resonances)
    throw MultipleResonances(std::to_string(candidates) +
                             " modes violate the resonance gap at step " +
                             std::to_string(st.step) + "; smallest |n| = " +
                             std::to_string(l1(found)));
  rep.multiple_candidates = candidates;

  // Finishing move shared by both branches: the new constant is the SL(2,R)
  // projection of mode zero of the conjugated series W, pulled back from -Id
  // when a resonance landed there (PSL sign tracked), and f+ is the exact
  // series log of A+^{-1} W, so no estimate is assumed anywhere.
  auto finish = [&](MatPoly&& w, MatPoly&& bar) {
    Mat2 ap = project_sl2(w.get({0, 0, 0}));
    // a resonant landing sits near +-Id; pull the -Id branch back to +Id in
    // PSL(2,R) so the su(1,1) angle stays small. Non-resonant steps move A by
    // O(eps) and never cross branches.
    int flip = 1;
    if (rep.tag == KamCase::Resonant && ap.trace().real() < 0.0) {
      ap = ap * -1.0;
      flip = -1;
    }
    rep.psl_flip = flip;
    rep.delta_a = (ap * static_cast<double>(flip) - st.A.A).norm();
    MatPoly g = mul(const_poly(d, ap.inverse() * static_cast<double>(flip)), w, cfg.drop_tol);
    MatPoly fp = poly_log_near_id(g, cfg.drop_tol);
    fp.realify();
    // project back to traceless coefficients: determinant drift of the held
    // series is arithmetic noise, not a cocycle perturbation, and a mode-zero
    // trace can never be absorbed by the det-normalized constant part (the
    // discarded piece stays visible in the grid residual)
    for (auto& [k, v] : fp.c) {
      cplx t = (v.a + v.d) * 0.5;
      v.a -= t;
      v.d -= t;
    }
    double eps_next = fp.norm_h(h_next);
    rep.eps_next = eps_next;
    if (!std::isfinite(eps_next))
      throw NoConvergence("conjugated series overflowed at step " + std::to_string(st.step) +
                          " (resonant mode too deep for radius " + fmt_g17(h_next) + ")");
    rep.slack_quadratic = eps_next / std::max(eps * eps, 1e-300);
    if (rep.tag == KamCase::NonResonant) {
      // 3/2-power contraction is the hard floor (the quadratic target is
      // logged); near the stopping tolerance the weighted norm sits on the
      // series drop floor, so reaching the target also counts
      double want_contr = std::max(std::pow(eps, 1.5), cfg.target_eps);
      if (eps_next > want_contr)
        throw NoConvergence("contraction failed at step " + std::to_string(st.step) +
                            ": eps " + fmt_g17(eps) + " -> " + fmt_g17(eps_next));
    } else {
      Su11 su = su11_log(to_su11(ap));
      rep.nu_abs = std::abs(su.nu);
      rep.t_abs = std::fabs(su.t);
      rep.bar_norm = bar.norm_h(h_next);
    }
    next.A = ConstantCocycle::from_matrix(ap);
    next.f = std::move(fp);
    next.eps = eps_next;
    next.B = mul(st.B, bar, cfg.drop_tol);
    next.psl_sign = st.psl_sign * flip;
    rep.factor = std::move(bar);
  };

  if (found.empty()) {
    rep.tag = KamCase::NonResonant;
    MatPoly y = homological_solve(st.A, st.f, next.freq, range, nullptr, cfg.divisor_floor);
    MatPoly bar = poly_exp(y, cfg.drop_tol);
    MatPoly bar_inv = poly_exp(y * -1.0, cfg.drop_tol);
    rep.bar_dist_id = (bar - const_poly(d, Mat2::ident())).norm_h(h_next);
    MatPoly aef = mul(const_poly(d, st.A.A), poly_exp(st.f, cfg.drop_tol), cfg.drop_tol);
    MatPoly w = mul(mul(bar_inv.shifted(alpha), aef, cfg.drop_tol), bar, cfg.drop_tol);
    w.realify();
    finish(std::move(w), std::move(bar));
  } else {
    rep.tag = KamCase::Resonant;
    rep.gap = found_gap;
    rep.threshold = found_thr;
    auto parts = solve_parts(st.A, st.f, next.freq, range, &found, cfg.divisor_floor);
    const DiagFrame& fr = parts.frame;

    // Work in the diagonal su(1,1) frame, where conjugating by the half-angle
    // phase diag(e^{s pi i <n,theta>}, e^{-s pi i <n,theta>}) is an exact mode
    // shift: off-diagonal entries move by -+ s n (sending the resonant mode to
    // zero) and pick up a constant phase; diagonal entries only see the phase.
    MatPoly fd = conj_coeffs(st.f, fr.q_inv * kCayley, kCayleyInv * fr.q);
    Mat2 ad = fr.q_inv * to_su11(st.A.A) * fr.q;
    MatPoly eyd = poly_exp(parts.y_d, cfg.drop_tol);
    MatPoly eyd_inv = poly_exp(parts.y_d * -1.0, cfg.drop_tol);
    MatPoly core =
        mul(mul(eyd_inv.shifted(alpha),
                mul(const_poly(d, ad), poly_exp(fd, cfg.drop_tol), cfg.drop_tol), cfg.drop_tol),
            eyd, cfg.drop_tol);

    std::vector<std::int64_t> sn(found);
    for (auto& v : sn) v *= fr.s;
    ModeKey ks = to_key(sn);
    cplx c1 = std::polar(1.0, -M_PI * static_cast<double>(fr.s) * dot_alpha(found, alpha));
    MatPoly wd(d, 1);
    for (auto& [k, v] : core.c) {
      if (v.a != 0.0 || v.d != 0.0)
        wd.add_to(k, Mat2{v.a * c1, 0.0, 0.0, v.d * std::conj(c1)});
      if (v.b != 0.0)
        wd.add_to({k[0] - ks[0], k[1] - ks[1], k[2] - ks[2]}, Mat2{0.0, v.b * c1, 0.0, 0.0});
      if (v.c != 0.0)
        wd.add_to({k[0] + ks[0], k[1] + ks[1], k[2] + ks[2]},
                  Mat2{0.0, 0.0, v.c * std::conj(c1), 0.0});
    }
    MatPoly w = conj_coeffs(wd, kCayleyInv, kCayley);
    w.realify();

    // bar B = e^Y * C_Q * R_{<m,theta>/2} with m = -s n_*; C_Q is the
    // SL(2,R) image of the diagonalizer
    Mat2 cq_raw = kCayleyInv * fr.q * kCayley;
    if (cq_raw.max_imag() > 1e-10 * (1.0 + cq_raw.norm()))
      throw NoConvergence("diagonalizer failed to descend to SL(2,R)");
    Mat2 cq = project_sl2(cq_raw);
    std::vector<std::int64_t> m(found);
    for (auto& v : m) v *= -fr.s;
    std::vector<int> mi(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) mi[i] = static_cast<int>(m[i]);
    MatPoly bp = mul(poly_exp(parts.y_sl2, cfg.drop_tol), const_poly(d, cq), cfg.drop_tol);
    MatPoly bar = mul(bp, half_rotation(d, mi), cfg.drop_tol);
    rep.bar_prime_norm = bp.norm_h(h_next);
    rep.factor_prime = std::move(bp);
    rep.resonance = m;
    for (int i = 0; i < d; ++i) next.deg[i] += m[i];
    next.resonance_log.emplace_back(st.step, m);
    finish(std::move(w), std::move(bar));
  }

  out.state = std::move(next);
  return out;
}

ReductionResult reduce_to_constant(const Cocycle& c, double target_h, double rot_kappa,
                                   double rot_tau, const KamConfig& cfg) {
  if (!(cfg.h > 0.0) || !(target_h > 0.0) || !(target_h < cfg.h))
    throw InconsistentInput("need 0 < target_h < cfg.h");
  const int d = c.dim();
  ReductionResult out;

  out.rho = rotation_number_weighted(c, cfg.rho_iterates);
  if (!dc_alpha_check(out.rho, c.freq.alpha, rot_kappa, rot_tau, cfg.rot_dc_bound))
    throw DcViolatedMidRun("fibered rotation number " + fmt_g17(out.rho) + " fails DC_alpha(" +
                           fmt_g17(rot_kappa) + ", " + fmt_g17(rot_tau) + ")");

  KamConfig run = cfg;
  run.kappa_rot = rot_kappa;
  run.tau_rot = rot_tau;

  KamState st = kam_initial_state(c, cfg.h, run);
  out.trace.push_back(st);
  const double gap_total = (cfg.h - target_h) / 2.0;

  while (st.eps >= run.target_eps) {
    if (st.step >= run.max_steps)
      throw StepCapReached("eps = " + fmt_g17(st.eps) + " after " + std::to_string(st.step) +
                           " steps");
    double h_next = st.h - gap_total / std::pow(4.0, st.step + 1);
    auto res = kam_step(st, h_next, run);
    out.reports.push_back(std::move(res.report));
    st = std::move(res.state);
    out.trace.push_back(st);
    const auto& rep = out.reports.back();
    out.certs.gate_all = out.certs.gate_all && rep.gate_ok;
    if (rep.tag == KamCase::NonResonant && rep.eps > 0.0) {
      out.certs.worst_quadratic_slack =
          std::max(out.certs.worst_quadratic_slack, rep.slack_quadratic);
      if (rep.slack_quadratic > 10.0) out.certs.contraction_quadratic = false;
    }
  }

  out.a_final = st.A;
  out.residual_eps = st.eps;
  out.psl_sign = st.psl_sign;

  // split the factor chain at the last resonance
  int last_res = -1;
  for (int i = 0; i < static_cast<int>(out.reports.size()); ++i)
    if (out.reports[i].tag == KamCase::Resonant) last_res = i;
  ConjugacyDecomposition& dec = out.dec;
  dec.h_tilde = target_h;
  dec.ell.assign(d, 0);
  dec.deg_b_tilde.assign(d, 0);
  MatPoly bt = const_poly(d, Mat2::ident());
  MatPoly tail = const_poly(d, Mat2::ident());
  for (int i = 0; i < static_cast<int>(out.reports.size()); ++i) {
    const auto& r = out.reports[i];
    if (i < last_res) {
      bt = mul(bt, r.factor, cfg.drop_tol);
      if (r.tag == KamCase::Resonant)
        for (int j = 0; j < d; ++j) dec.deg_b_tilde[j] += r.resonance[j];
    } else if (i == last_res) {
      bt = mul(bt, r.factor_prime, cfg.drop_tol);
      dec.ell = r.resonance;
    } else {
      tail = mul(tail, r.factor, cfg.drop_tol);
    }
  }
  dec.b_tilde = std::move(bt);
  dec.y = poly_log_near_id(tail, cfg.drop_tol);
  dec.y.realify();
  dec.nu = st.A.su11.nu;
  dec.norm_b_tilde = dec.b_tilde.norm_h(target_h);
  dec.norm_y = dec.y.norm_h(target_h);

  // estimate shapes; violations are recorded, never patched over
  std::int64_t ell1 = l1(dec.ell);
  double shape = std::exp(-2.0 * M_PI * static_cast<double>(ell1) * target_h);
  out.certs.es1_y = dec.norm_y <= shape;
  out.certs.es1_nu = std::abs(dec.nu) <= 2.0 * shape;
  double lnk = std::fabs(std::log(rot_kappa));
  out.certs.es2 = dec.norm_b_tilde <
                  std::pow(lnk, rot_tau) * std::pow(rot_kappa, -2.0 * (cfg.h - target_h) / target_h);
  out.certs.es3 = static_cast<double>(ell1) <= std::pow(lnk, 4.0) / (cfg.h - target_h);
  std::vector<std::int64_t> tot(dec.ell);
  for (int j = 0; j < d; ++j) tot[j] += dec.deg_b_tilde[j];
  out.certs.gap_value = torus_dist(2.0 * out.rho - dot_alpha(tot, c.freq.alpha));
  out.certs.gap_bound =
      rot_kappa / std::pow(2.0, rot_tau) /
      std::pow(static_cast<double>(std::max<std::int64_t>(ell1, 1)), rot_tau);
  out.certs.eigen_gap = out.certs.gap_value >= out.certs.gap_bound;
  if (ell1 == 0) out.certs.notes += "gap bound uses |ell| = 1 floor (no resonance); ";
  if (!out.certs.gate_all) out.certs.notes += "smallness gate overridden on some steps; ";
  for (const auto& r : out.reports)
    if (r.scan_truncated) {
      out.certs.notes += "resonance scan/DC certification hit its budget; ";
      break;
    }

  // first-principles residuals on a phase grid
  const KamState& s0 = out.trace.front();
  double r1 = 0.0, r2 = 0.0;
  std::vector<double> shiftv(c.freq.alpha);
  for_grid(d, d == 1 ? 64 : 8, [&](const std::vector<double>& th) {
    std::vector<double> tha(th);
    for (int j = 0; j < d; ++j) tha[j] += shiftv[j];
    Mat2 lhs = st.B.eval(tha).inverse() * (s0.A.A * mexp(s0.f.eval(th))) * st.B.eval(th);
    Mat2 rhs = (st.A.A * mexp(st.f.eval(th))) * static_cast<double>(st.psl_sign);
    r1 = std::max(r1, (lhs - rhs).norm());
    Mat2 recon = dec.b_tilde.eval(th) * rot2(0.5 * dot_alpha(dec.ell, th)) *
                 mexp(dec.y.eval(th));
    r2 = std::max(r2, (recon - st.B.eval(th)).norm());
  });
  out.certs.conj_residual = r1;
  out.certs.reconstruct_residual = r2;
  return out;
}

double rotation_tune(const std::function<Cocycle(double)>& builder, double target_rho,
                     double e_lo, double e_hi, long long iterates) {
  if (!(e_lo < e_hi)) throw NotBracketed("empty energy bracket");
  double rl = rotation_number_weighted(builder(e_lo), iterates);
  double rh = rotation_number_weighted(builder(e_hi), iterates);
  const double slack = 1e-9;
  if (!(rl >= target_rho - slack && rh <= target_rho + slack))
    throw NotBracketed("rho(" + fmt_g17(e_lo) + ") = " + fmt_g17(rl) + ", rho(" + fmt_g17(e_hi) +
                       ") = " + fmt_g17(rh) + " do not straddle " + fmt_g17(target_rho));
  double lo = e_lo, hi = e_hi;
  double rm = rl;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    rm = rotation_number_weighted(builder(mid), iterates);
    if (rm > rl + 1e-6 || rm < rh - 1e-6)
      throw NoConvergence("rotation number not monotone across the bracket");
    if (std::fabs(rm - target_rho) < 1e-8) return mid;
    if (rm > target_rho) {
      lo = mid;
      rl = rm;
    } else {
      hi = mid;
      rh = rm;
    }
    if (hi - lo < 1e-15 * std::max(1.0, std::fabs(lo) + std::fabs(hi))) break;
  }
  throw NoConvergence("bisection stalled at |rho - target| = " +
                      fmt_g17(std::fabs(rm - target_rho)));
}

bool resonance_spacing_check(
    const std::vector<std::pair<int, std::vector<std::int64_t>>>& log,
    const std::vector<double>& eps_schedule, double tau, std::string* diagnostic) {
  bool ok = true;
  for (std::size_t i = 0; i + 1 < log.size(); ++i) {
    int step = log[i].first;
    if (step < 0 || step >= static_cast<int>(eps_schedule.size()))
      throw InconsistentInput("resonance step outside the eps schedule");
    double eps_i = eps_schedule[step];
    if (!(eps_i > 0.0) || eps_i >= 1.0)
      throw InconsistentInput("eps schedule entries must lie in (0, 1)");
    double lhs = static_cast<double>(l1(log[i + 1].second));
    double rhs = std::pow(eps_i, -1.0 / (18.0 * tau)) * static_cast<double>(l1(log[i].second));
    if (lhs < rhs) {
      ok = false;
      if (diagnostic)
        *diagnostic += "resonance " + std::to_string(i + 1) + " has |n| = " + fmt_g17(lhs) +
                       " < " + fmt_g17(rhs) + "; ";
    }
  }
  return ok;
}

}  // namespace qpl
