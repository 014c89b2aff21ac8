#include "qpl/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "qpl/errors.hpp"
#include "qpl/util.hpp"

namespace qpl {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<double> wrapped(std::vector<double> x) {
  for (auto& v : x) v -= std::floor(v);
  return x;
}

void advance(std::vector<double>& x, const std::vector<double>& alpha) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] += alpha[i];
    if (x[i] >= 1.0) x[i] -= 1.0;
  }
}

void retreat(std::vector<double>& x, const std::vector<double>& alpha) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] -= alpha[i];
    if (x[i] < 0.0) x[i] += 1.0;
  }
}

// deterministic low-discrepancy phase sample: shifted lattice per component
std::vector<std::vector<double>> phase_grid(int dim, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> offset(dim);
  for (auto& v : offset) v = u(rng);
  std::vector<std::vector<double>> out(count, std::vector<double>(dim));
  const double silver = 0.6180339887498949;
  for (int p = 0; p < count; ++p)
    for (int j = 0; j < dim; ++j) {
      double v = offset[j] + p * silver + 0.37 * j;
      out[p][j] = v - std::floor(v);
    }
  return out;
}

double vec_angle(double vx, double vy) { return std::atan2(vy, vx); }

// angle step unwrapped to (-pi, pi]
double unwrap(double delta) {
  while (delta > std::numbers::pi) delta -= kTwoPi;
  while (delta <= -std::numbers::pi) delta += kTwoPi;
  return delta;
}

}  // namespace

Mat2 Cocycle::eval(const std::vector<double>& x) const {
  switch (form) {
    case Form::Constant:
      return constant;
    case Form::Poly:
      return poly.eval(x);
    case Form::Schrodinger:
      return schrodinger_step(energy, potential.eval(x).real());
  }
  return Mat2::ident();
}

Mat2 Cocycle::eval_c(const std::vector<cplx>& x) const {
  switch (form) {
    case Form::Constant:
      return constant;
    case Form::Poly:
      return poly.eval_c(x);
    case Form::Schrodinger: {
      cplx v = potential.eval_c(x);
      return {cplx(energy) - v, cplx(-1.0), cplx(1.0), cplx(0.0)};
    }
  }
  return Mat2::ident();
}

void Cocycle::validate() const {
  const int g = 7;  // 7^d grid points
  std::vector<int> idx(dim(), 0);
  for (;;) {
    std::vector<double> x(dim());
    for (int j = 0; j < dim(); ++j) x[j] = (idx[j] + 0.383) / g;
    Mat2 a = eval(x);
    if (std::abs(a.det() - 1.0) > 1e-10)
      throw InconsistentInput("cocycle map determinant off by " + fmt_g17(std::abs(a.det() - 1.0)));
    int j = 0;
    for (; j < dim(); ++j) {
      if (++idx[j] < g) break;
      idx[j] = 0;
    }
    if (j == dim()) break;
  }
}

Cocycle Cocycle::from_constant(FrequencyVector f, const Mat2& a) {
  Cocycle c;
  c.freq = std::move(f);
  c.form = Form::Constant;
  c.constant = a;
  return c;
}

Cocycle Cocycle::from_poly(FrequencyVector f, MatPoly b) {
  Cocycle c;
  c.freq = std::move(f);
  c.form = Form::Poly;
  c.poly = std::move(b);
  return c;
}

Cocycle Cocycle::schrodinger(FrequencyVector f, double e, ScalarPoly v) {
  Cocycle c;
  c.freq = std::move(f);
  c.form = Form::Schrodinger;
  c.energy = e;
  c.potential = std::move(v);
  return c;
}

Mat2 transfer(const Cocycle& c, std::vector<double> x, long long n) {
  x = wrapped(std::move(x));
  Mat2 acc = Mat2::ident();
  if (n >= 0) {
    for (long long k = 0; k < n; ++k) {
      acc = c.eval(x) * acc;
      advance(x, c.freq.alpha);
    }
  } else {
    for (long long k = 0; k < -n; ++k) {
      retreat(x, c.freq.alpha);
      acc = acc * c.eval(x);
    }
    acc = acc.inverse();
  }
  return acc;
}

LyapunovEstimate lyapunov(const Cocycle& c, long long iterates, int phase_samples,
                          std::uint64_t seed) {
  if (iterates < 1000) throw InconsistentInput("lyapunov needs at least 1e3 iterates");
  if (phase_samples < 1) throw InconsistentInput("lyapunov needs at least one phase");
  auto phases = phase_grid(c.dim(), phase_samples, seed);
  const long long burn = std::min<long long>(200, iterates / 10);

  std::vector<double> per_phase(phase_samples, 0.0);
  parallel_for(phase_samples, [&](int p) {
    auto x = phases[p];
    double vx = std::cos(0.7 + p), vy = std::sin(0.7 + p);
    KahanSum logs;
    for (long long k = 0; k < burn + iterates; ++k) {
      Mat2 a = c.eval(x);
      double wx = a.a.real() * vx + a.b.real() * vy;
      double wy = a.c.real() * vx + a.d.real() * vy;
      double nn = std::hypot(wx, wy);
      if (!(nn > 0.0) || !std::isfinite(nn))
        throw OverflowGuard("vector renormalization broke down at step " + std::to_string(k));
      vx = wx / nn;
      vy = wy / nn;
      if (k >= burn) logs.add(std::log(nn));
      advance(x, c.freq.alpha);
    }
    per_phase[p] = logs.value() / static_cast<double>(iterates);
  });

  double mean = pairwise_sum(per_phase) / phase_samples;
  // bootstrap standard error over the phase estimates
  double se = 0.0;
  if (phase_samples > 1) {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<int> pick(0, phase_samples - 1);
    const int B = 200;
    double s = 0.0, s2 = 0.0;
    for (int b = 0; b < B; ++b) {
      double m = 0.0;
      for (int p = 0; p < phase_samples; ++p) m += per_phase[pick(rng)];
      m /= phase_samples;
      s += m;
      s2 += m * m;
    }
    se = std::sqrt(std::max(0.0, s2 / B - (s / B) * (s / B)));
  }

  LyapunovEstimate out;
  out.value = std::max(0.0, mean);
  out.stderr_ = se;
  out.iterates = iterates;
  out.phases = phase_samples;
  return out;
}

namespace {

// shared angle-lift walk; weight(k, n) supplies the Birkhoff window
template <class W>
double rotation_walk(const Cocycle& c, long long n, W weight) {
  if (n < 1000) throw InconsistentInput("rotation number needs at least 1e3 iterates");
  if (c.form == Cocycle::Form::Poly) {
    auto deg = degree_probe(c.poly, 512);
    for (int v : deg)
      if (v != 0)
        throw NotHomotopicToIdentity("map winds around the fiber; degree component " +
                                     std::to_string(v));
  }
  std::vector<double> x(c.dim(), 0.1234);
  double vx = 1.0, vy = 0.0;
  double ang = 0.0;
  // Branch selection for the continuous lift.  For the Schrodinger form
  // [[a,-1],[1,0]] the canonical branch provably stays in (-pi/2, 3pi/2):
  // a quarter turn at every direction orthogonal to its image pins the
  // branch, and increments can approach but never reach the window edges.
  // For other maps the increments of the cocycles we iterate cluster, so a
  // window centered on the previous increment tracks the branch.
  const bool schro = c.form == Cocycle::Form::Schrodinger;
  double center = 0.0;
  bool have_center = false;
  KahanSum acc, wsum;
  for (long long k = 0; k < n; ++k) {
    Mat2 a = c.eval(x);
    double wx = a.a.real() * vx + a.b.real() * vy;
    double wy = a.c.real() * vx + a.d.real() * vy;
    double nn = std::hypot(wx, wy);
    if (!(nn > 0.0) || !std::isfinite(nn)) throw OverflowGuard("projective action degenerated");
    vx = wx / nn;
    vy = wy / nn;
    double na = vec_angle(vx, vy);
    double raw = unwrap(na - ang);
    double delta;
    if (schro) {
      delta = raw < -0.5 * std::numbers::pi ? raw + kTwoPi : raw;
    } else if (!have_center) {
      delta = raw;
      have_center = true;
    } else {
      delta = center + unwrap(raw - center);
    }
    center = delta;
    double w = weight(k, n);
    acc.add(w * delta);
    wsum.add(w);
    ang = na;
    advance(x, c.freq.alpha);
  }
  double rho = acc.value() / (wsum.value() * kTwoPi);
  rho -= std::floor(rho);
  return rho;
}

}  // namespace

double rotation_number(const Cocycle& c, long long iterates) {
  return rotation_walk(c, iterates, [](long long, long long) { return 1.0; });
}

double rotation_number_weighted(const Cocycle& c, long long iterates) {
  return rotation_walk(c, iterates, [](long long k, long long n) {
    double t = (k + 1.0) / (n + 1.0);
    return std::exp(-1.0 / (t * (1.0 - t)));
  });
}

std::vector<int> degree_probe(const MatPoly& b, int grid) {
  if (grid < 8) throw GridTooCoarse("degree probe needs at least 8 grid points");
  int d = b.dim;
  std::vector<int> deg(d, 0);
  for (int axis = 0; axis < d; ++axis) {
    // base point chosen off obvious symmetry axes
    std::vector<double> base(d);
    for (int j = 0; j < d; ++j) base[j] = 0.137 * (j + 1);
    for (int column = 0; column < 2; ++column) {
      bool degenerate = false;
      double total = 0.0, prev = 0.0;
      for (int k = 0; k <= grid; ++k) {
        auto x = base;
        x[axis] = base[axis] + static_cast<double>(k) / grid;
        Mat2 m = b.eval(x);
        double cx = column == 0 ? m.a.real() : m.b.real();
        double cy = column == 0 ? m.c.real() : m.d.real();
        double nn = std::hypot(cx, cy);
        if (nn < 1e-9 * (1.0 + m.norm())) {
          degenerate = true;  // this column vanishes here; try the other one
          break;
        }
        double ang = vec_angle(cx, cy);
        if (k > 0) {
          double step = unwrap(ang - prev);
          if (std::abs(step) > std::numbers::pi / 2.0)
            throw GridTooCoarse("angle step " + fmt_g17(std::abs(step)) + " at axis " +
                                std::to_string(axis));
          total += step;
        }
        prev = ang;
      }
      if (!degenerate) {
        deg[axis] = static_cast<int>(std::lround(total / std::numbers::pi));
        break;
      }
      if (column == 1)
        throw GridTooCoarse("both columns vanish on the evaluation grid; matrix nearly singular");
    }
  }
  return deg;
}

namespace {

// most-contracted input direction of a (right singular vector for the
// smaller singular value), via the eigenvector of a^T a
void contracted_direction(const Mat2& a, double& sx, double& sy) {
  double m11 = a.a.real() * a.a.real() + a.c.real() * a.c.real();
  double m12 = a.a.real() * a.b.real() + a.c.real() * a.d.real();
  double m22 = a.b.real() * a.b.real() + a.d.real() * a.d.real();
  double tr = m11 + m22;
  double disc = std::sqrt(std::max(0.0, (m11 - m22) * (m11 - m22) + 4.0 * m12 * m12));
  double lo = 0.5 * (tr - disc);  // smaller eigenvalue of a^T a
  // (M - lo) v = 0
  double ex = -m12, ey = m11 - lo;
  if (std::hypot(ex, ey) < 1e-14 * tr) {
    ex = m22 - lo;
    ey = -m12;
  }
  double nn = std::hypot(ex, ey);
  if (nn == 0.0) {
    sx = 1.0;
    sy = 0.0;
    return;
  }
  sx = ex / nn;
  sy = ey / nn;
}

}  // namespace

bool uh_probe(const Cocycle& c, long long iterates, int phase_samples) {
  iterates = std::max<long long>(iterates, 64);
  phase_samples = std::max(phase_samples, 8);
  auto phases = phase_grid(c.dim(), phase_samples, 7);

  const int checkpoints = 16;
  std::vector<long long> ks(checkpoints);
  for (int j = 0; j < checkpoints; ++j) ks[j] = std::max<long long>(1, iterates * (j + 1) / checkpoints);

  // min over phases of log ||A_k(x)|| at each checkpoint
  std::vector<double> mlog(checkpoints, 1e300);
  std::vector<std::vector<double>> all_logs(phase_samples, std::vector<double>(checkpoints));
  parallel_for(phase_samples, [&](int p) {
    auto x = phases[p];
    Mat2 acc = Mat2::ident();
    double lognorm = 0.0;  // running log of the factored-out scale
    int next = 0;
    for (long long k = 1; k <= iterates && next < checkpoints; ++k) {
      acc = c.eval(x) * acc;
      double nn = acc.fro();
      if (nn > 1e60) {
        double s = 1.0 / nn;
        acc.a *= s;
        acc.b *= s;
        acc.c *= s;
        acc.d *= s;
        lognorm += std::log(nn);
      }
      advance(x, c.freq.alpha);
      if (k == ks[next]) {
        all_logs[p][next] = lognorm + std::log(acc.norm());
        ++next;
      }
    }
  });
  for (int j = 0; j < checkpoints; ++j)
    for (int p = 0; p < phase_samples; ++p) mlog[j] = std::min(mlog[j], all_logs[p][j]);

  // least-squares slope of the min-curve
  double sk = 0.0, sl = 0.0, skk = 0.0, skl = 0.0;
  for (int j = 0; j < checkpoints; ++j) {
    sk += ks[j];
    sl += mlog[j];
    skk += static_cast<double>(ks[j]) * ks[j];
    skl += ks[j] * mlog[j];
  }
  double slope = (checkpoints * skl - sk * sl) / (checkpoints * skk - sk * sk);
  if (!(slope > 0.02)) return false;
  // uniformity: the min-curve must never fall far below the fitted growth
  for (int j = 0; j < checkpoints; ++j)
    if (mlog[j] < 0.5 * slope * ks[j] - 3.0) return false;

  // the Schrodinger family carries a sharper signal: away from the spectrum
  // the fibered rotation number locks (locally constant in energy), while
  // inside it keeps moving with E even when the exponent is positive
  if (c.form == Cocycle::Form::Schrodinger) {
    const double de = 1e-3;
    auto lo = c, hi = c;
    lo.energy -= de;
    hi.energy += de;
    long long nrot = std::max<long long>(4 * iterates, 100000);
    if (std::abs(rotation_number(hi, nrot) - rotation_number(lo, nrot)) > 4e-5) return false;
  }

  // transversality of finite-time stable/unstable directions: s(x) is the
  // most contracted direction of A_n(x), u(x) the most contracted direction
  // of A_{-n}(x) (i.e. the forward-expanded one); they must stay apart
  long long n = std::min<long long>(iterates, 80);
  double min_angle = 1e300;
  std::vector<double> angles(phase_samples);
  parallel_for(phase_samples, [&](int p) {
    Mat2 fwd = transfer(c, phases[p], n);
    Mat2 bwd = transfer(c, phases[p], -n);
    double sx, sy, ux, uy;
    contracted_direction(fwd, sx, sy);
    contracted_direction(bwd, ux, uy);
    double cross = std::abs(sx * uy - sy * ux);
    angles[p] = std::asin(std::min(1.0, cross));
  });
  for (int p = 0; p < phase_samples; ++p) min_angle = std::min(min_angle, angles[p]);
  return min_angle > 0.05;
}

std::vector<std::pair<double, double>> acceleration_probe(const Cocycle& c,
                                                          const std::vector<double>& epsilons,
                                                          long long iterates) {
  std::vector<std::pair<double, double>> out;
  const int phases = 8;
  auto grid = phase_grid(c.dim(), phases, 11);
  const long long burn = std::min<long long>(200, iterates / 10);
  for (double eps : epsilons) {
    std::vector<double> per_phase(phases, 0.0);
    parallel_for(phases, [&](int p) {
      auto x = grid[p];
      cplx vx(std::cos(0.7 + p), 0.0), vy(std::sin(0.7 + p), 0.0);
      KahanSum logs;
      for (long long k = 0; k < burn + iterates; ++k) {
        std::vector<cplx> z(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) z[j] = cplx(x[j], eps);
        Mat2 a = c.eval_c(z);
        cplx wx = a.a * vx + a.b * vy;
        cplx wy = a.c * vx + a.d * vy;
        double nn = std::sqrt(std::norm(wx) + std::norm(wy));
        if (!(nn > 0.0) || !std::isfinite(nn))
          throw OverflowGuard("complexified iteration degenerated");
        vx = wx / nn;
        vy = wy / nn;
        if (k >= burn) logs.add(std::log(nn));
        advance(x, c.freq.alpha);
      }
      per_phase[p] = logs.value() / static_cast<double>(iterates);
    });
    out.emplace_back(eps, std::max(0.0, pairwise_sum(per_phase) / phases));
  }
  return out;
}

}  // namespace qpl
