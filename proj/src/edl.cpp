#include "qpl/edl.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "qpl/errors.hpp"
#include "qpl/util.hpp"

namespace qpl {

namespace {

void require_complete(const TruncatedOperator& h, const EigenDecomposition& dec) {
  std::size_t s = static_cast<std::size_t>(h.size());
  if (dec.values.size() != s || dec.vectors.size() != s)
    throw IncompleteDecomposition("need all " + std::to_string(s) + " eigenpairs, have " +
                                  std::to_string(dec.values.size()));
  for (const auto& u : dec.vectors)
    if (u.size() != s) throw IncompleteDecomposition("eigenvector length mismatch");
}

}  // namespace

DynamicalKernel dynamical_kernel(const TruncatedOperator& h, const EigenDecomposition& dec) {
  require_complete(h, dec);
  int s = h.size();
  DynamicalKernel k;
  k.box = h.box;
  k.meta = h.meta;
  k.T.assign(static_cast<std::size_t>(s) * s, 0.0);
  std::vector<double> a(s);
  for (int m = 0; m < s; ++m) {
    for (int i = 0; i < s; ++i) a[i] = std::fabs(dec.vectors[m][i]);
    for (int i = 0; i < s; ++i) {
      double ai = a[i];
      if (ai == 0.0) continue;
      double* row = &k.T[static_cast<std::size_t>(i) * s];
      for (int j = 0; j < s; ++j) row[j] += ai * a[j];
    }
  }
  return k;
}

std::complex<double> evolve_overlap(const EigenDecomposition& dec, int i, int j, double t) {
  KahanSum re, im;
  for (std::size_t m = 0; m < dec.values.size(); ++m) {
    double w = dec.vectors[m][i] * dec.vectors[m][j];
    double ph = -t * dec.values[m];
    re.add(w * std::cos(ph));
    im.add(w * std::sin(ph));
  }
  return {re.value(), im.value()};
}

std::vector<double> overlap_envelope(const EigenDecomposition& dec, int j0,
                                     const std::vector<double>& ts) {
  std::size_t s = dec.values.size();
  std::vector<double> env(s, 0.0);
  parallel_for(s, [&](std::size_t i) {
    double best = 0.0;
    for (double t : ts) best = std::max(best, std::abs(evolve_overlap(dec, static_cast<int>(i), j0, t)));
    env[i] = best;
  });
  return env;
}

void refine_tridiagonal_tails(const TruncatedOperator& h, EigenDecomposition& dec,
                              double threshold) {
  if (!h.tridiagonal)
    throw InconsistentInput("tail refinement needs a tridiagonal operator");
  require_complete(h, dec);
  int s = h.size();
  if (s < 3) return;
  std::vector<double> d(s), off(s - 1);
  for (int i = 0; i < s; ++i) d[i] = h.at(i, i);
  for (int i = 0; i + 1 < s; ++i) {
    off[i] = h.at(i, i + 1);
    if (off[i] == 0.0) return;  // decoupled blocks: tails cannot propagate
  }

  // Integrating the recurrence toward the matching site, the wanted branch
  // grows while the contaminating one shrinks relatively, so |w| can reach
  // e^{gamma * halfwidth}; rescale the partial solution when it gets large.
  auto rescale = [](std::vector<double>& w, int from, int to) {
    for (int i = from; i <= to; ++i) w[i] *= 1e-260;
  };

  std::vector<double> w(s);
  for (std::size_t m = 0; m < dec.vectors.size(); ++m) {
    double e = dec.values[m];
    std::vector<double>& u = dec.vectors[m];

    int mr = -1;
    for (int i = s - 1; i >= 0; --i)
      if (std::fabs(u[i]) >= threshold) {
        mr = i;
        break;
      }
    if (mr >= 0 && mr < s - 1) {
      w[s - 1] = 1.0;
      w[s - 2] = (e - d[s - 1]) / off[s - 2];
      for (int i = s - 2; i > mr; --i) {
        w[i - 1] = ((e - d[i]) * w[i] - off[i] * w[i + 1]) / off[i - 1];
        if (std::fabs(w[i - 1]) > 1e260) rescale(w, i - 1, s - 1);
      }
      double scale = (w[mr] != 0.0 && std::isfinite(w[mr])) ? u[mr] / w[mr] : 0.0;
      if (scale != 0.0)
        for (int i = mr + 1; i < s; ++i) u[i] = scale * w[i];
    }

    int ml = -1;
    for (int i = 0; i < s; ++i)
      if (std::fabs(u[i]) >= threshold) {
        ml = i;
        break;
      }
    if (ml > 0) {
      w[0] = 1.0;
      w[1] = (e - d[0]) / off[0];
      for (int i = 1; i < ml; ++i) {
        w[i + 1] = ((e - d[i]) * w[i] - off[i - 1] * w[i - 1]) / off[i];
        if (std::fabs(w[i + 1]) > 1e260) rescale(w, 0, i + 1);
      }
      double scale = (w[ml] != 0.0 && std::isfinite(w[ml])) ? u[ml] / w[ml] : 0.0;
      if (scale != 0.0)
        for (int i = 0; i < ml; ++i) u[i] = scale * w[i];
    }
  }
}

namespace {

struct SlopeFit {
  double slope = 0.0, intercept = 0.0;
  int used = 0;
};

SlopeFit fit_log_window(const BoxSpec& box, const std::vector<double>& k, int lo, int hi) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (int i = 0; i < box.size(); ++i) {
    int l1 = box.dist_linf(i);
    if (l1 < lo || l1 > hi) continue;
    if (!(k[i] > 0.0) || !std::isfinite(k[i])) continue;
    double x = l1, y = -std::log(k[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  SlopeFit f;
  f.used = n;
  if (n < 4) return f;
  double den = n * sxx - sx * sx;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

}  // namespace

EdlProfile edl_profile(const std::function<TruncatedOperator(double)>& make_op, int theta_grid,
                       int win_lo, int win_hi, std::uint64_t seed) {
  if (theta_grid < 10)
    throw TooFewSamples("phase grid of " + std::to_string(theta_grid) + " is below 10");
  TruncatedOperator probe = make_op(0.0);
  BoxSpec box = probe.box;
  if (win_lo < 1 || win_hi <= win_lo || win_hi > box.halfwidth - 1)
    throw InconsistentInput("fit window [" + std::to_string(win_lo) + "," +
                            std::to_string(win_hi) + "] does not fit inside the box");

  EdlProfile prof;
  prof.box = box;
  prof.win_lo = win_lo;
  prof.win_hi = win_hi;
  prof.theta_grid = theta_grid;
  std::mt19937_64 rng(seed);
  prof.theta_offset =
      std::uniform_real_distribution<double>(0.0, 1.0)(rng) / static_cast<double>(theta_grid);

  int s = box.size();
  int origin = box.index_of(std::vector<int>(box.dim, 0));
  std::vector<std::vector<double>> cols(theta_grid);
  parallel_for(static_cast<std::size_t>(theta_grid), [&](std::size_t j) {
    double theta = prof.theta_offset + static_cast<double>(j) / theta_grid;
    theta -= std::floor(theta);
    TruncatedOperator h = make_op(theta);
    EigenDecomposition dec = eigen_all(h);
    if (h.tridiagonal) refine_tridiagonal_tails(h, dec);
    std::vector<double> col(s, 0.0);
    for (int m = 0; m < s; ++m) {
      double a0 = std::fabs(dec.vectors[m][origin]);
      if (a0 == 0.0) continue;
      for (int i = 0; i < s; ++i) col[i] += a0 * std::fabs(dec.vectors[m][i]);
    }
    cols[j] = std::move(col);
  });

  prof.K.assign(s, 0.0);
  std::vector<double> gather(theta_grid);
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < theta_grid; ++j) gather[j] = cols[j][i];
    prof.K[i] = pairwise_sum(gather) / theta_grid;
  }

  SlopeFit fit = fit_log_window(box, prof.K, win_lo, win_hi);
  if (fit.used < 4)
    throw TooFewSamples("only " + std::to_string(fit.used) + " usable sites in the fit window");
  prof.gamma_hat = fit.slope;
  prof.intercept = fit.intercept;

  // CI from resampling the theta members with replacement; everything below
  // is sequential and seeded, so reruns reproduce the band bit for bit.
  const int kResamples = 200;
  std::vector<double> slopes(kResamples);
  std::vector<double> mean(s);
  for (int b = 0; b < kResamples; ++b) {
    std::fill(mean.begin(), mean.end(), 0.0);
    for (int j = 0; j < theta_grid; ++j) {
      const std::vector<double>& c = cols[rng() % theta_grid];
      for (int i = 0; i < s; ++i) mean[i] += c[i];
    }
    for (int i = 0; i < s; ++i) mean[i] /= theta_grid;
    slopes[b] = fit_log_window(box, mean, win_lo, win_hi).slope;
  }
  std::sort(slopes.begin(), slopes.end());
  prof.ci_lo = slopes[static_cast<int>(0.025 * kResamples)];
  prof.ci_hi = slopes[static_cast<int>(0.975 * kResamples)];
  return prof;
}

namespace {

// sum over k in Z of e^{-g(|p-k| + |q-k|)}, truncated where the geometric
// tail is below 1e-12 of the leading e^{-g|p-q|} term.
double band_sum_1d(int p, int q, double gamma) {
  if (p > q) std::swap(p, q);
  int m = static_cast<int>(std::ceil(22.0 / gamma)) + 2;
  KahanSum acc;
  for (int k = p - m; k <= q + m; ++k)
    acc.add(std::exp(-gamma * (std::abs(p - k) + std::abs(q - k))));
  return acc.value();
}

}  // namespace

CriterionSums criterion_sums(const std::vector<int>& p, const std::vector<int>& q,
                             const std::vector<int>& ell, double gamma) {
  std::size_t d = p.size();
  if (q.size() != d || ell.size() != d)
    throw InconsistentInput("site and shift dimensions disagree");
  if (d == 0) throw InconsistentInput("empty sites");
  if (!(gamma >= 1e-6))
    throw InconsistentInput("rate " + fmt_g17(gamma) + " too small to sum at the tail target");

  CriterionSums out;
  out.s_direct = 1.0;
  out.s_shifted = 1.0;
  double mix_a = 1.0, mix_b = 1.0;
  long long l1pq = 0, l1l = 0;
  for (std::size_t i = 0; i < d; ++i) {
    out.s_direct *= band_sum_1d(p[i], q[i], gamma);
    out.s_shifted *= band_sum_1d(p[i] + ell[i], q[i] + ell[i], gamma);
    mix_a *= band_sum_1d(p[i], q[i] + ell[i], gamma);
    mix_b *= band_sum_1d(p[i] + ell[i], q[i], gamma);
    l1pq += std::abs(p[i] - q[i]);
    l1l += std::abs(ell[i]);
  }
  out.s_mixed = mix_a + mix_b;
  double cg = 1.0 / (1.0 - std::exp(-gamma));
  out.bound_direct = std::pow(2.0 * cg + static_cast<double>(d) + static_cast<double>(l1pq),
                              static_cast<double>(d)) *
                     std::exp(-gamma * static_cast<double>(l1pq));
  out.bound_mixed = 2.0 * std::exp(gamma * static_cast<double>(l1l)) * out.bound_direct;
  return out;
}

BudgetVerdict criterion_budget(const std::vector<BudgetTerm>& stages) {
  BudgetVerdict v;
  v.terms.reserve(stages.size());
  v.partial_sums.reserve(stages.size());
  KahanSum acc;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const BudgetTerm& t = stages[i];
    if (!(t.c >= 0.0) || !(t.sup >= 0.0) || !(t.tail >= 0.0))
      throw InconsistentInput("budget entries must be nonnegative");
    if (i > 0 && t.tail > stages[i - 1].tail * (1.0 + 1e-12))
      throw InconsistentInput("tail measures must be nonincreasing");
    double term = t.c * t.c * (1.0 + t.sup) * t.tail;
    v.terms.push_back(term);
    acc.add(term);
    v.partial_sums.push_back(acc.value());
  }
  v.total = acc.value();

  std::size_t n = v.terms.size();
  bool sawratio = false;
  std::size_t start = std::max<std::size_t>(1, n / 2);
  for (std::size_t i = start; i + 1 < n; ++i) {
    if (v.terms[i] > 0.0) {
      v.ratio_high = std::max(v.ratio_high, v.terms[i + 1] / v.terms[i]);
      sawratio = true;
    } else if (v.terms[i + 1] > 0.0) {
      v.ratio_high = std::numeric_limits<double>::infinity();
      sawratio = true;
    }
  }
  v.convergent = !sawratio || v.ratio_high <= 0.95;
  return v;
}

}  // namespace qpl
