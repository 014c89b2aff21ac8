#include "qpl/arithmetics.hpp"

#include <cmath>
#include <limits>

namespace qpl {

ContinuedFraction cf_expand(double alpha, int depth, double cutoff) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw NotInUnitInterval("cf_expand needs alpha in (0,1), got " + std::to_string(alpha));
  if (depth < 1) throw NotInUnitInterval("cf_expand needs depth >= 1");

  ContinuedFraction cf;
  cf.alpha = alpha;
  cf.convergents.push_back({0, 1});  // (p_0, q_0)

  double rem = alpha;
  std::int64_t pkm1 = 0, qkm1 = 1;  // (p_{k-1}, q_{k-1})
  std::int64_t pk = 0, qk = 0;      // filled at k = 1
  for (int k = 1; k <= depth; ++k) {
    if (rem < cutoff) {
      if (k == 1)
        throw DegenerateAtPrecision("alpha indistinguishable from 0 at cutoff " +
                                    std::to_string(cutoff));
      break;  // remainder exhausted: alpha is rational at this precision
    }
    double inv = 1.0 / rem;
    auto a = static_cast<std::int64_t>(std::floor(inv));
    if (a < 1) a = 1;  // guards inv just below 1 from rounding
    rem = inv - static_cast<double>(a);

    std::int64_t p, q;
    if (k == 1) {
      p = 1;
      q = a;
    } else {
      // overflow guard: stop before q exceeds the exactly-representable range
      if (qk > (std::numeric_limits<std::int64_t>::max() - qkm1) / std::max<std::int64_t>(a, 1))
        break;
      p = a * pk + pkm1;
      q = a * qk + qkm1;
    }
    cf.partial_quotients.push_back(a);
    cf.convergents.push_back({p, q});
    pkm1 = pk;
    qkm1 = qk;
    pk = p;
    qk = q;
    if (k == 1) {
      pkm1 = 0;
      qkm1 = 1;
    }
  }

  cf.beta_estimate = 0.0;
  for (std::size_t n = 0; n + 1 < cf.convergents.size(); ++n) {
    double qn = static_cast<double>(cf.convergents[n].second);
    double qn1 = static_cast<double>(cf.convergents[n + 1].second);
    cf.beta_estimate = std::max(cf.beta_estimate, std::log(qn1) / qn);
  }
  return cf;
}

double torus_dist(double x) {
  double r = std::fabs(x - std::nearbyint(x));
  return std::min(r, 0.5);  // clamp the representable boundary case
}

double torus_dist_dot(const std::vector<std::int64_t>& n, const std::vector<double>& alpha) {
  double dot = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) dot += static_cast<double>(n[i]) * alpha[i];
  return torus_dist(dot);
}

void for_each_index(int dim, std::int64_t bound,
                    const std::function<void(const std::vector<std::int64_t>&)>& fn,
                    bool include_zero) {
  std::vector<std::int64_t> n(dim, 0);
  std::function<void(int, std::int64_t)> rec = [&](int coord, std::int64_t left) {
    if (coord == dim) {
      bool zero = true;
      for (auto v : n)
        if (v != 0) zero = false;
      if (!zero || include_zero) fn(n);
      return;
    }
    for (std::int64_t v = -left; v <= left; ++v) {
      n[coord] = v;
      rec(coord + 1, left - std::llabs(v));
    }
  };
  rec(0, bound);
}

FrequencyVector certify_dc(const std::vector<double>& alpha, double tau, std::int64_t bound,
                           double resonance_eps) {
  FrequencyVector fv;
  fv.alpha = alpha;
  fv.tau = tau;
  fv.certified_bound = bound;
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::int64_t> worst;
  for_each_index(static_cast<int>(alpha.size()), bound, [&](const std::vector<std::int64_t>& n) {
    double l1 = 0.0;
    for (auto v : n) l1 += static_cast<double>(std::llabs(v));
    double dist = torus_dist_dot(n, alpha);
    if (dist <= resonance_eps) {
      std::string msg = "n = (";
      for (std::size_t i = 0; i < n.size(); ++i)
        msg += (i ? "," : "") + std::to_string(n[i]);
      msg += "), ||<n,alpha>|| = " + std::to_string(dist);
      throw RationalResonance(msg);
    }
    double k = dist * std::pow(l1, tau);
    if (k < best) {
      best = k;
      worst = n;
    }
  });
  // report just under the scanned minimum so the strict inequality holds
  fv.kappa = best * (1.0 - 1e-12);
  return fv;
}

bool dc_alpha_check(double phi, const std::vector<double>& alpha, double kappa, double tau,
                    std::int64_t bound) {
  bool ok = true;
  for_each_index(static_cast<int>(alpha.size()), bound,
                 [&](const std::vector<std::int64_t>& m) {
                   double l1 = 0.0;
                   for (auto v : m) l1 += static_cast<double>(std::llabs(v));
                   double dot = 0.0;
                   for (std::size_t i = 0; i < m.size(); ++i)
                     dot += static_cast<double>(m[i]) * alpha[i];
                   if (torus_dist(2.0 * phi - dot) < kappa / std::pow(l1 + 1.0, tau)) ok = false;
                 },
                 /*include_zero=*/true);
  return ok;
}

double rot_dc_kappa(double phi, const std::vector<double>& alpha, double tau, std::int64_t bound) {
  double best = std::numeric_limits<double>::infinity();
  for_each_index(static_cast<int>(alpha.size()), bound,
                 [&](const std::vector<std::int64_t>& m) {
                   double l1 = 0.0;
                   for (auto v : m) l1 += static_cast<double>(std::llabs(v));
                   double dot = 0.0;
                   for (std::size_t i = 0; i < m.size(); ++i)
                     dot += static_cast<double>(m[i]) * alpha[i];
                   best = std::min(best, torus_dist(2.0 * phi - dot) * std::pow(l1 + 1.0, tau));
                 },
                 /*include_zero=*/true);
  return best * (1.0 - 1e-12);
}

}  // namespace qpl
