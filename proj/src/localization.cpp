#include "qpl/localization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qpl/arithmetics.hpp"
#include "qpl/errors.hpp"
#include "qpl/util.hpp"

namespace qpl {

namespace {

int argmax_site(const std::vector<double>& u) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(u.size()); ++i)
    if (std::fabs(u[i]) > std::fabs(u[best])) best = i;
  return best;
}

int l1(const std::vector<int>& a) {
  int s = 0;
  for (int v : a) s += std::abs(v);
  return s;
}

int l1_diff(const std::vector<int>& a, const std::vector<int>& b) {
  int s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

double norm2(const std::vector<double>& u) {
  double s = 0.0;
  for (double v : u) s += v * v;
  return std::sqrt(s);
}

}  // namespace

double GoodCertificate::objective() const {
  return C * (1.0 + C_ell * std::exp(gamma * l1(ell)));
}

DecayFit decay_fit(const BoxSpec& box, const std::vector<double>& u, int exclude_margin) {
  if (static_cast<int>(u.size()) != box.size())
    throw InconsistentInput("vector length does not match the box");
  if (box.halfwidth <= 2 * exclude_margin)
    throw TooFewSamples("box radius must exceed twice the excluded margin");

  DecayFit fit;
  int peak = argmax_site(u);
  fit.center = box.site_of(peak);

  // regression of y = log|u| on t = distance, y = b - gamma t
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0, syy = 0.0;
  int n = 0;
  for (int i = 0; i < box.size(); ++i) {
    if (std::fabs(u[i]) <= kUnderflowFloor) continue;
    if (box.boundary_gap(i) <= exclude_margin) continue;
    double t = l1_diff(box.site_of(i), fit.center);
    double y = std::log(std::fabs(u[i]));
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    syy += y * y;
    ++n;
  }
  double disc = n * stt - st * st;
  if (n < 4 || disc <= 0.0)
    throw TooFewSamples("need at least four usable sites at distinct distances, have " +
                        std::to_string(n));
  double slope = (n * sty - st * sy) / disc;
  fit.intercept = (sy - slope * st) / n;
  fit.gamma = std::max(0.0, -slope);
  fit.samples = n;

  double ss_tot = syy - sy * sy / n;
  double ss_res = 0.0;
  for (int i = 0; i < box.size(); ++i) {
    if (std::fabs(u[i]) <= kUnderflowFloor) continue;
    if (box.boundary_gap(i) <= exclude_margin) continue;
    double t = l1_diff(box.site_of(i), fit.center);
    double r = std::log(std::fabs(u[i])) - (fit.intercept + slope * t);
    ss_res += r * r;
  }
  fit.r2 = ss_tot <= 0.0 ? 1.0 : std::max(0.0, 1.0 - ss_res / ss_tot);
  return fit;
}

GoodCertificate certify_good(const BoxSpec& box, const std::vector<double>& u, double gamma,
                             int ell_search) {
  if (static_cast<int>(u.size()) != box.size())
    throw InconsistentInput("vector length does not match the box");
  if (!(gamma > 0.0)) throw InconsistentInput("certificate rate must be positive");

  int peak = argmax_site(u);
  auto center = box.site_of(peak);
  const double cap = std::exp(0.5 * gamma * box.halfwidth);

  // displacement profile: m = site - center, distances |m| and |m + ell|
  std::vector<std::vector<int>> disp(box.size());
  std::vector<int> dist0(box.size());
  for (int i = 0; i < box.size(); ++i) {
    auto s = box.site_of(i);
    for (std::size_t j = 0; j < s.size(); ++j) s[j] -= center[j];
    dist0[i] = l1(s);
    disp[i] = std::move(s);
  }

  GoodCertificate best;
  bool have = false;
  auto consider = [&](const std::vector<int>& ell) {
    double C, C_ell;
    if (l1(ell) == 0) {
      double ratio = 0.0;
      for (int i = 0; i < box.size(); ++i)
        ratio = std::max(ratio, std::fabs(u[i]) * std::exp(gamma * dist0[i]));
      C_ell = kCellFloor;
      C = ratio / (1.0 + C_ell) * (1.0 + 1e-12);
    } else {
      std::vector<int> dist1(box.size());
      for (int i = 0; i < box.size(); ++i) {
        auto m = disp[i];
        for (std::size_t j = 0; j < m.size(); ++j) m[j] += ell[j];
        dist1[i] = l1(m);
      }
      // leading constant from the primary region, secondary constant from
      // the residual max-ratio near the second bump
      double ratio = 0.0;
      for (int i = 0; i < box.size(); ++i)
        if (dist0[i] <= dist1[i]) ratio = std::max(ratio, std::fabs(u[i]) * std::exp(gamma * dist0[i]));
      C = ratio * (1.0 + 1e-12);
      double need = 0.0;
      for (int i = 0; i < box.size(); ++i) {
        if (dist0[i] <= dist1[i]) continue;
        double rem = std::fabs(u[i]) - C * std::exp(-gamma * dist0[i]);
        if (rem > 0.0) need = std::max(need, rem * std::exp(gamma * dist1[i]) / C);
      }
      need *= 1.0 + 1e-12;
      if (need <= 1.0) {
        C_ell = std::max(need, kCellFloor);
      } else {
        // the split bound fails; fall back to the joint envelope at C_ell = 1
        C_ell = 1.0;
        double joint = 0.0;
        for (int i = 0; i < box.size(); ++i)
          joint = std::max(joint, std::fabs(u[i]) / (std::exp(-gamma * dist0[i]) +
                                                     std::exp(-gamma * dist1[i])));
        C = joint * (1.0 + 1e-12);
      }
    }
    if (!(C > 0.0) || C > cap) return;  // vacuous at this rate
    GoodCertificate cand;
    cand.gamma = gamma;
    cand.ell = ell;
    cand.C = C;
    cand.C_ell = C_ell;
    cand.center = center;
    cand.normalized = std::fabs(norm2(u) - 1.0) <= 1e-8;
    // shifting the secondary bump along its own tail trades C_ell against
    // e^{gamma |ell|} at a constant product, so budget ties are structural;
    // break them toward the tightest primary constant (C is what every later
    // estimate pays for), then the tightest secondary one, then the shortest
    // shift
    bool better = false;
    if (!have) {
      better = true;
    } else {
      double a = cand.objective(), b = best.objective();
      if (a < b * (1.0 - 1e-9)) {
        better = true;
      } else if (a <= b * (1.0 + 1e-9)) {
        if (cand.C < best.C * (1.0 - 1e-9))
          better = true;
        else if (cand.C <= best.C * (1.0 + 1e-9)) {
          if (cand.C_ell < best.C_ell * (1.0 - 1e-9))
            better = true;
          else if (cand.C_ell <= best.C_ell * (1.0 + 1e-9) && l1(cand.ell) < l1(best.ell))
            better = true;
        }
      }
    }
    if (better) {
      best = cand;
      have = true;
    }
  };

  consider(std::vector<int>(box.dim, 0));
  for_each_index(box.dim, ell_search, [&](const std::vector<std::int64_t>& nl) {
    std::vector<int> ell(nl.begin(), nl.end());
    consider(ell);
  });

  if (!have)
    throw NoFiniteCertificate("no envelope at rate " + fmt_g17(gamma) + " within search radius " +
                              std::to_string(ell_search));

  // re-check the pointwise bound on every site
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < box.size(); ++i) {
    auto m = disp[i];
    for (std::size_t j = 0; j < m.size(); ++j) m[j] += best.ell[j];
    double bound = best.C * (std::exp(-gamma * dist0[i]) + best.C_ell * std::exp(-gamma * l1(m)));
    worst = std::max(worst, std::fabs(u[i]) - bound);
  }
  best.fit_residual = worst;
  return best;
}

SuleFit sule_fit(const BoxSpec& box, const EigenDecomposition& dec, double epsilon) {
  SuleFit out;
  std::vector<double> rates;
  std::vector<std::vector<int>> centers;
  int margin = std::min(4, box.halfwidth / 4);
  for (auto& u : dec.vectors) {
    auto fit = decay_fit(box, u, margin);
    rates.push_back(fit.gamma);
    centers.push_back(fit.center);
  }
  if (rates.empty()) return out;
  auto sorted = rates;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  out.gamma = sorted[sorted.size() / 2];

  double c = 0.0;
  for (std::size_t m = 0; m < dec.vectors.size(); ++m) {
    double boost = std::exp(-epsilon * l1(centers[m]));
    for (int i = 0; i < box.size(); ++i) {
      double a = std::fabs(dec.vectors[m][i]);
      if (a <= kUnderflowFloor) continue;
      c = std::max(c, a * boost * std::exp(out.gamma * l1_diff(box.site_of(i), centers[m])));
    }
  }
  out.C_sule = c;
  return out;
}

std::vector<PhaseCenterEntry> phase_center_map(const BoxSpec& box,
                                               const std::vector<double>& thetas,
                                               const std::vector<EigenDecomposition>& decs) {
  if (thetas.empty() || thetas.size() != decs.size())
    throw InconsistentInput("need one decomposition per phase");
  std::vector<PhaseCenterEntry> out(thetas.size());
  int margin = std::min(4, box.halfwidth / 4);
  parallel_for(thetas.size(), [&](std::size_t t) {
    PhaseCenterEntry e;
    e.theta = thetas[t];
    int best = -1, best_dist = 0;
    for (int m = 0; m < static_cast<int>(decs[t].vectors.size()); ++m) {
      int d = l1(box.site_of(argmax_site(decs[t].vectors[m])));
      if (best < 0 || d < best_dist) {
        best = m;
        best_dist = d;
      }
    }
    if (best >= 0) {
      e.index = best;
      e.center = box.site_of(argmax_site(decs[t].vectors[best]));
      auto fit = decay_fit(box, decs[t].vectors[best], margin);
      e.localized = fit.gamma > 0.1 && fit.r2 > 0.6;
    }
    out[t] = e;
  });
  return out;
}

}  // namespace qpl
