#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qpl/eigensolver.hpp"
#include "qpl/operators.hpp"

namespace qpl {

// Entrywise-absolute Gram matrix of a complete eigenbasis,
//   T(i,j) = sum_m |u_m(i)| |u_m(j)|.
// For every time t, |<delta_i, exp(-itH) delta_j>| <= T(i,j), so T dominates
// the sup-over-t evolution kernel while being computable from a single
// decomposition.
struct DynamicalKernel {
  BoxSpec box;
  std::vector<double> T;  // dense row-major, size x size, symmetric
  std::map<std::string, std::string> meta;

  int size() const { return box.size(); }
  double at(int i, int j) const { return T[static_cast<std::size_t>(i) * size() + j]; }
};

// Requires a complete decomposition of h (one eigenpair per site).
DynamicalKernel dynamical_kernel(const TruncatedOperator& h, const EigenDecomposition& dec);

// <delta_i, exp(-itH) delta_j> = sum_m exp(-it E_m) u_m(i) u_m(j).
std::complex<double> evolve_overlap(const EigenDecomposition& dec, int i, int j, double t);

// max over the sampled times of |<delta_i, exp(-itH) delta_j0>|, per site i.
// An empirical lower envelope for the quantity T(., j0) dominates; the gap
// between the two is the price of replacing sup_t by the Gram bound.
std::vector<double> overlap_envelope(const EigenDecomposition& dec, int j0,
                                     const std::vector<double>& ts);

// Rebuild the sub-threshold tails of each eigenvector of a tridiagonal h by
// the three-term recurrence integrated inward from the box edge.  Inward is
// the growth direction of the decaying branch, so the integration is stable
// exactly where the dense solver's tails bottom out in roundoff (an absolute
// floor near 1e-13 regardless of how small the true entry is).  The rebuilt
// tail is matched in amplitude at the outermost site still above `threshold`.
void refine_tridiagonal_tails(const TruncatedOperator& h, EigenDecomposition& dec,
                              double threshold = 1e-6);

// Phase-averaged kernel column at the origin with a least-squares decay fit.
// Distances use the box norm max_i |n_i| -- the same norm that truncates the
// lattice -- so the fitted rate is comparable across directions.  (In the l1
// metric the rate of a nearest-neighbor model is depressed along diagonals by
// the path-counting entropy, up to ln 2 per step, which is a property of the
// metric rather than of the localization strength.)
struct EdlProfile {
  BoxSpec box;
  std::vector<double> K;  // K[i] = mean over the theta grid of T_theta(i, origin)
  int win_lo = 0, win_hi = 0;  // fit window in max_i |n_i|
  double gamma_hat = 0.0;      // fitted decay rate (signed slope, not clamped)
  double intercept = 0.0;      // -ln K ~ intercept + gamma_hat |n| on the window
  double ci_lo = 0.0, ci_hi = 0.0;  // bootstrap 95% band for gamma_hat
  int theta_grid = 0;
  double theta_offset = 0.0;  // random sub-cell offset applied to the grid
};

// make_op(theta) must build the same family member at phase theta; the box is
// taken from a probe call.  Averages the dominator column over a uniform
// theta grid (shifted by one seeded offset so the grid cannot lock to the
// frequency), fits -ln K on the window, bootstraps a CI over theta resamples.
// Tridiagonal members get their eigenvector tails refined first.
EdlProfile edl_profile(const std::function<TruncatedOperator(double)>& make_op, int theta_grid,
                       int win_lo, int win_hi, std::uint64_t seed = 1);

// Brute-force values and closed-form bounds of the three lattice convolution
// sums controlling the kernel estimate: with C(g) = 1/(1 - exp(-g)),
//   sum_k e^{-g(|p-k|+|q-k|)}            <= (2C(g)+d+|p-q|)^d e^{-g|p-q|}
//   sum_k e^{-g(|p-k+l|+|q-k+l|)}        <= same bound
//   sum_k e^{-g(|p-k|+|q-k+l|)} + (l <-> 0 swapped)
//                                        <= 2 e^{g|l|} (same bound)
// All norms are l1.  The sums factor over coordinates, so each is computed as
// a product of 1-d sums truncated where the geometric tail is below 1e-12 of
// the result.
struct CriterionSums {
  double s_direct = 0.0;
  double s_shifted = 0.0;
  double s_mixed = 0.0;
  double bound_direct = 0.0;
  double bound_mixed = 0.0;
};

CriterionSums criterion_sums(const std::vector<int>& p, const std::vector<int>& q,
                             const std::vector<int>& ell, double gamma);

// One stage of the localization budget: the certificate constant for the
// stage, the sup over secondary-bump weights sup_m C_m e^{gamma m}, and the
// measure of the phase set not yet covered entering the stage.
struct BudgetTerm {
  double c = 0.0;
  double sup = 0.0;
  double tail = 0.0;
};

struct BudgetVerdict {
  std::vector<double> terms;  // c^2 (1 + sup) tail per stage
  std::vector<double> partial_sums;
  double total = 0.0;
  bool convergent = false;
  double ratio_high = 0.0;  // max consecutive ratio over the trailing half
};

// Partial sums plus a ratio-test verdict on the supplied finite sequence:
// convergent means every trailing-half term ratio stays below 0.95 (a margin
// call on the evidence at hand, not a proof of summability).  Tail measures
// must be nonincreasing.
BudgetVerdict criterion_budget(const std::vector<BudgetTerm>& stages);

}  // namespace qpl
