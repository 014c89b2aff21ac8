#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "qpl/errors.hpp"

namespace qpl {

// Continued-fraction data for an irrational in (0,1).
//   partial_quotients: a_1..a_depth
//   convergents: (p_k, q_k) for k = 0..depth with p_0=0, q_0=1, p_1=1, q_1=a_1
//   beta_estimate: max over available n of ln(q_{n+1}) / q_n
struct ContinuedFraction {
  double alpha = 0.0;
  std::vector<std::int64_t> partial_quotients;
  std::vector<std::pair<std::int64_t, std::int64_t>> convergents;
  double beta_estimate = 0.0;
};

// Expansion halts early (without error) once the remainder drops below cutoff;
// throws DegenerateAtPrecision if that happens before the first quotient.
ContinuedFraction cf_expand(double alpha, int depth, double cutoff = 1e-14);

// Distance to the nearest integer, in [0, 1/2].
double torus_dist(double x);

// ||<n, alpha>||_{R/Z} for an integer vector n.
double torus_dist_dot(const std::vector<std::int64_t>& n, const std::vector<double>& alpha);

// A frequency vector together with an exhaustively certified Diophantine
// constant: ||<n,alpha>|| > kappa / |n|_1^tau for all 0 < |n|_1 <= bound.
struct FrequencyVector {
  std::vector<double> alpha;
  double kappa = 0.0;
  double tau = 0.0;
  std::int64_t certified_bound = 0;
  int dim() const { return static_cast<int>(alpha.size()); }
};

// Exhaustive scan over 0 < |n|_1 <= bound.  kappa is the best (largest)
// admissible constant at this bound.  A distance at or below resonance_eps is
// treated as a rational resonance.
FrequencyVector certify_dc(const std::vector<double>& alpha, double tau, std::int64_t bound,
                           double resonance_eps = 1e-12);

// ||2 phi - <m, alpha>|| >= kappa / (|m|_1 + 1)^tau for all |m|_1 <= bound,
// including m = 0.
bool dc_alpha_check(double phi, const std::vector<double>& alpha, double kappa, double tau,
                    std::int64_t bound);

// Largest kappa for which dc_alpha_check would pass at this bound (0 if some
// distance vanishes at precision).
double rot_dc_kappa(double phi, const std::vector<double>& alpha, double tau, std::int64_t bound);

// Enumerate all integer vectors with 0 < |n|_1 <= bound (d = alpha dimension,
// d <= 3 supported everywhere in this project).
void for_each_index(int dim, std::int64_t bound, const std::function<void(const std::vector<std::int64_t>&)>& fn,
                    bool include_zero = false);

}  // namespace qpl
