#pragma once

#include <vector>

#include "qpl/eigensolver.hpp"
#include "qpl/operators.hpp"

namespace qpl {

// Pointwise two-bump envelope certificate:
//   |u(n)| <= C (e^{-gamma |n-center|} + C_ell e^{-gamma |n-center+ell|})
// with l1 distances.  The first exponential sits at the detected peak; the
// stored center is the shift that was applied.
struct GoodCertificate {
  double gamma = 0.0;
  std::vector<int> ell;
  double C = 0.0;
  double C_ell = 0.0;  // in (0,1]
  std::vector<int> center;
  double fit_residual = 0.0;  // max_n |u(n)| - bound(n), <= 0 when valid
  bool normalized = false;

  double objective() const;  // C (1 + C_ell e^{gamma |ell|})
};

struct DecayFit {
  double gamma = 0.0;      // nats per site, clamped at 0
  double intercept = 0.0;  // fitted log-amplitude at the center
  double r2 = 0.0;
  std::vector<int> center;
  int samples = 0;
};

// Sites below this are treated as numerically zero and excluded from log
// fits and max-ratio scans.
inline constexpr double kUnderflowFloor = 1e-13;
inline constexpr double kCellFloor = 1e-12;

// Least-squares fit of log|u| against -(l1 distance to the peak), skipping
// sites within exclude_margin of the box boundary.
DecayFit decay_fit(const BoxSpec& box, const std::vector<double>& u, int exclude_margin);

// Smallest-budget envelope certificate at the requested rate; candidates
// |ell|_1 <= ell_search.  Certificates whose leading constant exceeds
// e^{gamma N/2} are rejected as vacuous (such a bound would admit vectors
// with half the requested rate), and if every candidate is vacuous the
// vector does not decay at rate gamma on this box.
GoodCertificate certify_good(const BoxSpec& box, const std::vector<double>& u, double gamma,
                             int ell_search);

struct SuleFit {
  double C_sule = 0.0;
  double gamma = 0.0;  // median fitted rate
};

// Smallest C with |u_m(n)| <= C e^{eps |n_m|} e^{-gamma |n - n_m|} across
// all eigenvectors (n_m their peaks), at the median fitted rate.
SuleFit sule_fit(const BoxSpec& box, const EigenDecomposition& dec, double epsilon);

struct PhaseCenterEntry {
  double theta = 0.0;
  bool localized = false;    // the chosen eigenvector actually decays
  std::vector<int> center;   // peak of the eigenvector whose peak is nearest 0
  int index = -1;            // its position in the decomposition
};

std::vector<PhaseCenterEntry> phase_center_map(const BoxSpec& box,
                                               const std::vector<double>& thetas,
                                               const std::vector<EigenDecomposition>& decs);

}  // namespace qpl
