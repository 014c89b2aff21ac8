#pragma once

#include <cstdint>
#include <vector>

#include "qpl/kam.hpp"
#include "qpl/operators.hpp"

namespace qpl {

// Diagonalizer of the elliptic generator G = [[i t, nu], [conj nu, -i t]] for
// the signed angle rho (rho^2 = t^2 - |nu|^2): U^{-1} G U is upper triangular
// with (1,1) entry i*rho, exactly diagonal on the explicit branch.  The
// explicit branch (rho t > 0 and |4 nu / rho| <= 1) has det U = 1 and the
// certified distance bound ||U - id|| <= |nu / rho|; otherwise U is the
// unitary Schur column, whose first column is still an exact i*rho
// eigenvector.
struct Diagonalizer {
  Mat2 u = Mat2::ident();
  bool near_identity = false;
  double dist_id_bound = 0.0;  // ||u - id|| <= this (2 on the unitary branch)
};

// Requires t^2 - |nu|^2 = rho^2 to 1e-8 relative; otherwise InconsistentInput.
Diagonalizer diagonalize_near_identity(const Su11& g, double rho);

// Input side of the duality transform: long-range potential V (real even trig
// polynomial, the hopping symbol), coupling lambda, frequency, the tuned
// Schrodinger energy E with its measured fibered rotation number rho(E), and
// the PSL sign of the reduction identity.  The reduced cocycle is
// (alpha, S_E^{V/lambda}); the dual operator is build_longrange(V, lambda) at
// phase rho(E) with eigenvalue lambda E.
struct DualContext {
  ScalarPoly v;
  double lambda = 1.0;
  FrequencyVector freq;
  double energy = 0.0;
  double rho = 0.0;
  int psl_sign = 1;
};

struct DualEigenfunction {
  ScalarPoly coefficients;        // zhat(n), integer modes, ||zhat||_2 = 1
  double energy = 0.0;            // lambda * E
  double phase = 0.0;             // rho(E)
  std::vector<std::int64_t> ell;  // resonance class carried over (signed by side)
  double c = 0.0;                 // 8 ||B_tilde||^4 at h_tilde
  double c_ell = 0.0;             // min{1, ||Y|| + 2|nu| / dist}
  double dist = 0.0;              // ||2 rho - <ell + ell0, alpha>||
  double residual = 0.0;          // ||(L - lambda E) zhat||_2 on the assembled box
  double mass_prenorm = 0.0;      // l2 mass of zhat before normalization
  double norm_b1 = 0.0;           // coefficient-sum bound on ||B_1||_{C^0}
  bool mass_bound_ok = false;     // mass_prenorm >= 1 / (2 norm_b1)
  bool diag_near_identity = false;
  double diag_bound = 0.0;
};

// Assembles B_1 = B_tilde R_{<ell,theta>/2} e^Y W with the constant frame
// W = M^{-1} U (or its conjugate when the rotation side is reversed), reads
// off the (1,1) entry, demodulates by e^{-2 pi i <ell + ell0, theta>/2} onto
// integer modes, and normalizes.  The eigen-equation residual is measured
// against a freshly built truncated long-range operator at energy lambda E
// and must stay below residual_tol (ResidualTooLarge otherwise); the
// rationality guard ||2 rho - <ell + ell0, alpha>|| < 1e-12 throws
// RationalRotation.
DualEigenfunction build_dual_eigenfunction(const ConjugacyDecomposition& dec,
                                           const ConstantCocycle& a_final,
                                           const DualContext& ctx,
                                           double residual_tol = 1e-6);

// Pure Fourier plumbing check, valid for arbitrary z, V: the defect of the
// Schrodinger-side relation
//   (E - V/lambda) z - e^{-2 pi i rho} z(.-alpha) - e^{2 pi i rho} z(.+alpha),
// scaled by -lambda and read off via series products and shifts, must match
// the raw-loop application of (L_{V,lambda,alpha,rho} - lambda E) to zhat
// coefficientwise.  Returns the max-abs difference (rounding-sized for any
// input).
double duality_identity_check(const ScalarPoly& z, const ScalarPoly& v, double lambda,
                              const std::vector<double>& alpha, double rho, double energy);

}  // namespace qpl
