#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qpl/cocycle.hpp"

namespace qpl {

// Constant SL(2,R) part of a cocycle with its su(1,1) shadow
// M A M^{-1} = exp [[i t, nu], [conj nu, -i t]] and the rotation angle xi,
// spec(A) = {e^{2 pi i xi}, e^{-2 pi i xi}}, principal branch in [0, 1/2].
struct ConstantCocycle {
  Mat2 A = Mat2::ident();
  Su11 su11;
  double xi = 0.0;

  // Signed angle in radians: the su(1,1) shadow has eigenvalues e^{+-i sigma}
  // and sigma carries the sign of t.  For A = rot2(phi), sigma = -2 pi phi.
  double sigma() const;

  // Throws HyperbolicConstant when |trace|/2 > 1 (modulo 1e-9 slack).  The
  // su(1,1) round-trip is checked to 1e-10 relative.
  static ConstantCocycle from_matrix(const Mat2& a);
};

struct KamConfig {
  double c0 = 4.0;  // smallness-gate exponent (the paper's numerical constant)
  double d0 = 0.0;  // gate prefactor; <= 0 means kappa'/100 from the frequency
  bool force_gate = false;  // proceed past a failed gate; recorded, not fatal
  // Rotation-number Diophantine data (kappa, tau) capping the resonance
  // threshold at min(eps^{1/15}, kappa_rot/2/(|n|+1)^tau_rot).  The cap is what
  // actually gates resonances until eps drops below ~kappa^15; the bare
  // eps^{1/15} of the asymptotic statement is vacuous at realistic eps.
  // kappa_rot = 0 disables the cap (pure eps^{1/15}).
  double kappa_rot = 0.0;
  double tau_rot = 0.0;
  bool allow_multiple_resonances = false;  // pick smallest |n| instead of throwing
  std::int64_t scan_cap = 400000;          // resonance-scan budget per step
  std::int64_t dc_bound_cap = 2000000;     // frequency-DC certification budget
  double drop_tol = 1e-30;     // series product floor
  double divisor_floor = 1e-14;  // homological divisors below this abort the run
  double target_eps = 1e-24;   // reduce_to_constant stopping tolerance
  int max_steps = 40;
  double h = 0.0;              // initial analyticity radius (reduce_to_constant)
  long long rho_iterates = 1 << 18;  // rotation-number budget for the DC precheck
  std::int64_t rot_dc_bound = 512;   // dc_alpha_check range for the precheck
};

// State after j steps: B^{-1}(.+alpha) A0 e^{f0} B = psl_sign * A e^{f}.
struct KamState {
  int step = 0;
  FrequencyVector freq;
  ConstantCocycle A;
  MatPoly f;       // real sl(2,R)-valued remainder
  double h = 0.0;  // current analyticity radius
  double eps = 0.0;   // ||f||_h
  double range = 0.0;  // truncation range N used by the step that produced this state
  MatPoly B;           // accumulated conjugacy (den 2 once a resonance occurred)
  std::vector<std::int64_t> deg;  // half-rotation class: B ~ R_{<deg,theta>/2}
  int psl_sign = 1;
  std::vector<std::pair<int, std::vector<std::int64_t>>> resonance_log;  // (step, increment)
};

enum class KamCase { NonResonant, Resonant };

struct KamStepReport {
  KamCase tag = KamCase::NonResonant;
  double eps = 0.0;       // input ||f||_h
  double eps_next = 0.0;  // output ||f+||_{h_next}
  double range = 0.0;     // N = 2 |ln eps| / (h - h_next)
  bool gate_ok = true;
  double gate_bound = 0.0;
  bool scan_truncated = false;  // resonance scan or DC certification hit its budget
  std::vector<std::int64_t> resonance;  // deg increment; empty when non-resonant
  double gap = 0.0;        // ||2 xi - <n, alpha>|| at the selected resonance
  double threshold = 0.0;  // threshold it violated
  int multiple_candidates = 0;
  int psl_flip = 1;              // -1 when A+ was pulled back from near -Id
  double slack_quadratic = 0.0;  // eps_next / eps^2, logged (3/2-power is asserted)
  double bar_dist_id = 0.0;      // ||bar B - id||_{h_next}, non-resonant case
  double bar_norm = 0.0;         // ||bar B||_{h_next}, resonant case
  double bar_prime_norm = 0.0;   // ||bar B'||_{h_next} (rotation factor removed)
  double nu_abs = 0.0, t_abs = 0.0;  // su(1,1) data of A+, resonant case
  double delta_a = 0.0;          // ||A+ - A||
  MatPoly factor;        // bar B of this step
  MatPoly factor_prime;  // resonant case: bar B' (factor = factor_prime * R)
};

struct KamStepResult {
  KamState state;
  KamStepReport report;
};

// One almost-reducibility step at radius h_next < state.h.  Non-resonant case
// solves the truncated homological equation and conjugates by e^Y; resonant
// case additionally rotates by R_{<n,theta>/2} after diagonalizing the
// constant, so the new constant has su(1,1) data (t+, nu+) with nu+ fed by the
// resonant Fourier mode.  A+ and f+ are extracted exactly from the conjugated
// series (mode zero, then a matrix log), so the conjugation identity holds to
// series precision independently of the KAM estimates, which are recorded.
KamStepResult kam_step(const KamState& st, double h_next, const KamConfig& cfg);

// Solves  Ad_{A^{-1}}(Y(theta+alpha)) - Y(theta) = P f  over the modes
// 0 < |n|_1 <= range of f, where P drops mode zero and, when `resonance` is
// given, the off-diagonal pair it excites in the diagonalized su(1,1) frame.
// Returns the real sl(2,R)-valued solution.  Divisors below divisor_floor
// throw DcViolatedMidRun; a constant that cannot be diagonalized (parabolic
// with nu != 0) throws HyperbolicConstant.
MatPoly homological_solve(const ConstantCocycle& a, const MatPoly& f,
                          const FrequencyVector& freq, double range,
                          const std::vector<std::int64_t>* resonance = nullptr,
                          double divisor_floor = 1e-14);

// Splits a near-constant cocycle as A0 e^{f0} (exactly for the Schrodinger
// form via the nilpotent lower-triangular factor) and prepares step zero.
KamState kam_initial_state(const Cocycle& c, double h, const KamConfig& cfg);

// B = B_tilde * R_{<ell,theta>/2} * e^Y, split at the last resonance.
struct ConjugacyDecomposition {
  MatPoly b_tilde;
  std::vector<std::int64_t> ell;
  MatPoly y;
  cplx nu{0.0};  // su(1,1) off-diagonal of the final constant
  std::vector<std::int64_t> deg_b_tilde;
  double h_tilde = 0.0;
  double norm_b_tilde = 0.0;  // ||B_tilde||_{h_tilde}
  double norm_y = 0.0;        // ||Y||_{h_tilde}
};

struct ReductionCertificates {
  bool gate_all = true;         // every step passed the smallness gate
  bool contraction_quadratic = true;  // eps+ <= 10 eps^2 held at each non-resonant step
  bool es1_y = false;    // ||Y||_ht <= e^{-2 pi |ell| ht}
  bool es1_nu = false;   // |nu|    <= 2 e^{-2 pi |ell| ht}
  bool es2 = false;      // ||B_tilde||_ht < |ln kappa|^tau kappa^{-2(h-ht)/ht}
  bool es3 = false;      // |ell| <= |ln kappa|^4 / (h - ht)
  bool eigen_gap = false;  // ||2 rho - <ell,alpha> - <deg B_tilde,alpha>|| >= kappa/(2^tau |ell|^tau)
  double conj_residual = 0.0;         // grid residual of the accumulated conjugacy
  double reconstruct_residual = 0.0;  // B_tilde R e^Y vs accumulated B on the grid
  double gap_value = 0.0;
  double gap_bound = 0.0;
  double worst_quadratic_slack = 0.0;
  std::string notes;
};

struct ReductionResult {
  ConjugacyDecomposition dec;
  ConstantCocycle a_final;
  std::vector<KamState> trace;  // state after each step; front() is step zero
  std::vector<KamStepReport> reports;
  ReductionCertificates certs;
  double rho = 0.0;          // fibered rotation number of the input
  double residual_eps = 0.0;
  int psl_sign = 1;
};

// Iterates kam_step with the shrinking-gap radius schedule
// h_j - h_{j+1} = (h - (h+target_h)/2) / 4^{j+1} until ||f|| < cfg.target_eps,
// then splits the accumulated conjugacy at the last resonance and certifies
// the estimate shapes (violations are recorded, not fatal).  rot_kappa/rot_tau
// is the Diophantine class of the fibered rotation number, checked up front.
ReductionResult reduce_to_constant(const Cocycle& c, double target_h, double rot_kappa,
                                   double rot_tau, const KamConfig& cfg);

// Bisection on E to |rho(E) - target_rho| < 1e-8; rho must be nonincreasing in
// E and the bracket must straddle the target.
double rotation_tune(const std::function<Cocycle(double)>& builder, double target_rho,
                     double e_lo, double e_hi, long long iterates = 1 << 17);

// Successive resonances must grow geometrically:
// |n_{i+1}| >= eps_{m_i}^{-1/(18 tau)} |n_i|, with eps_{m_i} the remainder
// norm at the step of the earlier resonance.  Vacuously true below two
// resonances.  On failure writes a diagnostic (a numerics signal, not a
// semantic branch).
bool resonance_spacing_check(
    const std::vector<std::pair<int, std::vector<std::int64_t>>>& log,
    const std::vector<double>& eps_schedule, double tau,
    std::string* diagnostic = nullptr);

}  // namespace qpl
