#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "qpl/arithmetics.hpp"
#include "qpl/mat2.hpp"
#include "qpl/trigpoly.hpp"

namespace qpl {

// Quasi-periodic cocycle (alpha, A) over T^d.  The map is either a constant
// matrix, a trigonometric polynomial of matrices, or the Schrodinger form
// S_E^V = [[E - V, -1], [1, 0]].
struct Cocycle {
  enum class Form { Constant, Poly, Schrodinger };

  FrequencyVector freq;
  Form form = Form::Constant;
  Mat2 constant = Mat2::ident();
  MatPoly poly;
  double energy = 0.0;
  ScalarPoly potential;

  int dim() const { return freq.dim(); }
  Mat2 eval(const std::vector<double>& x) const;
  Mat2 eval_c(const std::vector<cplx>& x) const;  // complexified phase

  // det A = 1 on a test grid within 1e-10
  void validate() const;

  static Cocycle from_constant(FrequencyVector f, const Mat2& a);
  static Cocycle from_poly(FrequencyVector f, MatPoly b);
  static Cocycle schrodinger(FrequencyVector f, double e, ScalarPoly v);
};

// n-step iterate A_n(x); A_0 = Id and A_{-n}(x) = A_n(x - n alpha)^{-1}.
Mat2 transfer(const Cocycle& c, std::vector<double> x, long long n);

struct LyapunovEstimate {
  double value = 0.0;     // clamped at 0
  double stderr_ = 0.0;   // bootstrap standard error over phase samples
  long long iterates = 0;
  int phases = 0;
};

// Birkhoff estimate of the top Lyapunov exponent: renormalized vector
// iteration averaged over phase samples (deterministic offset grid).
LyapunovEstimate lyapunov(const Cocycle& c, long long iterates, int phase_samples,
                          std::uint64_t seed = 1);

// Fibered rotation number via a continuous angle lift of the projective
// action.  The weighted variant uses a smooth Birkhoff window for
// super-convergence at Diophantine frequencies.
double rotation_number(const Cocycle& c, long long iterates);
double rotation_number_weighted(const Cocycle& c, long long iterates);

// Winding numbers of a matrix column along each coordinate circle; the grid
// must keep consecutive angle steps below pi/2.
std::vector<int> degree_probe(const MatPoly& b, int grid);

// Numerical uniform-hyperbolicity probe (not a proof): uniform norm growth
// over sampled phases plus uniform transversality of the finite-time
// stable/unstable directions.
bool uh_probe(const Cocycle& c, long long iterates, int phase_samples);

// Lyapunov exponents of the phase-complexified cocycle on an epsilon grid.
std::vector<std::pair<double, double>> acceleration_probe(const Cocycle& c,
                                                          const std::vector<double>& epsilons,
                                                          long long iterates);

}  // namespace qpl
