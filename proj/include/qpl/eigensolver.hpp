#pragma once

#include <vector>

#include "qpl/operators.hpp"

namespace qpl {

struct EigenDecomposition {
  std::vector<double> values;                // ascending
  std::vector<std::vector<double>> vectors;  // vectors[m] is the m-th eigenvector
  double residual_bound = 0.0;               // max_m ||H u_m - E_m u_m||_2
  double ortho_defect = 0.0;                 // max |<u_i,u_j> - delta_ij| over checked pairs
};

// Householder reduction of a dense symmetric matrix (row-major, overwritten
// with the accumulated orthogonal factor Q, A = Q T Q^T).
void tridiagonalize(std::vector<double>& a, int n, std::vector<double>& diag,
                    std::vector<double>& off);

// Number of eigenvalues of the tridiagonal (diag, off) strictly below x;
// off[i] couples sites i-1 and i (off[0] unused).
int sturm_count(const std::vector<double>& diag, const std::vector<double>& off, double x);

// Full spectrum by implicit-shift QL with Wilkinson shifts (60-sweep cap per
// eigenvalue, NoConvergence beyond).  Near-degenerate clusters (gap below
// 1e-12 * ||H||) are re-orthonormalized deterministically.
EigenDecomposition eigen_all(const TruncatedOperator& h);

// Eigenpairs with values in [lo, hi): Sturm bisection for values, inverse
// iteration for vectors.
EigenDecomposition eigen_window(const TruncatedOperator& h, double lo, double hi);

}  // namespace qpl
