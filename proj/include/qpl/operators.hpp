#pragma once

#include <map>
#include <string>
#include <vector>

#include "qpl/trigpoly.hpp"

namespace qpl {

// Finite Dirichlet box {n in Z^d : |n_i| <= halfwidth} with sites flattened in
// row-major order over (n_1 + N, ..., n_d + N).
struct BoxSpec {
  int dim = 1;
  int halfwidth = 0;
  int side() const { return 2 * halfwidth + 1; }
  int size() const {
    int s = 1;
    for (int i = 0; i < dim; ++i) s *= side();
    return s;
  }
  int index_of(const std::vector<int>& n) const;
  std::vector<int> site_of(int idx) const;
  int dist_l1(int idx) const;    // |site|_1 distance to the origin site
  int dist_linf(int idx) const;  // box norm max_i |n_i|
  int boundary_gap(int idx) const;  // min_i (halfwidth - |n_i|)
};

struct TruncatedOperator {
  BoxSpec box;
  bool tridiagonal = false;
  std::vector<double> mat;  // dense row-major, size x size, symmetric
  std::map<std::string, std::string> meta;

  int size() const { return box.size(); }
  double at(int i, int j) const { return mat[static_cast<std::size_t>(i) * size() + j]; }
  double& at(int i, int j) { return mat[static_cast<std::size_t>(i) * size() + j]; }
  // y = H x
  void apply(const double* x, double* y) const;
  double sym_defect() const;
  double norm_inf() const;  // max absolute row sum (Gershgorin radius bound)
};

// Nearest-neighbor almost Mathieu box: off-diagonal 1, diagonal
// 2 lambda cos(2 pi (theta + n alpha)).
TruncatedOperator build_amo(double lambda, double alpha, double theta, int N);

// Long-range hopping V_{m-n} from the Fourier coefficients of a real even V,
// plus the same cosine diagonal.  Hoppings with |k| > K are cut once the
// h-norm tail bound drops below tail_tol; K is recorded in meta.
TruncatedOperator build_longrange(const ScalarPoly& v, double lambda,
                                  const std::vector<double>& alpha, double theta, int N,
                                  double tail_tol = 1e-12);

// 1-d nearest-neighbor operator with a d-frequency diagonal
// 2 lambda_inv sum_i cos(2 pi (theta_i + n alpha_i)).
TruncatedOperator build_md_schrodinger(double lambda_inv, const std::vector<double>& alpha,
                                       const std::vector<double>& theta, int N);

// Z^d box: 2d nearest neighbors with entry 1 plus diagonal
// 2 lambda cos(2 pi (theta + <n, alpha>)).
TruncatedOperator build_md_longrange(double lambda, const std::vector<double>& alpha, double theta,
                                     int N);

// Site cap shared by all builders (dense storage is size^2 doubles).
inline constexpr int kMaxSites = 5000;

}  // namespace qpl
