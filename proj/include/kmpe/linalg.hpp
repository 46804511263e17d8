#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace kmpe {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct SingularSystemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Diagonal of the per-sample weight matrix Lambda; entries must be
// finite and nonnegative.
struct DiagWeights {
  explicit DiagWeights(Vector entries);

  Vector entries;
};

// Solves min_beta  sum_i Lambda_ii ||t_i - h_i beta||^2 + lambda' ||beta||^2
// through the (L x L) normal system; H is N x L, T is N x C.
// Throws SingularSystemError when lambda' = 0 and H' Lambda H is rank
// deficient.
Matrix solve_regularized_weighted(const Matrix& H, const DiagWeights& lam,
                                  const Matrix& T, double lambda_prime);

struct EigTop {
  Vector values;   // descending, length m
  Matrix vectors;  // d x m, orthonormal columns
};

// Top-m eigenpairs of a symmetric matrix. Each eigenvector's
// largest-magnitude entry is made nonnegative so outputs are reproducible.
EigTop sym_eig_top(const Matrix& S, int m);

// S = Xc * diag(lam) * Xc', symmetric by construction. Xc is d x n.
Matrix weighted_scatter(const Matrix& Xc, const DiagWeights& lam);

// Top-m eigenpairs of the weighted scatter. Uses the d x d route when
// d <= n, otherwise the n x n Gram route (image-like data, d >> n).
EigTop weighted_scatter_eig_top(const Matrix& Xc, const DiagWeights& lam,
                                int m);

}  // namespace kmpe
