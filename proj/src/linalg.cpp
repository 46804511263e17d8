#include "kmpe/linalg.hpp"

#include <cmath>

namespace kmpe {

DiagWeights::DiagWeights(Vector entries_) : entries(std::move(entries_)) {
  for (Eigen::Index i = 0; i < entries.size(); ++i) {
    if (!std::isfinite(entries[i]) || entries[i] < 0.0) {
      throw std::invalid_argument("DiagWeights: entries must be finite and >= 0");
    }
  }
}

Matrix solve_regularized_weighted(const Matrix& H, const DiagWeights& lam,
                                  const Matrix& T, double lambda_prime) {
  if (H.rows() != lam.entries.size() || H.rows() != T.rows()) {
    throw std::invalid_argument("solve_regularized_weighted: dimension mismatch");
  }
  if (lambda_prime < 0.0) {
    throw std::invalid_argument("solve_regularized_weighted: lambda' < 0");
  }
  if (lambda_prime > 0.0) {
    const Matrix HtL = H.transpose() * lam.entries.asDiagonal();
    Matrix A = HtL * H;
    A.diagonal().array() += lambda_prime;
    return Eigen::LLT<Matrix>(A).solve(HtL * T);
  }
  // Unregularized: solve the weighted least-squares problem by QR on
  // sqrt(Lambda) H, which tolerates ill-conditioned (but solvable) feature
  // matrices that would look singular through the normal equations.
  const auto root = lam.entries.cwiseSqrt();
  const Matrix B = root.asDiagonal() * H;
  Eigen::ColPivHouseholderQR<Matrix> qr(B);
  if (qr.rank() < H.cols()) {
    throw SingularSystemError(
        "solve_regularized_weighted: weighted system is rank deficient (rank " +
        std::to_string(qr.rank()) + " of " + std::to_string(H.cols()) +
        ") and lambda' = 0");
  }
  return qr.solve(root.asDiagonal() * T);
}

namespace {

// Largest-magnitude entry of each column made nonnegative; first index
// wins ties so the convention is deterministic.
void fix_signs(Matrix& V) {
  for (Eigen::Index j = 0; j < V.cols(); ++j) {
    Eigen::Index arg = 0;
    double best = std::abs(V(0, j));
    for (Eigen::Index i = 1; i < V.rows(); ++i) {
      const double a = std::abs(V(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (V(arg, j) < 0.0) V.col(j) = -V.col(j);
  }
}

}  // namespace

EigTop sym_eig_top(const Matrix& S, int m) {
  if (S.rows() != S.cols()) {
    throw std::invalid_argument("sym_eig_top: matrix not square");
  }
  if (m < 1 || m > S.rows()) {
    throw std::invalid_argument("sym_eig_top: m out of range");
  }
  const double scale = S.cwiseAbs().maxCoeff();
  const double asym = (S - S.transpose()).cwiseAbs().maxCoeff();
  if (scale > 0.0 && asym > 1e-10 * scale) {
    throw std::invalid_argument("sym_eig_top: input not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()));
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("sym_eig_top: eigensolver failed");
  }
  // Eigen returns ascending order.
  const Eigen::Index d = S.rows();
  EigTop out;
  out.values = Vector(m);
  out.vectors = Matrix(d, m);
  for (int k = 0; k < m; ++k) {
    out.values[k] = es.eigenvalues()[d - 1 - k];
    out.vectors.col(k) = es.eigenvectors().col(d - 1 - k);
  }
  fix_signs(out.vectors);
  return out;
}

Matrix weighted_scatter(const Matrix& Xc, const DiagWeights& lam) {
  if (Xc.cols() != lam.entries.size()) {
    throw std::invalid_argument("weighted_scatter: dimension mismatch");
  }
  Matrix S = Xc * lam.entries.asDiagonal() * Xc.transpose();
  return 0.5 * (S + S.transpose());
}

EigTop weighted_scatter_eig_top(const Matrix& Xc, const DiagWeights& lam,
                                int m) {
  const Eigen::Index d = Xc.rows();
  const Eigen::Index n = Xc.cols();
  if (d <= n) {
    return sym_eig_top(weighted_scatter(Xc, lam), m);
  }
  // Gram route: with B = Xc Lambda^(1/2), the nonzero spectrum of B B' is
  // that of B' B, and eigenvectors map back as u = B v / sqrt(lambda).
  const Matrix B = Xc * lam.entries.cwiseSqrt().asDiagonal();
  Matrix G = B.transpose() * B;
  G = 0.5 * (G + G.transpose());
  const EigTop gram = sym_eig_top(G, static_cast<int>(n));
  const double floor = 1e-12 * std::max(1.0, gram.values[0]);
  int usable = 0;
  while (usable < gram.values.size() && gram.values[usable] > floor) ++usable;
  if (usable < m) {
    return sym_eig_top(weighted_scatter(Xc, lam), m);
  }
  EigTop out;
  out.values = gram.values.head(m);
  out.vectors = Matrix(d, m);
  for (int k = 0; k < m; ++k) {
    out.vectors.col(k) = B * gram.vectors.col(k) / std::sqrt(gram.values[k]);
  }
  fix_signs(out.vectors);
  return out;
}

}  // namespace kmpe
