#pragma once

#include <optional>
#include <string>
#include <utility>

#include "kmpe/elm.hpp"
#include "kmpe/kmpe.hpp"
#include "kmpe/linalg.hpp"

namespace kmpe {

// Orthonormal projection matrix W (d x m) plus the sample mean it was
// centered with.
struct Subspace {
  Matrix W;
  Vector mu;
  int m = 0;
};

struct PcaConfig {
  int m = 1;
  double power = 2.0;
  // Fixed kernel bandwidth; when absent, Silverman's rule is re-applied to
  // the residuals at every iteration.
  std::optional<double> sigma;
  int max_iter = 100;
  double tol = 1e-6;
  // Working subspace dimension for the outlier-suppression trick; 0 means
  // "use m".
  int m_r = 0;
};

// Plain L2-PCA: mean + top-m eigenvectors of the scatter.
Subspace fit_l2(const Matrix& X, int m);

// e_i = (x_i - mu) - W W' (x_i - mu), column per sample.
Matrix residuals(const Subspace& sub, const Matrix& X);

// IRLS weights from per-column residual norms (Gaussian weights at p = 2).
DiagWeights irls_weights(const Matrix& E, const KernelParams& params);

Vector weighted_mean(const Matrix& X, const DiagWeights& lam);

// Silverman bandwidth from the squared residual norms; floored at 1e-8.
double silverman_bandwidth(const Matrix& E);

// IRLS subspace fit under the KMPE objective: alternate residuals,
// weights, weighted mean, and the weighted eigenproblem until the
// projection matrix settles. The trace records the KMPE objective per
// iteration.
std::pair<Subspace, TrainTrace> fit_kmpe(const Matrix& X, const PcaConfig& cfg);

// Mean distance between clean samples and their reconstructions computed
// from the (possibly corrupted) training samples.
double avg_reconstruction_error(const Subspace& sub, const Matrix& X_clean,
                                const Matrix& X_train);

// Value-exact text persistence.
void save_subspace(const Subspace& sub, std::ostream& os);
Subspace load_subspace(std::istream& is);
void save_subspace_file(const Subspace& sub, const std::string& path);
Subspace load_subspace_file(const std::string& path);

}  // namespace kmpe
