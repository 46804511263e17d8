#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <stdexcept>

#include <doctest.h>

#include "kmpe/data.hpp"
#include "kmpe/pca.hpp"
#include "kmpe/rng.hpp"

using namespace kmpe;

namespace {

Matrix random_matrix(Rng& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

// Largest principal angle between equal-dimension subspaces.
double principal_angle(const Matrix& A, const Matrix& B) {
  const Vector s = (A.transpose() * B).jacobiSvd().singularValues();
  const double c = std::clamp(s.minCoeff(), -1.0, 1.0);
  return std::acos(c);
}

}  // namespace

TEST_CASE("fit_l2 recovers exact low-rank structure") {
  Rng rng(1);
  const Vector dir = Vector::Ones(4).normalized();
  Matrix X(4, 30);
  for (int i = 0; i < 30; ++i) {
    X.col(i) = Vector::Constant(4, 2.0) + rng.uniform(-3.0, 3.0) * dir;
  }
  const Subspace sub = fit_l2(X, 1);
  CHECK(std::abs(sub.W.col(0).dot(dir)) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(residuals(sub, X).cwiseAbs().maxCoeff() < 1e-10);

  // Full basis: zero reconstruction error.
  const Matrix R = random_matrix(rng, 4, 40);
  const Subspace full = fit_l2(R, 4);
  CHECK(residuals(full, R).cwiseAbs().maxCoeff() < 1e-10);

  CHECK_THROWS_AS(fit_l2(R, 5), std::invalid_argument);
}

TEST_CASE("fit_l2 equals the scatter eigendecomposition oracle") {
  Rng rng(2);
  const Matrix X = random_matrix(rng, 6, 40);
  const Subspace sub = fit_l2(X, 3);
  const Matrix Xc = X.colwise() - X.rowwise().mean().eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(Xc * Xc.transpose());
  for (int k = 0; k < 3; ++k) {
    const Vector v = es.eigenvectors().col(5 - k);
    CHECK(std::abs(sub.W.col(k).dot(v)) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("residuals are orthogonal to the subspace and idempotent") {
  Rng rng(3);
  const Matrix X = random_matrix(rng, 8, 25);
  const Subspace sub = fit_l2(X, 3);
  const Matrix E = residuals(sub, X);
  CHECK((sub.W.transpose() * E).cwiseAbs().maxCoeff() < 1e-8);

  // Point already in mu + range(W) has zero residual.
  const Vector inside = sub.mu + sub.W * Vector::Ones(3);
  CHECK(residuals(sub, inside).cwiseAbs().maxCoeff() < 1e-10);

  // Applying the projector twice changes nothing.
  Subspace zero_mean = sub;
  zero_mean.mu.setZero();
  const Matrix E2 = residuals(zero_mean, residuals(zero_mean, X));
  CHECK((E2 - residuals(zero_mean, X)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("irls_weights") {
  Rng rng(4);
  const Matrix E = random_matrix(rng, 5, 8);
  // p = 2 gives pure Gaussian weights.
  const DiagWeights hq = irls_weights(E, KernelParams(1.5, 2.0));
  for (int i = 0; i < 8; ++i) {
    const double expected = std::exp(-E.col(i).squaredNorm() / (2.0 * 1.5 * 1.5));
    CHECK(hq.entries[i] == doctest::Approx(expected).epsilon(1e-12));
  }

  // Closed-form oracle at p = 3.
  const DiagWeights w3 = irls_weights(E, KernelParams(1.5, 3.0));
  for (int i = 0; i < 8; ++i) {
    const double k = std::exp(-E.col(i).squaredNorm() / (2.0 * 1.5 * 1.5));
    CHECK(w3.entries[i] == doctest::Approx(std::sqrt(1.0 - k) * k).epsilon(1e-12));
  }

  // Far outliers get vanishing weight; p >= 2 weights stay within [0, 1].
  Matrix far = E;
  far.col(0) *= 1e6;
  const DiagWeights wf = irls_weights(far, KernelParams(1.5, 2.0));
  CHECK(wf.entries[0] == 0.0);
  CHECK(wf.entries.maxCoeff() <= 1.0);
  CHECK(wf.entries.minCoeff() >= 0.0);
}

TEST_CASE("weighted_mean") {
  Rng rng(5);
  const Matrix X = random_matrix(rng, 3, 10);
  const Vector plain = weighted_mean(X, DiagWeights{Vector::Ones(10)});
  CHECK((plain - X.rowwise().mean()).cwiseAbs().maxCoeff() < 1e-12);

  Vector one = Vector::Zero(10);
  one[4] = 2.0;
  CHECK((weighted_mean(X, DiagWeights{one}) - X.col(4)).cwiseAbs().maxCoeff() <
        1e-12);

  Vector w(10);
  for (int i = 0; i < 10; ++i) w[i] = rng.uniform(0.0, 1.0);
  Vector naive = Vector::Zero(3);
  for (int i = 0; i < 10; ++i) naive += w[i] * X.col(i);
  naive /= w.sum();
  CHECK((weighted_mean(X, DiagWeights{w}) - naive).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(weighted_mean(X, DiagWeights{Vector::Zero(10)}),
                  std::runtime_error);
}

TEST_CASE("silverman_bandwidth") {
  // Constant residuals hit the positivity floor.
  Matrix E = Matrix::Ones(3, 5);
  CHECK(silverman_bandwidth(E) == doctest::Approx(1e-8));

  // Naive statistics oracle on s = {0, 1, ..., 99} (squared norms).
  Matrix single(1, 100);
  for (int i = 0; i < 100; ++i) single(0, i) = std::sqrt(static_cast<double>(i));
  std::vector<double> s(100);
  for (int i = 0; i < 100; ++i) s[i] = static_cast<double>(i);
  double mean = 0.0;
  for (double v : s) mean += v;
  mean /= 100.0;
  double var = 0.0;
  for (double v : s) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / 99.0);
  const double q25 = 24.75, q75 = 74.25;  // interpolated quartiles
  const double sigma_sq =
      1.06 * std::min(sd, (q75 - q25) / 1.354) * std::pow(100.0, -0.2);
  CHECK(silverman_bandwidth(single) ==
        doctest::Approx(std::sqrt(sigma_sq)).epsilon(1e-12));

  // Homogeneity: scaling residuals by c scales sigma^2 by c^2.
  Rng rng(6);
  const Matrix R = random_matrix(rng, 4, 30);
  const double base = silverman_bandwidth(R);
  const double scaled = silverman_bandwidth((2.5 * R).eval());
  CHECK(scaled * scaled == doctest::Approx(2.5 * 2.5 * base * base).epsilon(1e-10));
}

TEST_CASE("fit_kmpe agrees with fit_l2 on clean exact rank-m data") {
  Rng rng(7);
  const Matrix U = random_matrix(rng, 12, 3);
  const Matrix V = random_matrix(rng, 3, 60);
  const Matrix X = U * V;

  PcaConfig cfg;
  cfg.m = 3;
  cfg.power = 2.0;
  const auto [sub, trace] = fit_kmpe(X, cfg);
  const Subspace l2 = fit_l2(X, 3);
  CHECK(principal_angle(sub.W, l2.W) < 1e-6);
  CHECK((sub.W.transpose() * sub.W - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <
        1e-8);
}

TEST_CASE("fit_kmpe at p = 2 follows the Gaussian-weight trajectory") {
  Rng rng(8);
  const Matrix X = random_matrix(rng, 6, 40);
  PcaConfig cfg;
  cfg.m = 2;
  cfg.power = 2.0;
  cfg.sigma = 1.2;
  cfg.max_iter = 1;

  const auto [sub, trace] = fit_kmpe(X, cfg);

  // Re-run the single HQ iteration by hand.
  const Subspace init = fit_l2(X, 2);
  const Matrix E = residuals(init, X);
  Vector w(40);
  for (int i = 0; i < 40; ++i) {
    w[i] = std::exp(-E.col(i).squaredNorm() / (2.0 * 1.2 * 1.2));
  }
  const Vector mu = (X * w) / w.sum();
  const Matrix Xc = X.colwise() - mu;
  const EigTop top = weighted_scatter_eig_top(Xc, DiagWeights{w}, 2);
  CHECK((sub.W - top.vectors).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((sub.mu - mu).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fit_kmpe beats fit_l2 on grossly corrupted low-rank data") {
  double l2_total = 0.0;
  double kmpe_total = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto [clean, corrupted] = gen_lowrank_corrupted(
        20, 200, 3, 0.2, CorruptionMode::dummy, seed);
    const Subspace l2 = fit_l2(corrupted, 3);
    PcaConfig cfg;
    cfg.m = 3;
    cfg.power = 2.0;
    const auto [robust, trace] = fit_kmpe(corrupted, cfg);
    l2_total += avg_reconstruction_error(l2, clean, corrupted);
    kmpe_total += avg_reconstruction_error(robust, clean, corrupted);
  }
  CHECK(kmpe_total < 0.8 * l2_total);
}

TEST_CASE("avg_reconstruction_error cases") {
  Rng rng(9);
  const Matrix X = random_matrix(rng, 5, 12);
  const Subspace full = fit_l2(X, 5);
  CHECK(avg_reconstruction_error(full, X, X) < 1e-10);

  // Zero-column subspace with mu = 0 leaves the mean column norm.
  Subspace none;
  none.W = Matrix::Zero(5, 0);
  none.mu = Vector::Zero(5);
  none.m = 0;
  CHECK(avg_reconstruction_error(none, X, X) ==
        doctest::Approx(X.colwise().norm().mean()).epsilon(1e-12));

  // Per-sample naive oracle.
  const Subspace sub = fit_l2(X, 2);
  double naive = 0.0;
  for (int i = 0; i < 12; ++i) {
    const Vector rec = sub.W * (sub.W.transpose() * (X.col(i) - sub.mu));
    naive += ((X.col(i) - sub.mu) - rec).norm();
  }
  naive /= 12.0;
  CHECK(avg_reconstruction_error(sub, X, X) == doctest::Approx(naive).epsilon(1e-12));
}

TEST_CASE("subspace persistence round-trip is value-exact") {
  Rng rng(10);
  const Matrix X = random_matrix(rng, 7, 20);
  const Subspace sub = fit_l2(X, 3);
  std::stringstream ss;
  save_subspace(sub, ss);
  const Subspace back = load_subspace(ss);
  CHECK(back.m == 3);
  CHECK((back.W - sub.W).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.mu - sub.mu).cwiseAbs().maxCoeff() == 0.0);
}
