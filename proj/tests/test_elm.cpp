#include <cmath>
#include <sstream>

#include <stdexcept>

#include <doctest.h>

#include "kmpe/data.hpp"
#include "kmpe/elm.hpp"
#include "kmpe/rng.hpp"

using namespace kmpe;

TEST_CASE("init_hidden determinism and distribution") {
  const HiddenLayer a = init_hidden(3, 10, Activation::sigmoid, 99);
  const HiddenLayer b = init_hidden(3, 10, Activation::sigmoid, 99);
  CHECK((a.weights - b.weights).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.biases - b.biases).cwiseAbs().maxCoeff() == 0.0);

  const HiddenLayer c = init_hidden(3, 10, Activation::sigmoid, 100);
  CHECK((a.weights - c.weights).cwiseAbs().maxCoeff() > 0.0);

  // Monte Carlo check of the uniform [-1, 1] choice.
  const HiddenLayer big = init_hidden(1000, 100, Activation::sigmoid, 5);
  CHECK(std::abs(big.weights.mean()) < 0.01);
  CHECK(big.weights.maxCoeff() <= 1.0);
  CHECK(big.weights.minCoeff() >= -1.0);
}

TEST_CASE("hidden_matrix values") {
  HiddenLayer layer = init_hidden(2, 3, Activation::sigmoid, 1);
  layer.weights.setZero();
  layer.biases.setZero();
  Matrix X(4, 2);
  X.setRandom();
  const Matrix H = hidden_matrix(layer, X);
  CHECK((H.array() == 0.5).all());

  // Single node scalar closed form.
  HiddenLayer one = init_hidden(2, 1, Activation::sigmoid, 2);
  Matrix x(1, 2);
  x << 0.3, -0.7;
  const double z = one.weights.row(0).dot(x.row(0)) + one.biases[0];
  CHECK(hidden_matrix(one, x)(0, 0) ==
        doctest::Approx(1.0 / (1.0 + std::exp(-z))).epsilon(1e-14));

  // Sigmoid output is strictly inside (0, 1).
  const Matrix Hr = hidden_matrix(init_hidden(2, 8, Activation::sigmoid, 3), X);
  CHECK((Hr.array() > 0.0).all());
  CHECK((Hr.array() < 1.0).all());

  CHECK_THROWS_AS(hidden_matrix(layer, Matrix(2, 5)), std::invalid_argument);
}

TEST_CASE("train_ls identity, shrinkage, oracle") {
  Rng rng(4);
  Matrix t(6, 1);
  for (int i = 0; i < 6; ++i) t(i, 0) = rng.normal();
  const Matrix I6 = Matrix::Identity(6, 6);
  CHECK((train_ls(I6, t, 0.0).beta - t).cwiseAbs().maxCoeff() < 1e-12);

  Matrix H(50, 10), T(50, 1);
  for (int i = 0; i < 50; ++i) {
    T(i, 0) = rng.normal();
    for (int j = 0; j < 10; ++j) H(i, j) = rng.normal();
  }
  const Matrix oracle =
      (H.transpose() * H).inverse() * H.transpose() * T;
  CHECK((train_ls(H, T, 0.0).beta - oracle).cwiseAbs().maxCoeff() < 1e-8);

  double prev = train_ls(H, T, 1.0).beta.norm();
  for (double lambda : {10.0, 100.0}) {
    const double cur = train_ls(H, T, lambda).beta.norm();
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("train_kmpe reduces to least squares in the degenerate regime") {
  NoiseModel clean;
  clean.c = 0.0;
  clean.uniform_lo = 0.0;
  clean.uniform_hi = 0.0;
  const auto [train, test] = gen_sinc(100, 50, clean, 21);
  const HiddenLayer layer = init_hidden(1, 20, Activation::sigmoid, 21);
  const Matrix H = hidden_matrix(layer, train.X);
  const Matrix ls = train_ls(H, *train.targets, 0.0).beta;

  TrainConfig cfg;
  cfg.lambda_prime = 0.0;
  cfg.kernel = KernelParams(1e6, 2.0);
  const auto [w, trace] = train_kmpe(layer, train.X, *train.targets, cfg);
  CHECK((w.beta - ls).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("train_kmpe fixed-point residual and loss descent") {
  NoiseModel noise;  // defaults: c = 0.1, uniform [-1,1], outlier std 3
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    const auto [train, test] = gen_sinc(120, 20, noise, seed);
    const HiddenLayer layer = init_hidden(1, 30, Activation::sigmoid, seed);
    TrainConfig cfg;
    cfg.lambda_prime = 1e-5;
    cfg.kernel = KernelParams(1.0, 2.0);
    const auto [w, trace] = train_kmpe(layer, train.X, *train.targets, cfg);
    REQUIRE(trace.converged);

    // Recompute the fixed-point update from scratch.
    const Matrix H = hidden_matrix(layer, train.X);
    const Vector r = (*train.targets - H * w.beta).rowwise().norm();
    Vector lam(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      lam[i] = kmpe_weight(r[i], cfg.kernel);
    }
    const Matrix next = solve_regularized_weighted(
        H, DiagWeights{lam}, *train.targets, cfg.lambda_prime);
    CHECK((next - w.beta).cwiseAbs().maxCoeff() < 1e-6);

    // p <= 2 loss trace never increases.
    for (std::size_t k = 1; k < trace.loss.size(); ++k) {
      CHECK(trace.loss[k] <= trace.loss[k - 1] + 1e-10);
    }
  }
}

TEST_CASE("train_kmpe determinism") {
  NoiseModel noise;
  const auto [train, test] = gen_sinc(80, 10, noise, 9);
  const HiddenLayer layer = init_hidden(1, 25, Activation::sigmoid, 9);
  TrainConfig cfg;
  cfg.lambda_prime = 2e-6;
  cfg.kernel = KernelParams(0.8, 4.0);
  const auto [w1, t1] = train_kmpe(layer, train.X, *train.targets, cfg);
  const auto [w2, t2] = train_kmpe(layer, train.X, *train.targets, cfg);
  CHECK((w1.beta - w2.beta).cwiseAbs().maxCoeff() == 0.0);
  CHECK(t1.iterations_used == t2.iterations_used);
}

TEST_CASE("predict and classify") {
  const HiddenLayer layer = init_hidden(2, 6, Activation::tanh, 12);
  Matrix X(5, 2);
  X.setRandom();
  OutputWeights zero{Matrix::Zero(6, 3)};
  CHECK(predict(layer, zero, X).cwiseAbs().maxCoeff() == 0.0);

  // Ties break to the lowest class index.
  const std::vector<int> labels = classify(layer, zero, X);
  for (int l : labels) CHECK(l == 0);

  // Exact interpolation: N = L, full rank, lambda = 0 recovers targets.
  Rng rng(13);
  Matrix Xs(6, 2);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 2; ++j) Xs(i, j) = rng.uniform(-2.0, 2.0);
  Matrix T = Matrix::Zero(6, 3);
  for (int i = 0; i < 6; ++i) T(i, i % 3) = 1.0;
  const Matrix H = hidden_matrix(layer, Xs);
  const OutputWeights w = train_ls(H, T, 0.0);
  CHECK((predict(layer, w, Xs) - T).cwiseAbs().maxCoeff() < 1e-6);
  const std::vector<int> recovered = classify(layer, w, Xs);
  for (int i = 0; i < 6; ++i) CHECK(recovered[i] == i % 3);
}

TEST_CASE("model persistence round-trip is value-exact") {
  const HiddenLayer layer = init_hidden(3, 7, Activation::tanh, 77);
  Rng rng(78);
  Matrix beta(7, 2);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 2; ++j) beta(i, j) = rng.normal();
  const ElmModel model{layer, OutputWeights{beta}, KernelParams(0.8, 4.0)};

  std::stringstream ss;
  save_model(model, ss);
  const ElmModel back = load_model(ss);
  CHECK(back.layer.input_dim == 3);
  CHECK(back.layer.node_count == 7);
  CHECK(back.layer.activation == Activation::tanh);
  CHECK(back.layer.seed == 77);
  CHECK((back.layer.weights - layer.weights).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.layer.biases - layer.biases).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.output.beta - beta).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.kernel.sigma == 0.8);
  CHECK(back.kernel.p == 4.0);
}
