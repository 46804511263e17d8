#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "kmpe/kmpe.hpp"
#include "kmpe/linalg.hpp"

namespace kmpe {

enum class Activation { sigmoid, tanh };

// Random SLFN front end: fixed hidden weights/biases, only the output
// weights are trained.
struct HiddenLayer {
  int input_dim = 0;
  int node_count = 0;
  Matrix weights;  // L x d
  Vector biases;   // L
  Activation activation = Activation::sigmoid;
  std::uint64_t seed = 0;
};

struct OutputWeights {
  Matrix beta;  // L x C
};

struct TrainConfig {
  double lambda_prime = 0.0;
  KernelParams kernel{1.0, 2.0};
  int max_iter = 100;
  double tol = 1e-6;
};

struct TrainTrace {
  std::vector<double> loss;  // objective per fixed-point iteration
  int iterations_used = 0;
  bool converged = false;
};

struct DivergenceError : std::runtime_error {
  DivergenceError(const std::string& what, int iteration_)
      : std::runtime_error(what), iteration(iteration_) {}
  int iteration;
};

// Hidden parameters drawn i.i.d. uniform on [-1, 1]; identical seed gives
// an identical layer.
HiddenLayer init_hidden(int input_dim, int node_count, Activation activation,
                        std::uint64_t seed);

// H[i][j] = f(w_j . x_i + b_j); X is N x d.
Matrix hidden_matrix(const HiddenLayer& layer, const Matrix& X);

// Ridge / least-squares output weights: beta = (H'H + lambda I)^-1 H'T.
// lambda = 0 is plain ELM, lambda > 0 is RELM.
OutputWeights train_ls(const Matrix& H, const Matrix& T, double lambda);

// Fixed-point training under the KMPE loss. beta starts at zero; each
// iteration recomputes residuals, the diagonal weights, and the
// regularized weighted solve, until the objective change drops below tol
// (at most max_iter iterations). Multi-output targets feed the kernel
// through the row-wise Euclidean residual.
std::pair<OutputWeights, TrainTrace> train_kmpe(const HiddenLayer& layer,
                                                const Matrix& X,
                                                const Matrix& T,
                                                const TrainConfig& cfg);

// The objective the trainer minimizes, with the ridge term expressed in
// terms of the user-facing lambda'.
double kmpe_objective(const Matrix& H, const Matrix& T, const Matrix& beta,
                      const TrainConfig& cfg);

Matrix predict(const HiddenLayer& layer, const OutputWeights& w,
               const Matrix& X);

// Per-row argmax of the network output; ties go to the lowest index.
std::vector<int> classify(const HiddenLayer& layer, const OutputWeights& w,
                          const Matrix& X);

// Value-exact text persistence of a trained model.
struct ElmModel {
  HiddenLayer layer;
  OutputWeights output;
  KernelParams kernel{1.0, 2.0};
};

void save_model(const ElmModel& model, std::ostream& os);
ElmModel load_model(std::istream& is);
void save_model_file(const ElmModel& model, const std::string& path);
ElmModel load_model_file(const std::string& path);

}  // namespace kmpe
