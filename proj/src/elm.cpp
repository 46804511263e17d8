#include "kmpe/elm.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "kmpe/rng.hpp"

namespace kmpe {

HiddenLayer init_hidden(int input_dim, int node_count, Activation activation,
                        std::uint64_t seed) {
  if (input_dim < 1 || node_count < 1) {
    throw std::invalid_argument("init_hidden: dimensions must be >= 1");
  }
  Rng rng(seed);
  HiddenLayer layer;
  layer.input_dim = input_dim;
  layer.node_count = node_count;
  layer.activation = activation;
  layer.seed = seed;
  layer.weights = Matrix(node_count, input_dim);
  layer.biases = Vector(node_count);
  for (int j = 0; j < node_count; ++j) {
    for (int k = 0; k < input_dim; ++k) {
      layer.weights(j, k) = rng.uniform(-1.0, 1.0);
    }
    layer.biases[j] = rng.uniform(-1.0, 1.0);
  }
  return layer;
}

namespace {

double activate(double z, Activation a) {
  switch (a) {
    case Activation::sigmoid:
      return 1.0 / (1.0 + std::exp(-z));
    case Activation::tanh:
      return std::tanh(z);
  }
  throw std::logic_error("activate: unknown activation");
}

// Row-wise Euclidean residual ||t_i - h_i beta||; for C = 1 this is the
// plain absolute error.
Vector row_residuals(const Matrix& H, const Matrix& T, const Matrix& beta) {
  return (T - H * beta).rowwise().norm();
}

}  // namespace

Matrix hidden_matrix(const HiddenLayer& layer, const Matrix& X) {
  if (X.cols() != layer.input_dim) {
    throw std::invalid_argument("hidden_matrix: input dimension mismatch");
  }
  Matrix H = X * layer.weights.transpose();
  H.rowwise() += layer.biases.transpose();
  for (Eigen::Index i = 0; i < H.rows(); ++i) {
    for (Eigen::Index j = 0; j < H.cols(); ++j) {
      H(i, j) = activate(H(i, j), layer.activation);
    }
  }
  return H;
}

OutputWeights train_ls(const Matrix& H, const Matrix& T, double lambda) {
  if (H.rows() != T.rows()) {
    throw std::invalid_argument("train_ls: dimension mismatch");
  }
  DiagWeights unit{Vector::Ones(H.rows())};
  return OutputWeights{solve_regularized_weighted(H, unit, T, lambda)};
}

double kmpe_objective(const Matrix& H, const Matrix& T, const Matrix& beta,
                      const TrainConfig& cfg) {
  const Vector r = row_residuals(H, T, beta);
  const double n = static_cast<double>(H.rows());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    acc += std::pow(1.0 - gaussian_kernel(r[i], cfg.kernel.sigma),
                    cfg.kernel.p / 2.0);
  }
  const double ridge = cfg.kernel.p /
                       (4.0 * cfg.kernel.sigma * cfg.kernel.sigma * n) *
                       cfg.lambda_prime * beta.squaredNorm();
  return acc / n + ridge;
}

std::pair<OutputWeights, TrainTrace> train_kmpe(const HiddenLayer& layer,
                                                const Matrix& X,
                                                const Matrix& T,
                                                const TrainConfig& cfg) {
  if (cfg.max_iter < 1 || !(cfg.tol > 0.0)) {
    throw std::invalid_argument("train_kmpe: invalid config");
  }
  const Matrix H = hidden_matrix(layer, X);
  if (H.rows() != T.rows()) {
    throw std::invalid_argument("train_kmpe: dimension mismatch");
  }

  auto update = [&](const Matrix& beta) {
    const Vector r = row_residuals(H, T, beta);
    Vector w(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      w[i] = kmpe_weight(r[i], cfg.kernel);
    }
    return solve_regularized_weighted(H, DiagWeights{w}, T, cfg.lambda_prime);
  };

  Matrix beta = Matrix::Zero(H.cols(), T.cols());
  double prev_loss = kmpe_objective(H, T, beta, cfg);
  TrainTrace trace;
  for (int k = 1; k <= cfg.max_iter; ++k) {
    const Matrix next = update(beta);
    const double loss = kmpe_objective(H, T, next, cfg);
    if (!std::isfinite(loss)) {
      throw DivergenceError("train_kmpe: non-finite loss at iteration " +
                                std::to_string(k),
                            k);
    }
    trace.loss.push_back(loss);
    trace.iterations_used = k;
    const bool loss_settled = std::abs(loss - prev_loss) < cfg.tol;
    beta = next;
    prev_loss = loss;
    if (loss_settled) {
      // The objective has settled; declare convergence only once beta is
      // a fixed point of the update to within 1e-6.
      const Matrix verify = update(beta);
      if ((verify - beta).cwiseAbs().maxCoeff() < 1e-6) {
        trace.converged = true;
        break;
      }
    }
  }
  return {OutputWeights{beta}, trace};
}

Matrix predict(const HiddenLayer& layer, const OutputWeights& w,
               const Matrix& X) {
  return hidden_matrix(layer, X) * w.beta;
}

std::vector<int> classify(const HiddenLayer& layer, const OutputWeights& w,
                          const Matrix& X) {
  const Matrix Y = predict(layer, w, X);
  std::vector<int> labels(Y.rows());
  for (Eigen::Index i = 0; i < Y.rows(); ++i) {
    int arg = 0;
    for (Eigen::Index c = 1; c < Y.cols(); ++c) {
      if (Y(i, c) > Y(i, arg)) arg = static_cast<int>(c);
    }
    labels[i] = arg;
  }
  return labels;
}

namespace {

void write_matrix(std::ostream& os, const Matrix& m) {
  os << m.rows() << ' ' << m.cols() << '\n';
  os << std::hexfloat;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      os << m(i, j) << (j + 1 == m.cols() ? '\n' : ' ');
    }
  }
  os << std::defaultfloat;
}

Matrix read_matrix(std::istream& is) {
  Eigen::Index rows = 0, cols = 0;
  if (!(is >> rows >> cols) || rows < 0 || cols < 0) {
    throw std::runtime_error("model load: bad matrix header");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      std::string tok;
      if (!(is >> tok)) throw std::runtime_error("model load: truncated matrix");
      m(i, j) = std::strtod(tok.c_str(), nullptr);
    }
  }
  return m;
}

}  // namespace

void save_model(const ElmModel& model, std::ostream& os) {
  os << "elm-kmpe-model 1\n";
  os << model.layer.input_dim << ' ' << model.layer.node_count << ' '
     << (model.layer.activation == Activation::sigmoid ? "sigmoid" : "tanh")
     << ' ' << model.layer.seed << '\n';
  os << std::hexfloat << model.kernel.sigma << ' ' << model.kernel.p
     << std::defaultfloat << '\n';
  write_matrix(os, model.layer.weights);
  os << model.layer.biases.size() << '\n' << std::hexfloat;
  for (Eigen::Index i = 0; i < model.layer.biases.size(); ++i) {
    os << model.layer.biases[i] << (i + 1 == model.layer.biases.size() ? '\n' : ' ');
  }
  os << std::defaultfloat;
  write_matrix(os, model.output.beta);
}

ElmModel load_model(std::istream& is) {
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != "elm-kmpe-model" || version != 1) {
    throw std::runtime_error("model load: unrecognized header");
  }
  ElmModel model;
  std::string act;
  if (!(is >> model.layer.input_dim >> model.layer.node_count >> act >>
        model.layer.seed)) {
    throw std::runtime_error("model load: bad layer header");
  }
  if (act == "sigmoid") {
    model.layer.activation = Activation::sigmoid;
  } else if (act == "tanh") {
    model.layer.activation = Activation::tanh;
  } else {
    throw std::runtime_error("model load: unknown activation '" + act + "'");
  }
  std::string sig, pow_;
  if (!(is >> sig >> pow_)) throw std::runtime_error("model load: bad kernel");
  model.kernel = KernelParams(std::strtod(sig.c_str(), nullptr),
                              std::strtod(pow_.c_str(), nullptr));
  model.layer.weights = read_matrix(is);
  Eigen::Index nb = 0;
  if (!(is >> nb)) throw std::runtime_error("model load: bad bias count");
  model.layer.biases = Vector(nb);
  for (Eigen::Index i = 0; i < nb; ++i) {
    std::string tok;
    if (!(is >> tok)) throw std::runtime_error("model load: truncated biases");
    model.layer.biases[i] = std::strtod(tok.c_str(), nullptr);
  }
  model.output.beta = read_matrix(is);
  return model;
}

void save_model_file(const ElmModel& model, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  save_model(model, os);
}

ElmModel load_model_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return load_model(is);
}

}  // namespace kmpe
