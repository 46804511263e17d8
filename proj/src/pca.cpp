#include "kmpe/pca.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

namespace kmpe {

Subspace fit_l2(const Matrix& X, int m) {
  const Eigen::Index d = X.rows();
  const Eigen::Index n = X.cols();
  if (m < 1 || m > std::min(d, n)) {
    throw std::invalid_argument("fit_l2: m out of range");
  }
  Subspace sub;
  sub.m = m;
  sub.mu = X.rowwise().mean();
  const Matrix Xc = X.colwise() - sub.mu;
  sub.W = weighted_scatter_eig_top(Xc, DiagWeights{Vector::Ones(n)}, m).vectors;
  return sub;
}

Matrix residuals(const Subspace& sub, const Matrix& X) {
  if (X.rows() != sub.W.rows()) {
    throw std::invalid_argument("residuals: dimension mismatch");
  }
  const Matrix Xc = X.colwise() - sub.mu;
  return Xc - sub.W * (sub.W.transpose() * Xc);
}

DiagWeights irls_weights(const Matrix& E, const KernelParams& params) {
  Vector w(E.cols());
  for (Eigen::Index i = 0; i < E.cols(); ++i) {
    w[i] = kmpe_weight(E.col(i).norm(), params);
  }
  return DiagWeights{w};
}

Vector weighted_mean(const Matrix& X, const DiagWeights& lam) {
  if (X.cols() != lam.entries.size()) {
    throw std::invalid_argument("weighted_mean: dimension mismatch");
  }
  const double total = lam.entries.sum();
  if (!(total > 0.0)) {
    throw std::runtime_error("weighted_mean: all weights are zero");
  }
  return (X * lam.entries) / total;
}

namespace {

double sample_stddev(const std::vector<double>& s) {
  const double n = static_cast<double>(s.size());
  double mean = 0.0;
  for (double v : s) mean += v;
  mean /= n;
  double acc = 0.0;
  for (double v : s) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / (n - 1.0));
}

// Linear-interpolation quantile on a sorted sequence.
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

double silverman_bandwidth(const Matrix& E) {
  const Eigen::Index n = E.cols();
  if (n < 2) {
    throw std::invalid_argument("silverman_bandwidth: need at least 2 columns");
  }
  std::vector<double> s(n);
  for (Eigen::Index i = 0; i < n; ++i) s[i] = E.col(i).squaredNorm();
  const double sigma_e = sample_stddev(s);
  std::sort(s.begin(), s.end());
  const double iqr = quantile(s, 0.75) - quantile(s, 0.25);
  const double sigma_sq = 1.06 * std::min(sigma_e, iqr / 1.354) *
                          std::pow(static_cast<double>(n), -0.2);
  return std::sqrt(std::max(sigma_sq, 1e-16));
}

namespace {

double kmpe_pca_objective(const Matrix& E, const KernelParams& params) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < E.cols(); ++i) {
    const double k = gaussian_kernel(E.col(i).norm(), params.sigma);
    acc += std::pow(1.0 - k, params.p / 2.0);
  }
  return acc / static_cast<double>(E.cols());
}

// Spectral norm of the step, after flipping the sign-ambiguous columns of
// the previous iterate to match the new one.
double aligned_step_norm(const Matrix& W_prev, const Matrix& W_next) {
  Matrix A = W_prev;
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    if (A.col(j).dot(W_next.col(j)) < 0.0) A.col(j) = -A.col(j);
  }
  return (A - W_next).jacobiSvd().singularValues()[0];
}

}  // namespace

std::pair<Subspace, TrainTrace> fit_kmpe(const Matrix& X,
                                         const PcaConfig& cfg) {
  const Eigen::Index d = X.rows();
  const Eigen::Index n = X.cols();
  if (cfg.m < 1 || cfg.m > std::min(d, n)) {
    throw std::invalid_argument("fit_kmpe: m out of range");
  }
  if (cfg.m_r != 0 && cfg.m_r < cfg.m) {
    throw std::invalid_argument("fit_kmpe: m_r must be >= m");
  }
  if (cfg.max_iter < 1 || !(cfg.tol > 0.0) || !(cfg.power > 0.0)) {
    throw std::invalid_argument("fit_kmpe: invalid config");
  }
  const int m_work = static_cast<int>(
      std::min<Eigen::Index>(cfg.m_r == 0 ? cfg.m : cfg.m_r, std::min(d, n)));

  Subspace sub = fit_l2(X, m_work);
  TrainTrace trace;
  for (int k = 1; k <= cfg.max_iter; ++k) {
    const Matrix E = residuals(sub, X);
    const double sigma = cfg.sigma ? *cfg.sigma : silverman_bandwidth(E);
    const KernelParams kernel(sigma, cfg.power);
    DiagWeights lam = irls_weights(E, kernel);
    if (!(lam.entries.sum() > 0.0)) {
      throw std::runtime_error("fit_kmpe: degenerate (all-zero) weights");
    }
    const Vector mu = weighted_mean(X, lam);
    const Matrix Xc = X.colwise() - mu;
    const Matrix W = weighted_scatter_eig_top(Xc, lam, m_work).vectors;

    const Subspace next{W, mu, m_work};
    const double objective = kmpe_pca_objective(residuals(next, X), kernel);
    if (!std::isfinite(objective)) {
      throw DivergenceError("fit_kmpe: non-finite objective at iteration " +
                                std::to_string(k),
                            k);
    }
    trace.loss.push_back(objective);
    trace.iterations_used = k;
    const double step = aligned_step_norm(sub.W, W);
    sub = next;
    if (step <= cfg.tol) {
      trace.converged = true;
      break;
    }
  }
  sub.W = sub.W.leftCols(cfg.m).eval();
  sub.m = cfg.m;
  return {sub, trace};
}

double avg_reconstruction_error(const Subspace& sub, const Matrix& X_clean,
                                const Matrix& X_train) {
  if (X_clean.rows() != X_train.rows() || X_clean.cols() != X_train.cols() ||
      X_clean.rows() != sub.W.rows()) {
    throw std::invalid_argument("avg_reconstruction_error: shape mismatch");
  }
  const Matrix proj =
      sub.W * (sub.W.transpose() * (X_train.colwise() - sub.mu));
  const Matrix diff = (X_clean.colwise() - sub.mu) - proj;
  return diff.colwise().norm().mean();
}

void save_subspace(const Subspace& sub, std::ostream& os) {
  os << "kmpe-subspace 1\n";
  os << sub.W.rows() << ' ' << sub.m << '\n' << std::hexfloat;
  for (Eigen::Index i = 0; i < sub.mu.size(); ++i) {
    os << sub.mu[i] << (i + 1 == sub.mu.size() ? '\n' : ' ');
  }
  for (Eigen::Index i = 0; i < sub.W.rows(); ++i) {
    for (Eigen::Index j = 0; j < sub.W.cols(); ++j) {
      os << sub.W(i, j) << (j + 1 == sub.W.cols() ? '\n' : ' ');
    }
  }
  os << std::defaultfloat;
}

Subspace load_subspace(std::istream& is) {
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != "kmpe-subspace" || version != 1) {
    throw std::runtime_error("subspace load: unrecognized header");
  }
  Eigen::Index d = 0;
  int m = 0;
  if (!(is >> d >> m) || d < 1 || m < 1 || m > d) {
    throw std::runtime_error("subspace load: bad dimensions");
  }
  Subspace sub;
  sub.m = m;
  sub.mu = Vector(d);
  sub.W = Matrix(d, m);
  auto read_value = [&is]() {
    std::string tok;
    if (!(is >> tok)) throw std::runtime_error("subspace load: truncated");
    return std::strtod(tok.c_str(), nullptr);
  };
  for (Eigen::Index i = 0; i < d; ++i) sub.mu[i] = read_value();
  for (Eigen::Index i = 0; i < d; ++i) {
    for (int j = 0; j < m; ++j) sub.W(i, j) = read_value();
  }
  return sub;
}

void save_subspace_file(const Subspace& sub, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  save_subspace(sub, os);
}

Subspace load_subspace_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return load_subspace(is);
}

}  // namespace kmpe
