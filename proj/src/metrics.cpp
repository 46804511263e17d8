#include "kmpe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kmpe/rng.hpp"

namespace kmpe {

LabelVector::LabelVector(std::vector<int> labels)
    : labels_(std::move(labels)) {
  if (labels_.empty()) {
    throw std::invalid_argument("LabelVector: empty");
  }
  for (int l : labels_) {
    if (l < 0) throw std::invalid_argument("LabelVector: negative label");
    num_classes_ = std::max(num_classes_, l + 1);
  }
}

double rmse(const std::vector<double>& y, const std::vector<double>& yhat) {
  if (y.empty() || y.size() != yhat.size()) {
    throw std::invalid_argument("rmse: length mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - yhat[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(y.size()));
}

// Kuhn-Munkres with row/column potentials, O(K^3).
std::vector<int> hungarian_map(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n || n < 1) {
    throw std::invalid_argument("hungarian_map: matrix must be square");
  }
  if (!cost.allFinite()) {
    throw std::invalid_argument("hungarian_map: non-finite cost");
  }
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> result(n, -1);
  for (int j = 1; j <= n; ++j) {
    result[match[j] - 1] = j - 1;
  }
  return result;
}

namespace {

// Contingency counts padded to a square K x K table.
Matrix contingency(const LabelVector& pred, const LabelVector& target) {
  const int k = std::max(pred.num_classes(), target.num_classes());
  Matrix counts = Matrix::Zero(k, k);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    counts(pred[i], target[i]) += 1.0;
  }
  return counts;
}

}  // namespace

double clustering_accuracy(const LabelVector& pred,
                           const LabelVector& target) {
  if (pred.size() != target.size()) {
    throw std::invalid_argument("clustering_accuracy: length mismatch");
  }
  const Matrix counts = contingency(pred, target);
  const std::vector<int> map = hungarian_map(-counts);
  double hits = 0.0;
  for (int a = 0; a < counts.rows(); ++a) {
    hits += counts(a, map[a]);
  }
  return hits / static_cast<double>(pred.size());
}

double nmi(const LabelVector& pred, const LabelVector& target) {
  if (pred.size() != target.size()) {
    throw std::invalid_argument("nmi: length mismatch");
  }
  const Matrix counts = contingency(pred, target);
  const double n = static_cast<double>(pred.size());
  const Vector row = counts.rowwise().sum();
  const Vector col = counts.colwise().sum();

  auto entropy = [&n](const Vector& marginal) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < marginal.size(); ++i) {
      if (marginal[i] > 0.0) {
        const double q = marginal[i] / n;
        h -= q * std::log(q);
      }
    }
    return h;
  };
  const double hp = entropy(row);
  const double ht = entropy(col);
  if (hp == 0.0 || ht == 0.0) {
    // Single-cluster degenerate case: 1 iff the partitions coincide,
    // i.e. the contingency table is a (partial) permutation matrix.
    for (Eigen::Index a = 0; a < counts.rows(); ++a) {
      if ((counts.row(a).array() > 0.0).count() > 1) return 0.0;
      if ((counts.col(a).array() > 0.0).count() > 1) return 0.0;
    }
    return 1.0;
  }
  double mi = 0.0;
  for (Eigen::Index a = 0; a < counts.rows(); ++a) {
    for (Eigen::Index b = 0; b < counts.cols(); ++b) {
      if (counts(a, b) > 0.0) {
        const double pj = counts(a, b) / n;
        mi += pj * std::log(n * counts(a, b) / (row[a] * col[b]));
      }
    }
  }
  return mi / std::sqrt(hp * ht);
}

LabelVector kmeans(const Matrix& X, int k, std::uint64_t seed, int max_iter) {
  const Eigen::Index n = X.rows();
  if (k < 1 || k > n) {
    throw std::invalid_argument("kmeans: k must be in [1, n]");
  }
  Rng rng(seed);

  // k distinct sample indices by partial Fisher-Yates.
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  for (int j = 0; j < k; ++j) {
    const std::size_t pick = j + rng.index(static_cast<std::size_t>(n - j));
    std::swap(order[j], order[pick]);
  }
  Matrix centers(k, X.cols());
  for (int j = 0; j < k; ++j) centers.row(j) = X.row(order[j]);

  std::vector<int> assign(n, -1);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (X.row(i) - centers.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (X.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed && it > 0) break;

    Matrix sums = Matrix::Zero(k, X.cols());
    std::vector<int> sizes(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign[i]) += X.row(i);
      ++sizes[assign[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (sizes[c] > 0) {
        centers.row(c) = sums.row(c) / sizes[c];
      } else {
        // Reseed an emptied cluster to the point farthest from its center.
        Eigen::Index far = 0;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double d = (X.row(i) - centers.row(assign[i])).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centers.row(c) = X.row(far);
        assign[far] = c;
      }
    }
  }
  return LabelVector(assign);
}

}  // namespace kmpe
