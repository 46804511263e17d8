#pragma once

#include <cstdint>
#include <vector>

#include "kmpe/linalg.hpp"

namespace kmpe {

// Integer labels in [0, K); construction validates the range.
class LabelVector {
 public:
  explicit LabelVector(std::vector<int> labels);

  const std::vector<int>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  int operator[](std::size_t i) const { return labels_[i]; }
  int num_classes() const { return num_classes_; }

 private:
  std::vector<int> labels_;
  int num_classes_ = 0;
};

double rmse(const std::vector<double>& y, const std::vector<double>& yhat);

// Minimum-cost assignment on a square cost matrix; result[a] = b means
// row a is assigned to column b.
std::vector<int> hungarian_map(const Matrix& cost);

// Fraction of samples whose predicted label, after the optimal
// Kuhn-Munkres relabeling, equals the target label.
double clustering_accuracy(const LabelVector& pred, const LabelVector& target);

// I(p,t) / sqrt(H(p) H(t)) with natural-log entropies. If either labeling
// has zero entropy, returns 1 when the partitions are identical, else 0.
double nmi(const LabelVector& pred, const LabelVector& target);

// Lloyd's algorithm; X is n x q (row per sample). Centers initialize from
// k distinct seeded sample indices; an emptied cluster is reseeded to the
// farthest point.
LabelVector kmeans(const Matrix& X, int k, std::uint64_t seed,
                   int max_iter = 100);

}  // namespace kmpe
