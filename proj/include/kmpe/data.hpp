#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "kmpe/linalg.hpp"

namespace kmpe {

enum class BackgroundNoise { uniform, sine_wave };

// Mixture noise v = (1-a) A + a B with a ~ Bernoulli(c) and
// B ~ N(0, outlier_std^2).
struct NoiseModel {
  double c = 0.1;
  BackgroundNoise background = BackgroundNoise::uniform;
  double uniform_lo = -1.0;
  double uniform_hi = 1.0;
  double outlier_std = 3.0;
};

struct Dataset {
  Matrix X;                               // n x d
  std::optional<Matrix> targets;          // n x C
  std::vector<std::string> feature_names;  // optional, d entries when set
};

// 8 sinc(x) with x ~ U[-10, 10]; training targets carry the mixture
// noise, test targets are noise-free.
std::pair<Dataset, Dataset> gen_sinc(int n_train, int n_test,
                                     const NoiseModel& noise,
                                     std::uint64_t seed);

enum class CorruptionMode { occlusion, dummy };

// Low-rank data (column per sample) with a fraction of gross-outlier
// columns. Occlusion overwrites a contiguous coordinate block of each
// selected column, dummy overwrites the whole column; overwritten values
// are drawn per entry from the two extremes of the clean data range.
std::pair<Matrix, Matrix> gen_lowrank_corrupted(int d, int n, int r,
                                                double outlier_frac,
                                                CorruptionMode mode,
                                                std::uint64_t seed);

struct CsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Dataset load_csv(const std::string& path, const std::set<int>& target_columns);
void save_csv(const Dataset& ds, const std::string& path);

// Per-feature affine map to [0, 1] fitted on one dataset and applicable
// to another (test data transforms with training statistics).
struct NormParams {
  Vector min;
  Vector max;
};

std::pair<Dataset, NormParams> normalize01(const Dataset& ds);
Dataset apply_normalization(const Dataset& ds, const NormParams& params);

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_frac,
                                  std::uint64_t seed);

}  // namespace kmpe
