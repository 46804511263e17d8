#include "kmpe/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "kmpe/rng.hpp"

namespace kmpe {

namespace {

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

double draw_noise(Rng& rng, const NoiseModel& noise) {
  const bool outlier = rng.uniform() < noise.c;
  // Both component draws advance the stream so the sample count per point
  // is fixed regardless of the coin flip.
  double background = 0.0;
  switch (noise.background) {
    case BackgroundNoise::uniform:
      background = rng.uniform(noise.uniform_lo, noise.uniform_hi);
      break;
    case BackgroundNoise::sine_wave:
      background = std::sin(rng.uniform(0.0, 2.0 * 3.14159265358979323846));
      break;
  }
  const double impulse = noise.outlier_std * rng.normal();
  return outlier ? impulse : background;
}

}  // namespace

std::pair<Dataset, Dataset> gen_sinc(int n_train, int n_test,
                                     const NoiseModel& noise,
                                     std::uint64_t seed) {
  if (n_train < 1 || n_test < 1) {
    throw std::invalid_argument("gen_sinc: sample counts must be >= 1");
  }
  if (noise.c < 0.0 || noise.c > 1.0) {
    throw std::invalid_argument("gen_sinc: c must be in [0, 1]");
  }
  Rng rng(seed);
  Dataset train, test;
  train.X = Matrix(n_train, 1);
  train.targets = Matrix(n_train, 1);
  for (int i = 0; i < n_train; ++i) {
    const double x = rng.uniform(-10.0, 10.0);
    train.X(i, 0) = x;
    (*train.targets)(i, 0) = 8.0 * sinc(x) + draw_noise(rng, noise);
  }
  test.X = Matrix(n_test, 1);
  test.targets = Matrix(n_test, 1);
  for (int i = 0; i < n_test; ++i) {
    const double x = rng.uniform(-10.0, 10.0);
    test.X(i, 0) = x;
    (*test.targets)(i, 0) = 8.0 * sinc(x);
  }
  return {std::move(train), std::move(test)};
}

std::pair<Matrix, Matrix> gen_lowrank_corrupted(int d, int n, int r,
                                                double outlier_frac,
                                                CorruptionMode mode,
                                                std::uint64_t seed) {
  if (r < 1 || r > std::min(d, n)) {
    throw std::invalid_argument("gen_lowrank_corrupted: rank out of range");
  }
  if (outlier_frac < 0.0 || outlier_frac >= 1.0) {
    throw std::invalid_argument("gen_lowrank_corrupted: bad outlier fraction");
  }
  Rng rng(seed);
  Matrix U(d, r), V(r, n);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < r; ++j) U(i, j) = rng.normal();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < n; ++j) V(i, j) = rng.normal();
  Matrix clean = U * V;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < n; ++j) clean(i, j) += 0.01 * rng.normal();

  Matrix corrupted = clean;
  const int n_out = static_cast<int>(std::ceil(outlier_frac * n));
  const double lo = clean.minCoeff();
  const double hi = clean.maxCoeff();

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int j = 0; j < n_out; ++j) {
    const std::size_t pick = j + rng.index(static_cast<std::size_t>(n - j));
    std::swap(order[j], order[pick]);
  }
  for (int j = 0; j < n_out; ++j) {
    const int col = order[j];
    int start = 0;
    int len = d;
    if (mode == CorruptionMode::occlusion) {
      // Block length uniform in [0.25 d, 0.5 d], position uniform.
      const int min_len = std::max(1, static_cast<int>(0.25 * d));
      const int max_len = std::max(min_len, static_cast<int>(0.5 * d));
      len = min_len + static_cast<int>(
                          rng.index(static_cast<std::size_t>(max_len - min_len + 1)));
      start = static_cast<int>(rng.index(static_cast<std::size_t>(d - len + 1)));
    }
    for (int i = start; i < start + len; ++i) {
      corrupted(i, col) = rng.uniform() < 0.5 ? lo : hi;
    }
  }
  return {std::move(clean), std::move(corrupted)};
}

Dataset load_csv(const std::string& path, const std::set<int>& target_columns) {
  std::ifstream is(path);
  if (!is) throw CsvError("cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw CsvError(path + ": missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  auto split_fields = [](const std::string& s) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ls(s);
    while (std::getline(ls, field, ',')) out.push_back(field);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };

  const std::vector<std::string> header = split_fields(line);
  const int total_cols = static_cast<int>(header.size());
  for (int t : target_columns) {
    if (t < 0 || t >= total_cols) {
      throw CsvError(path + ": target column " + std::to_string(t) +
                     " out of range");
    }
  }

  Dataset ds;
  for (int c = 0; c < total_cols; ++c) {
    if (!target_columns.count(c)) ds.feature_names.push_back(header[c]);
  }

  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (static_cast<int>(fields.size()) != total_cols) {
      throw CsvError(path + ":" + std::to_string(line_no) +
                     ": expected " + std::to_string(total_cols) + " fields, got " +
                     std::to_string(fields.size()));
    }
    std::vector<double> row(total_cols);
    for (int c = 0; c < total_cols; ++c) {
      const char* begin = fields[c].c_str();
      char* end = nullptr;
      row[c] = std::strtod(begin, &end);
      if (end == begin || *end != '\0') {
        throw CsvError(path + ":" + std::to_string(line_no) +
                       ": non-numeric cell '" + fields[c] + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw CsvError(path + ": no data rows");

  const int n = static_cast<int>(rows.size());
  const int n_targets = static_cast<int>(target_columns.size());
  ds.X = Matrix(n, total_cols - n_targets);
  if (n_targets > 0) ds.targets = Matrix(n, n_targets);
  for (int i = 0; i < n; ++i) {
    int fx = 0, tx = 0;
    for (int c = 0; c < total_cols; ++c) {
      if (target_columns.count(c)) {
        (*ds.targets)(i, tx++) = rows[i][c];
      } else {
        ds.X(i, fx++) = rows[i][c];
      }
    }
  }
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw CsvError("cannot open " + path + " for writing");
  os.precision(17);
  const int d = static_cast<int>(ds.X.cols());
  const int n_targets = ds.targets ? static_cast<int>(ds.targets->cols()) : 0;
  for (int c = 0; c < d; ++c) {
    os << (c < static_cast<int>(ds.feature_names.size()) ? ds.feature_names[c]
                                                         : "f" + std::to_string(c));
    if (c + 1 < d || n_targets > 0) os << ',';
  }
  for (int t = 0; t < n_targets; ++t) {
    os << "target" << t;
    if (t + 1 < n_targets) os << ',';
  }
  os << '\n';
  for (Eigen::Index i = 0; i < ds.X.rows(); ++i) {
    for (int c = 0; c < d; ++c) {
      os << ds.X(i, c);
      if (c + 1 < d || n_targets > 0) os << ',';
    }
    for (int t = 0; t < n_targets; ++t) {
      os << (*ds.targets)(i, t);
      if (t + 1 < n_targets) os << ',';
    }
    os << '\n';
  }
}

std::pair<Dataset, NormParams> normalize01(const Dataset& ds) {
  NormParams params;
  params.min = ds.X.colwise().minCoeff();
  params.max = ds.X.colwise().maxCoeff();
  return {apply_normalization(ds, params), params};
}

Dataset apply_normalization(const Dataset& ds, const NormParams& params) {
  Dataset out = ds;
  for (Eigen::Index c = 0; c < ds.X.cols(); ++c) {
    const double range = params.max[c] - params.min[c];
    if (range > 0.0) {
      out.X.col(c) = (ds.X.col(c).array() - params.min[c]) / range;
    } else {
      out.X.col(c).setZero();  // constant column convention
    }
  }
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_frac,
                                  std::uint64_t seed) {
  if (!(train_frac > 0.0) || !(train_frac < 1.0)) {
    throw std::invalid_argument("split: train_frac must be in (0, 1)");
  }
  const int n = static_cast<int>(ds.X.rows());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (int j = 0; j + 1 < n; ++j) {
    const std::size_t pick = j + rng.index(static_cast<std::size_t>(n - j));
    std::swap(order[j], order[pick]);
  }
  const int n_train = std::clamp(static_cast<int>(std::round(train_frac * n)),
                                 1, n - 1);
  auto take = [&](int begin, int count) {
    Dataset part;
    part.feature_names = ds.feature_names;
    part.X = Matrix(count, ds.X.cols());
    if (ds.targets) part.targets = Matrix(count, ds.targets->cols());
    for (int i = 0; i < count; ++i) {
      part.X.row(i) = ds.X.row(order[begin + i]);
      if (ds.targets) part.targets->row(i) = ds.targets->row(order[begin + i]);
    }
    return part;
  };
  return {take(0, n_train), take(n_train, n - n_train)};
}

}  // namespace kmpe
