#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "kmpe/data.hpp"
#include "kmpe/elm.hpp"
#include "kmpe/pca.hpp"

namespace kmpe {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Task { sinc_bench, elm, pca_recon, cluster_eval, props };

// Flat key/value experiment description; `key = value` lines with '#'
// comments in the file form, scalar keys overridable from the command
// line.
struct ExperimentConfig {
  Task task = Task::props;
  std::map<std::string, std::string> values;

  static ExperimentConfig from_file(const std::string& path,
                                    const std::vector<std::string>& overrides);
  static ExperimentConfig from_string(const std::string& text,
                                      const std::vector<std::string>& overrides);

  std::string get_string(const std::string& key, const std::string& def) const;
  double get_double(const std::string& key, double def) const;
  int get_int(const std::string& key, int def) const;
  std::uint64_t get_seed() const;
};

struct TrialRow {
  int trial = 0;
  std::uint64_t seed = 0;
  double train_metric = 0.0;
  double test_metric = 0.0;
};

struct Series {
  std::string name;
  std::vector<TrialRow> trials;

  double mean_test() const;
  double std_test() const;
};

struct SincBenchOptions {
  int trials = 50;
  std::uint64_t seed = 1;
  int n_train = 200;
  int n_test = 200;
  NoiseModel noise;
  int elm_nodes = 20;
  int relm_nodes = 90;
  double relm_lambda = 5e-5;
  int kmpe_nodes = 90;
  TrainConfig kmpe_cfg;
};

struct SincBenchResult {
  Series elm;
  Series relm;
  Series elm_kmpe;
  TrainTrace last_trace;                  // ELM-KMPE, last trial
  std::vector<std::array<double, 3>> curve;  // x, y_true, y_pred; sorted by x
};

// One seeded trial per index (seed + trial); trials may run in parallel,
// capped by the KMPE_MAX_PARALLEL environment variable.
SincBenchResult run_sinc_bench(const SincBenchOptions& opt);

// Full CSV schemas for the report files, versioned. Throws ConfigError on
// an unknown version.
std::string report_format(int version);

// Executes the configured task, writing report CSVs into output_dir.
// Returns the process exit code (0 success, 3 divergence).
int run_experiment(const ExperimentConfig& cfg);

}  // namespace kmpe
