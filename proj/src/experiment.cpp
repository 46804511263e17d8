#include "kmpe/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include "kmpe/metrics.hpp"
#include "kmpe/rng.hpp"

namespace kmpe {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

Task parse_task(const std::string& name) {
  if (name == "sinc_bench") return Task::sinc_bench;
  if (name == "elm") return Task::elm;
  if (name == "pca_recon") return Task::pca_recon;
  if (name == "cluster_eval") return Task::cluster_eval;
  if (name == "props") return Task::props;
  throw ConfigError("unknown task '" + name + "'");
}

void apply_line(std::map<std::string, std::string>& kv, const std::string& raw,
                const std::string& where) {
  std::string line = raw;
  const auto hash = line.find('#');
  if (hash != std::string::npos) line.erase(hash);
  line = trim(line);
  if (line.empty()) return;
  const auto eq = line.find('=');
  if (eq == std::string::npos) {
    throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
  }
  const std::string key = trim(line.substr(0, eq));
  const std::string value = trim(line.substr(eq + 1));
  if (key.empty()) throw ConfigError(where + ": empty key");
  kv[key] = value;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_string(
    const std::string& text, const std::vector<std::string>& overrides) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    apply_line(cfg.values, line, "config line " + std::to_string(line_no));
  }
  for (const std::string& o : overrides) {
    apply_line(cfg.values, o, "override '" + o + "'");
  }
  const auto it = cfg.values.find("task");
  if (it == cfg.values.end()) throw ConfigError("config is missing 'task'");
  cfg.task = parse_task(it->second);
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(
    const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return from_string(buf.str(), overrides);
}

std::string ExperimentConfig::get_string(const std::string& key,
                                         const std::string& def) const {
  const auto it = values.find(key);
  return it == values.end() ? def : it->second;
}

double ExperimentConfig::get_double(const std::string& key, double def) const {
  const auto it = values.find(key);
  if (it == values.end()) return def;
  const char* begin = it->second.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw ConfigError("key '" + key + "': expected number, got '" + it->second + "'");
  }
  return v;
}

int ExperimentConfig::get_int(const std::string& key, int def) const {
  const double v = get_double(key, static_cast<double>(def));
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) {
    throw ConfigError("key '" + key + "': expected integer");
  }
  return i;
}

std::uint64_t ExperimentConfig::get_seed() const {
  return static_cast<std::uint64_t>(get_int("seed", 1));
}

double Series::mean_test() const {
  double acc = 0.0;
  for (const TrialRow& t : trials) acc += t.test_metric;
  return acc / static_cast<double>(trials.size());
}

double Series::std_test() const {
  if (trials.size() < 2) return 0.0;
  const double m = mean_test();
  double acc = 0.0;
  for (const TrialRow& t : trials) {
    acc += (t.test_metric - m) * (t.test_metric - m);
  }
  return std::sqrt(acc / static_cast<double>(trials.size() - 1));
}

namespace {

int parallel_cap() {
  int cap = static_cast<int>(std::thread::hardware_concurrency());
  if (cap < 1) cap = 1;
  if (const char* env = std::getenv("KMPE_MAX_PARALLEL")) {
    const int v = std::atoi(env);
    if (v >= 1) cap = v;
  }
  return cap;
}

// Runs fn(0..trials-1) on up to parallel_cap() threads. Results land in
// trial-indexed storage inside fn, so output order is deterministic.
void parallel_trials(int trials, const std::function<void(int)>& fn) {
  auto run_one = [&fn](int t) {
    try {
      fn(t);
    } catch (const DivergenceError& e) {
      throw DivergenceError("trial " + std::to_string(t) + ": " + e.what(),
                            e.iteration);
    }
  };
  const int workers = std::min(parallel_cap(), trials);
  if (workers <= 1) {
    for (int t = 0; t < trials; ++t) run_one(t);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(trials);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int t = next.fetch_add(1); t < trials; t = next.fetch_add(1)) {
        try {
          run_one(t);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      }
    });
  }
  for (std::thread& th : pool) th.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<double> to_std(const Vector& v) {
  return {v.data(), v.data() + v.size()};
}

double column_rmse(const Matrix& a, const Matrix& b) {
  return rmse(to_std(a.col(0)), to_std(b.col(0)));
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_summary(const std::string& path, const Series& s) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << "trial,seed,train_metric,test_metric\n";
  for (const TrialRow& t : s.trials) {
    os << t.trial << ',' << t.seed << ',' << fmt(t.train_metric) << ','
       << fmt(t.test_metric) << '\n';
  }
  double train_mean = 0.0;
  for (const TrialRow& t : s.trials) train_mean += t.train_metric;
  train_mean /= static_cast<double>(s.trials.size());
  double train_var = 0.0;
  for (const TrialRow& t : s.trials) {
    train_var += (t.train_metric - train_mean) * (t.train_metric - train_mean);
  }
  const double train_std =
      s.trials.size() < 2 ? 0.0
                          : std::sqrt(train_var / (s.trials.size() - 1.0));
  os << "mean,," << fmt(train_mean) << ',' << fmt(s.mean_test()) << '\n';
  os << "std,," << fmt(train_std) << ',' << fmt(s.std_test()) << '\n';
}

void write_trace(const std::string& path, const TrainTrace& trace) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << "iteration,loss\n";
  for (std::size_t i = 0; i < trace.loss.size(); ++i) {
    os << (i + 1) << ',' << fmt(trace.loss[i]) << '\n';
  }
}

void write_curve(const std::string& path,
                 const std::vector<std::array<double, 3>>& curve) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << "x,y_true,y_pred\n";
  for (const auto& row : curve) {
    os << fmt(row[0]) << ',' << fmt(row[1]) << ',' << fmt(row[2]) << '\n';
  }
}

NoiseModel noise_from_config(const ExperimentConfig& cfg) {
  NoiseModel noise;
  noise.c = cfg.get_double("noise_c", 0.1);
  const std::string bg = cfg.get_string("noise_background", "uniform");
  if (bg == "uniform") {
    noise.background = BackgroundNoise::uniform;
  } else if (bg == "sine_wave") {
    noise.background = BackgroundNoise::sine_wave;
  } else {
    throw ConfigError("noise_background must be 'uniform' or 'sine_wave'");
  }
  noise.uniform_lo = cfg.get_double("noise_lo", -1.0);
  noise.uniform_hi = cfg.get_double("noise_hi", 1.0);
  noise.outlier_std = cfg.get_double("noise_outlier_std", 3.0);
  return noise;
}

}  // namespace

SincBenchResult run_sinc_bench(const SincBenchOptions& opt) {
  SincBenchResult result;
  result.elm.name = "elm";
  result.relm.name = "relm";
  result.elm_kmpe.name = "elm_kmpe";
  result.elm.trials.resize(opt.trials);
  result.relm.trials.resize(opt.trials);
  result.elm_kmpe.trials.resize(opt.trials);

  parallel_trials(opt.trials, [&](int t) {
    const std::uint64_t seed = opt.seed + static_cast<std::uint64_t>(t);
    const auto [train, test] = gen_sinc(opt.n_train, opt.n_test, opt.noise, seed);
    const Matrix& T = *train.targets;

    auto eval = [&](const HiddenLayer& layer, const OutputWeights& w) {
      const double train_m = column_rmse(T, predict(layer, w, train.X));
      const double test_m =
          column_rmse(*test.targets, predict(layer, w, test.X));
      return TrialRow{t, seed, train_m, test_m};
    };

    const HiddenLayer elm_layer =
        init_hidden(1, opt.elm_nodes, Activation::sigmoid, seed);
    result.elm.trials[t] =
        eval(elm_layer, train_ls(hidden_matrix(elm_layer, train.X), T, 0.0));

    const HiddenLayer relm_layer =
        init_hidden(1, opt.relm_nodes, Activation::sigmoid, seed);
    result.relm.trials[t] = eval(
        relm_layer,
        train_ls(hidden_matrix(relm_layer, train.X), T, opt.relm_lambda));

    const HiddenLayer kmpe_layer =
        init_hidden(1, opt.kmpe_nodes, Activation::sigmoid, seed);
    auto [w, trace] = train_kmpe(kmpe_layer, train.X, T, opt.kmpe_cfg);
    result.elm_kmpe.trials[t] = eval(kmpe_layer, w);

    if (t == opt.trials - 1) {
      result.last_trace = trace;
      const Matrix pred = predict(kmpe_layer, w, test.X);
      result.curve.resize(test.X.rows());
      for (Eigen::Index i = 0; i < test.X.rows(); ++i) {
        result.curve[i] = {test.X(i, 0), (*test.targets)(i, 0), pred(i, 0)};
      }
      std::sort(result.curve.begin(), result.curve.end(),
                [](const auto& a, const auto& b) { return a[0] < b[0]; });
    }
  });
  return result;
}

std::string report_format(int version) {
  if (version != 1) {
    throw ConfigError("unknown report schema version " + std::to_string(version));
  }
  return "schema version 1\n"
         "summary.csv: trial,seed,train_metric,test_metric\n"
         "trace.csv: iteration,loss\n"
         "curve.csv: x,y_true,y_pred\n"
         "compare.csv: algorithm,mean_test_metric,std_test_metric\n"
         "props.csv: property,lhs,rhs,error,tol,pass\n";
}

namespace {

TrainConfig train_config_from(const ExperimentConfig& cfg) {
  TrainConfig tc;
  tc.lambda_prime = cfg.get_double("lambda_prime", 0.0);
  tc.kernel = KernelParams(cfg.get_double("sigma", 1.0), cfg.get_double("p", 2.0));
  tc.max_iter = cfg.get_int("max_iter", 100);
  tc.tol = cfg.get_double("tol", 1e-6);
  return tc;
}

int run_sinc_task(const ExperimentConfig& cfg,
                  const std::filesystem::path& out) {
  SincBenchOptions opt;
  opt.trials = cfg.get_int("trials", 50);
  opt.seed = cfg.get_seed();
  opt.n_train = cfg.get_int("n_train", 200);
  opt.n_test = cfg.get_int("n_test", 200);
  opt.noise = noise_from_config(cfg);
  opt.elm_nodes = cfg.get_int("elm_nodes", 20);
  opt.relm_nodes = cfg.get_int("relm_nodes", 90);
  opt.relm_lambda = cfg.get_double("relm_lambda", 5e-5);
  opt.kmpe_nodes = cfg.get_int("kmpe_nodes", 90);
  opt.kmpe_cfg = train_config_from(cfg);

  const SincBenchResult result = run_sinc_bench(opt);
  write_summary((out / "summary.csv").string(), result.elm_kmpe);
  write_summary((out / "summary_elm.csv").string(), result.elm);
  write_summary((out / "summary_relm.csv").string(), result.relm);
  write_trace((out / "trace.csv").string(), result.last_trace);
  write_curve((out / "curve.csv").string(), result.curve);

  std::ofstream os(out / "compare.csv");
  os << "algorithm,mean_test_metric,std_test_metric\n";
  for (const Series* s : {&result.elm, &result.relm, &result.elm_kmpe}) {
    os << s->name << ',' << fmt(s->mean_test()) << ',' << fmt(s->std_test())
       << '\n';
    std::cout << s->name << ": mean test RMSE " << fmt(s->mean_test())
              << " +- " << fmt(s->std_test()) << '\n';
  }
  return 0;
}

int run_elm_task(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  const int trials = cfg.get_int("trials", 10);
  const std::uint64_t seed = cfg.get_seed();
  const int nodes = cfg.get_int("nodes", 90);
  const std::string algorithm = cfg.get_string("algorithm", "kmpe");
  const NoiseModel noise = noise_from_config(cfg);
  const TrainConfig tc = train_config_from(cfg);
  const int n_train = cfg.get_int("n_train", 200);
  const int n_test = cfg.get_int("n_test", 200);

  Series series;
  series.name = algorithm;
  series.trials.resize(trials);
  TrainTrace last_trace;
  parallel_trials(trials, [&](int t) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(t);
    const auto [train, test] = gen_sinc(n_train, n_test, noise, s);
    const HiddenLayer layer = init_hidden(1, nodes, Activation::sigmoid, s);
    OutputWeights w;
    TrainTrace trace;
    if (algorithm == "kmpe") {
      std::tie(w, trace) = train_kmpe(layer, train.X, *train.targets, tc);
    } else if (algorithm == "ls") {
      w = train_ls(hidden_matrix(layer, train.X), *train.targets,
                   cfg.get_double("ls_lambda", 0.0));
    } else {
      throw ConfigError("elm task: algorithm must be 'kmpe' or 'ls'");
    }
    series.trials[t] = {
        t, s, column_rmse(*train.targets, predict(layer, w, train.X)),
        column_rmse(*test.targets, predict(layer, w, test.X))};
    if (t == trials - 1) last_trace = trace;
  });
  write_summary((out / "summary.csv").string(), series);
  write_trace((out / "trace.csv").string(), last_trace);
  std::cout << series.name << ": mean test RMSE " << fmt(series.mean_test())
            << " +- " << fmt(series.std_test()) << '\n';
  return 0;
}

int run_pca_task(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  const int trials = cfg.get_int("trials", 20);
  const std::uint64_t seed = cfg.get_seed();
  const int d = cfg.get_int("d", 20);
  const int n = cfg.get_int("n", 200);
  const int rank = cfg.get_int("rank", 3);
  const double frac = cfg.get_double("outlier_frac", 0.2);
  const std::string mode_s = cfg.get_string("mode", "occlusion");
  const std::string algorithm = cfg.get_string("algorithm", "kmpe");
  CorruptionMode mode;
  if (mode_s == "occlusion") {
    mode = CorruptionMode::occlusion;
  } else if (mode_s == "dummy") {
    mode = CorruptionMode::dummy;
  } else {
    throw ConfigError("pca_recon: mode must be 'occlusion' or 'dummy'");
  }
  PcaConfig pc;
  pc.m = cfg.get_int("m", rank);
  pc.power = cfg.get_double("p", 2.0);
  if (cfg.values.count("sigma")) pc.sigma = cfg.get_double("sigma", 0.0);
  pc.max_iter = cfg.get_int("max_iter", 100);
  pc.tol = cfg.get_double("tol", 1e-6);
  pc.m_r = cfg.get_int("m_r", 0);

  Series series;
  series.name = algorithm;
  series.trials.resize(trials);
  TrainTrace last_trace;
  parallel_trials(trials, [&](int t) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(t);
    const auto [clean, corrupted] =
        gen_lowrank_corrupted(d, n, rank, frac, mode, s);
    Subspace sub;
    TrainTrace trace;
    if (algorithm == "kmpe") {
      std::tie(sub, trace) = fit_kmpe(corrupted, pc);
    } else if (algorithm == "l2") {
      sub = fit_l2(corrupted, pc.m);
    } else {
      throw ConfigError("pca_recon: algorithm must be 'kmpe' or 'l2'");
    }
    series.trials[t] = {t, s,
                        avg_reconstruction_error(sub, corrupted, corrupted),
                        avg_reconstruction_error(sub, clean, corrupted)};
    if (t == trials - 1) last_trace = trace;
  });
  write_summary((out / "summary.csv").string(), series);
  write_trace((out / "trace.csv").string(), last_trace);
  std::cout << series.name << ": mean reconstruction error "
            << fmt(series.mean_test()) << " +- " << fmt(series.std_test())
            << '\n';
  return 0;
}

int run_cluster_task(const ExperimentConfig& cfg,
                     const std::filesystem::path& out) {
  const int trials = cfg.get_int("trials", 10);
  const std::uint64_t seed = cfg.get_seed();
  const int classes = cfg.get_int("classes", 3);
  const int per_class = cfg.get_int("n_per_class", 60);
  const int d = cfg.get_int("d", 10);
  const double separation = cfg.get_double("separation", 6.0);
  const std::string algorithm = cfg.get_string("algorithm", "kmpe");
  PcaConfig pc;
  pc.m = cfg.get_int("m", 2);
  pc.power = cfg.get_double("p", 2.0);
  if (cfg.values.count("sigma")) pc.sigma = cfg.get_double("sigma", 0.0);
  pc.max_iter = cfg.get_int("max_iter", 100);
  pc.tol = cfg.get_double("tol", 1e-6);

  Series series;
  series.name = algorithm;
  series.trials.resize(trials);
  TrainTrace last_trace;
  parallel_trials(trials, [&](int t) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(t);
    Rng rng(s);
    const int n = classes * per_class;
    Matrix X(d, n);
    std::vector<int> truth(n);
    Matrix centers(d, classes);
    for (int c = 0; c < classes; ++c) {
      for (int i = 0; i < d; ++i) centers(i, c) = rng.normal();
      centers.col(c) *= separation / centers.col(c).norm();
    }
    for (int i = 0; i < n; ++i) {
      const int c = i % classes;
      truth[i] = c;
      for (int j = 0; j < d; ++j) X(j, i) = centers(j, c) + rng.normal();
    }
    Subspace sub;
    TrainTrace trace;
    if (algorithm == "kmpe") {
      std::tie(sub, trace) = fit_kmpe(X, pc);
    } else if (algorithm == "l2") {
      sub = fit_l2(X, pc.m);
    } else {
      throw ConfigError("cluster_eval: algorithm must be 'kmpe' or 'l2'");
    }
    const Matrix proj = (sub.W.transpose() * (X.colwise() - sub.mu)).transpose();
    const LabelVector pred = kmeans(proj, classes, s);
    const LabelVector target{truth};
    series.trials[t] = {t, s, clustering_accuracy(pred, target),
                        nmi(pred, target)};
    if (t == trials - 1) last_trace = trace;
  });
  write_summary((out / "summary.csv").string(), series);
  write_trace((out / "trace.csv").string(), last_trace);
  double mean_acc = 0.0;
  for (const TrialRow& tr : series.trials) mean_acc += tr.train_metric;
  mean_acc /= static_cast<double>(series.trials.size());
  std::cout << series.name << ": mean ACC " << fmt(mean_acc) << ", mean NMI "
            << fmt(series.mean_test()) << '\n';
  return 0;
}

int run_props_task(const ExperimentConfig& cfg,
                   const std::filesystem::path& out) {
  const int vectors = cfg.get_int("vectors", 1000);
  const std::vector<PropertyCheck> checks =
      run_property_suite(vectors, cfg.get_seed());
  std::ofstream os(out / "props.csv");
  os << "property,lhs,rhs,error,tol,pass\n";
  bool all_pass = true;
  for (const PropertyCheck& c : checks) {
    std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name
              << " (worst error " << fmt(c.error) << ", tol " << fmt(c.tol)
              << ")\n";
    os << c.name << ',' << fmt(c.lhs) << ',' << fmt(c.rhs) << ','
       << fmt(c.error) << ',' << fmt(c.tol) << ',' << (c.pass ? 1 : 0) << '\n';
    all_pass = all_pass && c.pass;
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg) {
  const std::filesystem::path out = cfg.get_string("output_dir", "out");
  std::filesystem::create_directories(out);
  try {
    switch (cfg.task) {
      case Task::sinc_bench:
        return run_sinc_task(cfg, out);
      case Task::elm:
        return run_elm_task(cfg, out);
      case Task::pca_recon:
        return run_pca_task(cfg, out);
      case Task::cluster_eval:
        return run_cluster_task(cfg, out);
      case Task::props:
        return run_props_task(cfg, out);
    }
  } catch (const DivergenceError& e) {
    std::cerr << "numerical divergence: " << e.what() << '\n';
    return 3;
  }
  return 2;
}

}  // namespace kmpe
