#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kmpe/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"KMPE robust-learning benchmark runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  CLI::App* run = app.add_subcommand("run", "execute a config-driven experiment");
  run->add_option("config", config_path, "experiment config file")->required();
  run->add_option("--set", overrides,
                  "override a scalar config key, e.g. --set trials=10");

  int props_vectors = 1000;
  std::uint64_t props_seed = 1;
  CLI::App* props = app.add_subcommand("props", "run the property check suite");
  props->add_option("--vectors", props_vectors, "random vectors per property");
  props->add_option("--seed", props_seed, "generator seed");

  int schema_version = 1;
  CLI::App* schema = app.add_subcommand("schema", "print report CSV schemas");
  schema->add_option("version", schema_version, "schema version");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const kmpe::ExperimentConfig cfg =
          kmpe::ExperimentConfig::from_file(config_path, overrides);
      return kmpe::run_experiment(cfg);
    }
    if (props->parsed()) {
      kmpe::ExperimentConfig cfg;
      cfg.task = kmpe::Task::props;
      cfg.values["vectors"] = std::to_string(props_vectors);
      cfg.values["seed"] = std::to_string(props_seed);
      cfg.values["output_dir"] = "out";
      return kmpe::run_experiment(cfg);
    }
    if (schema->parsed()) {
      std::cout << kmpe::report_format(schema_version);
      return 0;
    }
  } catch (const kmpe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
