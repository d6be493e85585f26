#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "mkv/experiments.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mkv::ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"McKean-Vlasov particle simulations: convergence, random batch, timing"};
  app.set_version_flag("--version", mkv::version_string());
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> out;

  const std::pair<const char*, mkv::Experiment> commands[] = {
      {"converge", mkv::Experiment::Converge},
      {"rbm-sweep", mkv::Experiment::RbmSweep},
      {"timing", mkv::Experiment::Timing},
      {"validate", mkv::Experiment::Validate},
      {"chaos", mkv::Experiment::Chaos},
  };
  const char* help[] = {
      "strong-error convergence of a full-interaction scheme against a fine reference",
      "random batch solver convergence for each batch-size rule",
      "wall-clock scaling of full and random batch stepping",
      "exact enumeration checks of the batch identities",
      "W2 distance between terminal laws at N and 2N",
  };
  for (std::size_t k = 0; k < std::size(commands); ++k) {
    auto* sub = app.add_subcommand(commands[k].first, help[k]);
    sub->add_option("--config", config_path, "experiment config (INI)")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override [run] seed");
    sub->add_option("--threads", threads, "worker threads over paths")->check(CLI::PositiveNumber);
    sub->add_option("--out", out, "output directory for CSV files");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mkv::exit_code::kConfig;
  }

  mkv::Experiment experiment = mkv::Experiment::Converge;
  for (const auto& [name, e] : commands)
    if (app.got_subcommand(name)) experiment = e;

  try {
    std::string text;
    mkv::ExperimentConfig config;
    if (!config_path.empty()) {
      text = read_file(config_path);
      config = mkv::parse_config(text, config_path, experiment);
    }
    config.experiment = experiment;
    if (seed) config.seed = *seed;
    if (threads) config.threads = *threads;
    if (out) config.out_dir = *out;
    config.check();

    const auto outcome = mkv::run_experiment(config, text);
    for (const auto& line : outcome.log) std::cout << line << '\n';
    for (const auto& f : outcome.files) std::cout << "wrote " << f.string() << '\n';
    return outcome.exit_code;
  } catch (const mkv::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return mkv::exit_code::kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return mkv::exit_code::kRuntime;
  }
}
