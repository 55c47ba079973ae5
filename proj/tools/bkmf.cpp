#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "bkmf/errors.hpp"
#include "bkmf/experiments.hpp"

namespace {

// Plain key=value configuration, same keys as the long flags. Values given
// explicitly on the command line win over the file.
void apply_config_file(const std::string& path, bkmf::ExperimentConfig& cfg,
                       const CLI::App& run) {
  std::ifstream in(path);
  if (!in) throw bkmf::Error("cannot read config file '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw bkmf::Error("config line " + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string v) {
      const size_t a = v.find_first_not_of(" \t");
      const size_t b = v.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : v.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto overridden = [&](const std::string& flag) {
      return run.count("--" + flag) > 0;
    };
    try {
      if (key == "experiment") {
        if (cfg.experiment.empty()) cfg.experiment = value;
      } else if (key == "n") {
        if (!overridden("n")) cfg.n = std::stoll(value);
      } else if (key == "s") {
        if (!overridden("s")) cfg.s = std::stoll(value);
      } else if (key == "jmax") {
        if (!overridden("jmax")) cfg.jmax = std::stoll(value);
      } else if (key == "seed") {
        if (!overridden("seed")) cfg.seed = std::stoull(value);
      } else if (key == "runs") {
        if (!overridden("runs")) cfg.runs = std::stoi(value);
      } else if (key == "out") {
        if (!overridden("out")) cfg.out_dir = value;
      } else if (key == "paper-scale") {
        if (!overridden("paper-scale"))
          cfg.paper_scale = (value == "1" || value == "true" || value == "yes");
      } else {
        throw bkmf::Error("config line " + std::to_string(lineno) + ": unknown key '" +
                          key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw bkmf::Error("config line " + std::to_string(lineno) + ": bad value for '" +
                        key + "'");
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"block Krylov matrix-function approximation: experiment driver"};
  app.require_subcommand(1);

  app.add_subcommand("list", "list the available experiments");

  bkmf::ExperimentConfig cfg;
  long long n = 0, s = 0, jmax = 0;
  std::string config_path;
  CLI::App* run = app.add_subcommand("run", "run one experiment and write its data files");
  run->add_option("experiment", cfg.experiment, "experiment name (see `list`)");
  run->add_option("--n", n, "problem size override (grid side for 2D experiments)");
  run->add_option("--s", s, "block width override");
  run->add_option("--jmax", jmax, "iteration range override");
  run->add_option("--seed", cfg.seed, "base RNG seed");
  run->add_option("--runs", cfg.runs, "number of averaged runs");
  run->add_option("--out", cfg.out_dir, "output directory for .dat files and summary.txt");
  run->add_option("--config", config_path, "key=value file with the same keys as the flags");
  run->add_flag("--paper-scale", cfg.paper_scale,
                "full-size parameters instead of the desk-scale defaults");

  CLI11_PARSE(app, argc, argv);

  if (app.got_subcommand("list")) {
    for (const std::string& name : bkmf::experiment_names())
      std::printf("%s\n", name.c_str());
    return 0;
  }

  cfg.n = bkmf::Index(n);
  cfg.s = bkmf::Index(s);
  cfg.jmax = bkmf::Index(jmax);
  try {
    if (!config_path.empty()) apply_config_file(config_path, cfg, *run);
    if (cfg.experiment.empty())
      throw bkmf::Error("no experiment given (positional argument or config file)");
    const bkmf::ExperimentResult result = bkmf::run_experiment(cfg);
    std::fputs(result.summary.c_str(), stdout);
    for (const std::string& f : result.files) std::printf("wrote %s\n", f.c_str());
    if (!result.valid) {
      std::fprintf(stderr, "validity check failed: a bound column fails to dominate "
                           "the error column above the round-off floor\n");
      return 1;
    }
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
