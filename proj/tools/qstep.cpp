// qstep: command-line driver for the Q-valued differentiability harness.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qstep/commands.hpp"
#include "qstep/errors.hpp"
#include "qstep/io.hpp"
#include "qstep/verify.hpp"

namespace {

using namespace qstep;

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> format;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "experiment config (JSON)");
    app->add_option("--out", out, "output path");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    app->add_option("--format", format, "output format")->check(CLI::IsMember({"json", "csv"}));
  }

  ExperimentConfig load() const {
    ExperimentConfig c = config.empty() ? ExperimentConfig{} : ExperimentConfig::load(config);
    if (seed) c.seed = *seed;
    if (threads) c.threads = *threads;
    if (format) c.format = *format;
    return c;
  }
};

// Config errors surface before a command runs.
template <typename Body>
int with_config(const Common& common, Body&& body) {
  try {
    return body(common.load());
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kExitFormat;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition failed: " << e.what() << '\n';
    return kExitPrecondition;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Q-valued function differentiability and Stepanov stratification on sampled metric measure spaces"};
  app.require_subcommand(1);

  std::string file_a, file_b;
  bool oracle = false;
  auto* qdist_cmd = app.add_subcommand("qdist", "matching distance between two Q-point files");
  qdist_cmd->add_option("a", file_a, "first Q-point file")->required();
  qdist_cmd->add_option("b", file_b, "second Q-point file")->required();
  qdist_cmd->add_flag("--oracle", oracle, "compare with the permutation brute force (Q <= 8)");

  std::string spec_file, generator;
  std::optional<int> grid;
  Common synth_opts;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic Q-valued function");
  synth_cmd->add_option("spec", spec_file, "synthetic spec (JSON)");
  synth_cmd->add_option("--generator", generator, "affine, diagonal, branchpoint, weierstrass_mix or separated_smooth");
  synth_cmd->add_option("--grid", grid, "points per axis");
  synth_cmd->add_option("--out", synth_opts.out, "output function file (stdout when omitted)");
  synth_cmd->add_option("--seed", synth_opts.seed, "random seed");

  std::string function_file;
  Common report_opts;
  auto* report_cmd = app.add_subcommand("report", "per-point differentiability report");
  report_cmd->add_option("function", function_file, "function file")->required();
  report_opts.attach(report_cmd);

  Common strat_opts;
  std::optional<int> i_max, j_max;
  auto* strat_cmd = app.add_subcommand("stratify", "E_ij stratification and Stepanov cover");
  strat_cmd->add_option("function", function_file, "function file")->required();
  strat_cmd->add_option("--i-max", i_max, "largest Lipschitz level i")->check(CLI::PositiveNumber);
  strat_cmd->add_option("--j-max", j_max, "largest scale index j")->check(CLI::PositiveNumber);
  strat_opts.attach(strat_cmd);

  std::string c_file;
  Common extend_opts;
  auto* extend_cmd = app.add_subcommand("extend", "extend f from a subset C and check the Lipschitz bound");
  extend_cmd->add_option("function", function_file, "function file")->required();
  extend_cmd->add_option("subset", c_file, "index file for C")->required();
  extend_opts.attach(extend_cmd);

  std::string filter = "all";
  Common verify_opts;
  auto* verify_cmd = app.add_subcommand("verify", "run the acceptance criteria");
  verify_cmd->add_option("--filter", filter, "criterion family or all");
  verify_opts.attach(verify_cmd);

  CLI11_PARSE(app, argc, argv);

  if (*qdist_cmd) return cmd_qdist(file_a, file_b, oracle, std::cout, std::cerr);

  if (*synth_cmd) {
    try {
      nlohmann::json j = spec_file.empty() ? nlohmann::json::object() : io::load_json(spec_file);
      if (!generator.empty()) j["generator"] = generator;
      if (grid) j["grid"] = *grid;
      if (synth_opts.seed) j["seed"] = *synth_opts.seed;
      return cmd_synth(SyntheticSpec::from_json(j), synth_opts.out, std::cout, std::cerr);
    } catch (const FormatError& e) {
      std::cerr << "format error: " << e.what() << '\n';
      return kExitFormat;
    } catch (const PreconditionError& e) {
      std::cerr << "precondition failed: " << e.what() << '\n';
      return kExitPrecondition;
    }
  }

  if (*report_cmd) {
    return with_config(report_opts, [&](const ExperimentConfig& c) {
      return cmd_report(function_file, c, report_opts.out, std::cout, std::cerr);
    });
  }
  if (*strat_cmd) {
    return with_config(strat_opts, [&](ExperimentConfig c) {
      if (i_max) c.i_max = *i_max;
      if (j_max) c.j_max = *j_max;
      return cmd_stratify(function_file, c, strat_opts.out, std::cout, std::cerr);
    });
  }
  if (*extend_cmd) {
    return with_config(extend_opts, [&](const ExperimentConfig& c) {
      return cmd_extend(function_file, c_file, c, extend_opts.out, std::cout, std::cerr);
    });
  }
  if (*verify_cmd) {
    return with_config(verify_opts, [&](const ExperimentConfig& c) {
      return cmd_verify(c, filter, verify_opts.out, std::cout, std::cerr);
    });
  }
  return kExitOk;
}
