#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "clemit/experiment.hpp"

namespace {

enum Exit { kOk = 0, kValidation = 2, kNumerical = 3, kIo = 4 };

int exit_code(clemit::ErrorCode code) {
  using clemit::ErrorCode;
  switch (code) {
    case ErrorCode::NonFinite:
    case ErrorCode::ConvergenceFailure:
    case ErrorCode::DegenerateKernel:
    case ErrorCode::NoSteadyState:
    case ErrorCode::IllConditionedEigenbasis:
      return kNumerical;
    case ErrorCode::IoError:
      return kIo;
    default:
      return kValidation;
  }
}

/// A known preset name wins over a file of the same name.
std::string load_document(const std::string& target) {
  if (auto text = clemit::preset_json(target)) return *text;
  std::ifstream in(target, std::ios::binary);
  if (!in) {
    std::string names;
    for (const auto& n : clemit::preset_names()) names += (names.empty() ? "" : ", ") + n;
    throw clemit::Error(clemit::ErrorCode::IoError,
                        "cannot read '" + target + "' (not a file and not a preset: " + names + ")");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string default_out_dir() {
  if (const char* env = std::getenv("CLEMIT_OUT_DIR"); env && *env) return env;
  return "clemit-out";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-dependent cathodoluminescence spectra of a multi-level emitter", "clemit"};
  app.set_version_flag("--version", std::string(clemit::kVersion));
  app.require_subcommand(1);

  std::string target;
  std::string out_dir = default_out_dir();
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  double step = 0.0;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "Run a preset or a JSON experiment file");
  run->add_option("target", target, "Preset name or config path")->required();
  run->add_option("--out", out_dir, "Output root (default $CLEMIT_OUT_DIR or ./clemit-out)");
  run->add_option("--workers", workers, "Parallel jobs")->check(CLI::PositiveNumber);
  auto* step_opt = run->add_option("--step", step, "Override the quadrature step h")->check(CLI::PositiveNumber);
  run->add_flag("--quiet", quiet, "Suppress progress output");

  auto* validate = app.add_subcommand("validate", "Check a config without computing");
  validate->add_option("target", target, "Preset name or config path")->required();

  std::string preset;
  auto* show = app.add_subcommand("show-preset", "Print an embedded preset");
  show->add_option("name", preset, "Preset name")->required();

  app.add_subcommand("list-presets", "List embedded presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (app.got_subcommand("list-presets")) {
      for (const auto& name : clemit::preset_names()) std::cout << name << "\n";
      return kOk;
    }
    if (show->parsed()) {
      const auto text = clemit::preset_json(preset);
      if (!text) {
        std::cerr << "error: unknown preset '" << preset << "'\n";
        return kValidation;
      }
      std::cout << *text;
      return kOk;
    }
    const clemit::ExperimentConfig cfg = clemit::parse_config(load_document(target));
    if (validate->parsed()) {
      std::cout << clemit::validate_config(cfg) << "\n";
      return kOk;
    }
    clemit::RunOptions opt;
    opt.out_dir = out_dir;
    opt.workers = workers;
    opt.quiet = quiet;
    if (step_opt->count() > 0) opt.step_override = step;
    if (!quiet) std::cerr << "running " << cfg.name << " with " << workers << " worker(s)\n";
    const clemit::RunSummary summary = clemit::run_experiment(cfg, opt);
    if (!quiet) {
      std::cout << "wrote " << summary.artifacts.size() << " artifacts to " << summary.directory.string() << "\n";
    }
    return kOk;
  } catch (const clemit::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
}
