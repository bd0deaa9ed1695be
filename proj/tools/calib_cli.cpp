// Command-line front end: simulate | calibrate | analyze | compare.
// Exit codes: 0 success, 2 configuration error, 3 data-format error,
// 4 numerical failure.

#include <cstdint>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "calib/errors.hpp"
#include "calib/pipeline.hpp"

namespace {

using Stage = void (*)(const calib::ExperimentConfig&, std::optional<std::uint64_t>,
                       const std::optional<std::string>&);

struct StageArgs {
  std::string configPath;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> outDir;
};

void addStage(CLI::App& app, const std::string& name, const std::string& help, Stage stage,
              std::function<void()>& pending) {
  CLI::App* sub = app.add_subcommand(name, help);
  auto args = std::make_shared<StageArgs>();
  sub->add_option("--config", args->configPath, "experiment configuration file")
      ->required();
  sub->add_option("--seed", [args](const CLI::results_t& r) {
        args->seed = std::stoull(r[0]);
        return true;
      },
      "override the config seed");
  sub->add_option("--out", [args](const CLI::results_t& r) {
        args->outDir = r[0];
        return true;
      },
      "override the config output directory");
  sub->callback([&pending, args, stage]() {
    pending = [args, stage]() {
      calib::ExperimentConfig config = calib::loadExperimentConfig(args->configPath);
      stage(config, args->seed, args->outDir);
    };
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian calibration of dynamic simulation models"};
  app.require_subcommand(1);

  std::function<void()> pending;
  addStage(app, "simulate", "generate a synthetic ensemble, boundary, and observation",
           &calib::cmdSimulate, pending);
  addStage(app, "calibrate", "fit the emulator and sample the calibration posteriors",
           &calib::cmdCalibrate, pending);
  addStage(app, "analyze", "rank boundary inputs by their share of the model discrepancy",
           &calib::cmdAnalyze, pending);
  addStage(app, "compare", "pairwise Bayes factors and RMSE across archives",
           &calib::cmdCompare, pending);

  try {
    app.parse(argc, argv);
    pending();
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const calib::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const calib::DataFormatError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const calib::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
