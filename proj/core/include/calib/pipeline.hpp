#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "calib/emulator.hpp"
#include "calib/inference.hpp"
#include "calib/thermalbox.hpp"

namespace calib {

// Declarative description of one pipeline stage, loaded from a single JSON
// document. Unset optionals fall back to the defaults below or, for seed and
// outputDir, to the command line.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string outputDir;
  std::string modelName;

  struct Synthetic {
    BoxVariant variant = BoxVariant::MultiLayerInfiltration;
    BoxVariant truthVariant = BoxVariant::MultiLayerInfiltration;
    int runs = 30;
    int steps = 384;
    double noiseVarianceRatio = 0.01;
    double pulsePower = 500.0;
    double initialTemp = 20.0;
  };
  std::optional<Synthetic> synthetic;

  struct Paths {
    std::string ensemble;
    std::string design;
    std::string boundary;
    std::string observation;
    std::string observationMeta;
    std::string archive;                                       // analyze input
    std::vector<std::pair<std::string, std::string>> archives;  // compare inputs
  } paths;

  double varianceFraction = 0.99;
  double priorShape = 2.0;     // a of the simulation-precision Gamma prior
  double priorRate = 0.0;      // b; <= 0 selects sqrt(eps) * max singular value
  double aStarC = 0.1;         // c of a* = N c
  int replicates = 2;

  AnnealingSchedule schedule = AnnealingSchedule::defaults();
  AnnealingSchedule discrepancySchedule = AnnealingSchedule::defaults();

  EmulatorFitConfig emulator;

  std::string rawJson;  // exact config bytes, for hashing
};

// Parses and validates the config file; nonexistent referenced files and
// out-of-range values raise ConfigError.
ExperimentConfig loadExperimentConfig(const std::string& path);

// Pipeline stages behind the CLI subcommands. `seed`/`outDir` from the
// command line, when present, override the config values. Each stage holds a
// lockfile in its output directory, writes a run manifest, and stamps every
// JSON artifact with the manifest hash.
void cmdSimulate(const ExperimentConfig& config, std::optional<std::uint64_t> seed,
                 const std::optional<std::string>& outDir);
void cmdCalibrate(const ExperimentConfig& config, std::optional<std::uint64_t> seed,
                  const std::optional<std::string>& outDir);
void cmdAnalyze(const ExperimentConfig& config, std::optional<std::uint64_t> seed,
                const std::optional<std::string>& outDir);
void cmdCompare(const ExperimentConfig& config, std::optional<std::uint64_t> seed,
                const std::optional<std::string>& outDir);

}  // namespace calib
