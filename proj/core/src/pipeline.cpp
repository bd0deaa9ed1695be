#include "calib/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "calib/analysis.hpp"
#include "calib/archive.hpp"
#include "calib/basis.hpp"
#include "calib/csv.hpp"
#include "calib/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace calib {

namespace {

constexpr const char* kSoftwareVersion = "calib 0.1.0";

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mixSeed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

std::string isoTimestamp() {
  std::time_t t = 0;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"))
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  else
    t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Exclusive lock guarding the output directory against concurrent writers.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : path_(dir / ".calib.lock") {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "'");
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f)
      throw ConfigError("output directory '" + dir.string() +
                        "' is locked by another run (remove " + path_.string() + " if stale)");
    std::fclose(f);
  }
  ~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
};

void writeTextFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataFormatError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataFormatError("write failed for '" + path.string() + "'");
}

// Run manifest: hashes of the config and every input/output artifact. The
// manifest hash stamped into JSON artifacts is the FNV-1a of these bytes.
struct Manifest {
  std::string command;
  std::string configHash;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;   // path, hash
  std::vector<std::pair<std::string, std::string>> outputs;  // path, hash

  std::string toJson() const {
    json j;
    j["version"] = kSoftwareVersion;
    j["command"] = command;
    j["configHash"] = configHash;
    j["seed"] = seed;
    j["timestamp"] = isoTimestamp();
    json in = json::object(), out = json::object();
    for (const auto& [p, h] : inputs) in[p] = h;
    for (const auto& [p, h] : outputs) out[p] = h;
    j["inputs"] = in;
    j["outputs"] = out;
    return j.dump(1);
  }

  // Writes manifest.json and returns its content hash.
  std::string write(const fs::path& dir) const {
    const std::string text = toJson() + "\n";
    writeTextFile(dir / "manifest.json", text);
    return fnv1a64Hex(text);
  }
};

VectorXd stepIndex(int n) {
  VectorXd t(n);
  for (int i = 0; i < n; ++i) t[i] = i;
  return t;
}

MatrixXd withStepIndex(const MatrixXd& body) {
  MatrixXd m(body.rows(), body.cols() + 1);
  m.col(0) = stepIndex(static_cast<int>(body.rows()));
  m.rightCols(body.cols()) = body;
  return m;
}

AnnealingSchedule scheduleFromJson(const json& j, const AnnealingSchedule& base) {
  AnnealingSchedule s = base;
  if (j.contains("temperatures"))
    s.temperatures = AnnealingSchedule::defaultLadder(j["temperatures"].get<int>());
  if (j.contains("chains")) s.chains = j["chains"].get<int>();
  if (j.contains("stepsPerTemperature")) s.stepsPerTemperature = j["stepsPerTemperature"].get<int>();
  if (j.contains("proposalScale")) s.proposalScale = j["proposalScale"].get<double>();
  return s;
}

void requireFile(const std::string& path, const std::string& key) {
  if (path.empty()) return;
  if (!fs::exists(path)) throw ConfigError("config path '" + key + "' does not exist: " + path);
}

struct LoadedData {
  SimulationEnsemble ensemble;
  VectorXd observation;
  double noiseVariance = 0.0;
};

LoadedData loadData(const ExperimentConfig& config, std::uint64_t fictitiousSeed) {
  if (config.paths.ensemble.empty() || config.paths.design.empty() ||
      config.paths.boundary.empty() || config.paths.observation.empty())
    throw ConfigError("paths.ensemble/design/boundary/observation are required");

  CsvTable runs = readCsv(config.paths.ensemble);
  CsvTable design = readCsv(config.paths.design);
  CsvTable boundary = readCsv(config.paths.boundary);
  CsvTable obs = readCsv(config.paths.observation);

  if (runs.data.cols() < 2) throw DataFormatError("ensemble file has no run columns");
  MatrixXd outputs = runs.data.rightCols(runs.data.cols() - 1);

  // Design columns: original-unit values first, matching "_unit" columns after.
  const int p = static_cast<int>(design.data.cols()) / 2;
  if (p == 0 || design.data.cols() != 2 * p)
    throw DataFormatError("design file must hold original and normalized column pairs");
  DesignScaling scaling;
  MatrixXd unitDesign = design.data.rightCols(p);
  for (int i = 0; i < p; ++i) scaling.names.push_back(design.header[i]);
  // Recover lo/hi from the paired columns; constant columns are rejected by
  // the ensemble factory anyway.
  scaling.lo.resize(p);
  scaling.hi.resize(p);
  for (int i = 0; i < p; ++i) {
    double lo = 0.0, hi = 1.0;
    int jLo = -1, jHi = -1;
    for (int r = 0; r < design.data.rows(); ++r) {
      const double u = unitDesign(r, i);
      if (jLo < 0 || u < unitDesign(jLo, i)) jLo = r;
      if (jHi < 0 || u > unitDesign(jHi, i)) jHi = r;
    }
    const double uLo = unitDesign(jLo, i), uHi = unitDesign(jHi, i);
    const double vLo = design.data(jLo, i), vHi = design.data(jHi, i);
    if (!(uHi > uLo)) throw DataFormatError("design column '" + design.header[i] + "' is constant");
    const double span = (vHi - vLo) / (uHi - uLo);
    lo = vLo - uLo * span;
    hi = lo + span;
    scaling.lo[i] = lo;
    scaling.hi[i] = hi;
  }

  MatrixXd boundaryRaw = boundary.data.rightCols(boundary.data.cols() - 1);
  std::vector<std::string> boundaryNames(boundary.header.begin() + 1, boundary.header.end());

  LoadedData d;
  d.ensemble = makeEnsembleFromUnitDesign(std::move(outputs), std::move(unitDesign),
                                          std::move(scaling), boundaryRaw, boundaryNames,
                                          fictitiousSeed);
  if (obs.data.cols() < 2 || obs.data.rows() != d.ensemble.n())
    throw DataFormatError("observation file does not match the ensemble length");
  d.observation = obs.data.col(1);

  if (!config.paths.observationMeta.empty()) {
    std::ifstream in(config.paths.observationMeta);
    if (!in) throw DataFormatError("cannot open '" + config.paths.observationMeta + "'");
    json meta;
    try {
      in >> meta;
    } catch (const json::exception& e) {
      throw DataFormatError(std::string("observation meta parse error: ") + e.what());
    }
    d.noiseVariance = meta.at("noiseVariance").get<double>();
  } else {
    throw ConfigError("paths.observationMeta is required for calibration");
  }
  if (!(d.noiseVariance > 0)) throw DataFormatError("noiseVariance must be positive");
  return d;
}

std::string formatTable(const std::vector<std::vector<std::string>>& rows) {
  std::vector<size_t> width;
  for (const auto& row : rows)
    for (size_t c = 0; c < row.size(); ++c) {
      if (width.size() <= c) width.resize(c + 1, 0);
      width[c] = std::max(width[c], row[c].size());
    }
  std::ostringstream out;
  for (const auto& row : rows) {
    for (size_t c = 0; c < row.size(); ++c) {
      out << row[c];
      if (c + 1 < row.size()) out << std::string(width[c] - row[c].size() + 2, ' ');
    }
    out << "\n";
  }
  return out.str();
}

std::string num(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
  return buf;
}

}  // namespace

ExperimentConfig loadExperimentConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentConfig c;
  c.rawJson = ss.str();

  json j;
  try {
    j = json::parse(c.rawJson);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }

  try {
    c.seed = j.value("seed", std::uint64_t{0});
    c.outputDir = j.value("outputDir", std::string{});
    c.modelName = j.value("modelName", std::string{});

    if (j.contains("experiment")) {
      const json& e = j["experiment"];
      ExperimentConfig::Synthetic s;
      s.variant = boxVariantFromName(e.value("variant", std::string("MultiLayerInfiltration")));
      s.truthVariant =
          boxVariantFromName(e.value("truthVariant", std::string("MultiLayerInfiltration")));
      s.runs = e.value("runs", s.runs);
      s.steps = e.value("steps", s.steps);
      s.noiseVarianceRatio = e.value("noiseVarianceRatio", s.noiseVarianceRatio);
      s.pulsePower = e.value("pulsePower", s.pulsePower);
      s.initialTemp = e.value("initialTemp", s.initialTemp);
      if (s.runs < 2) throw ConfigError("experiment.runs must be at least 2");
      if (s.steps < 8) throw ConfigError("experiment.steps must be at least 8");
      if (!(s.noiseVarianceRatio > 0)) throw ConfigError("noiseVarianceRatio must be positive");
      c.synthetic = s;
    }

    if (j.contains("paths")) {
      const json& p = j["paths"];
      c.paths.ensemble = p.value("ensemble", std::string{});
      c.paths.design = p.value("design", std::string{});
      c.paths.boundary = p.value("boundary", std::string{});
      c.paths.observation = p.value("observation", std::string{});
      c.paths.observationMeta = p.value("observationMeta", std::string{});
      c.paths.archive = p.value("archive", std::string{});
      if (p.contains("archives"))
        for (const auto& a : p["archives"])
          c.paths.archives.emplace_back(a.at("name").get<std::string>(),
                                        a.at("path").get<std::string>());
    }

    if (j.contains("basis"))
      c.varianceFraction = j["basis"].value("varianceFraction", c.varianceFraction);
    if (j.contains("priors")) {
      const json& p = j["priors"];
      c.priorShape = p.value("a", c.priorShape);
      c.priorRate = p.value("b", c.priorRate);
      c.aStarC = p.value("aStarC", c.aStarC);
    }
    c.replicates = j.value("replicates", c.replicates);
    if (j.contains("schedule")) c.schedule = scheduleFromJson(j["schedule"], c.schedule);
    c.discrepancySchedule = c.schedule;
    if (j.contains("discrepancySchedule"))
      c.discrepancySchedule = scheduleFromJson(j["discrepancySchedule"], c.discrepancySchedule);
    if (j.contains("emulator")) {
      const json& e = j["emulator"];
      c.emulator.restarts = e.value("restarts", c.emulator.restarts);
      c.emulator.maxEvaluations = e.value("maxEvaluations", c.emulator.maxEvaluations);
      c.emulator.selectionThreshold = e.value("selectionThreshold", c.emulator.selectionThreshold);
      c.emulator.forwardSelection = e.value("forwardSelection", c.emulator.forwardSelection);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config error: ") + e.what());
  }

  if (!(c.varianceFraction > 0) || c.varianceFraction > 1)
    throw ConfigError("basis.varianceFraction must lie in (0,1]");
  if (!(c.aStarC > 0) || c.aStarC > 1) throw ConfigError("priors.aStarC must lie in (0,1]");
  if (c.replicates < 1) throw ConfigError("replicates must be at least 1");

  requireFile(c.paths.ensemble, "ensemble");
  requireFile(c.paths.design, "design");
  requireFile(c.paths.boundary, "boundary");
  requireFile(c.paths.observation, "observation");
  requireFile(c.paths.observationMeta, "observationMeta");
  requireFile(c.paths.archive, "archive");
  for (const auto& [name, p] : c.paths.archives) requireFile(p, "archives." + name);
  return c;
}

namespace {

fs::path resolveOutDir(const ExperimentConfig& config, const std::optional<std::string>& outDir) {
  const std::string dir = outDir.value_or(config.outputDir);
  if (dir.empty()) throw ConfigError("no output directory: set outputDir or pass --out");
  return dir;
}

std::uint64_t resolveSeed(const ExperimentConfig& config, std::optional<std::uint64_t> seed) {
  return seed.value_or(config.seed);
}

}  // namespace

void cmdSimulate(const ExperimentConfig& config, std::optional<std::uint64_t> seedOpt,
                 const std::optional<std::string>& outOpt) {
  if (!config.synthetic) throw ConfigError("simulate requires an 'experiment' block");
  const ExperimentConfig::Synthetic& s = *config.synthetic;
  const std::uint64_t seed = resolveSeed(config, seedOpt);
  const fs::path dir = resolveOutDir(config, outOpt);
  DirLock lock(dir);

  // Boundary and observation depend on the seed only, never on the ensemble
  // variant: calibrating several variants against one observation requires
  // byte-identical observation files across simulate runs.
  BoundarySeries boundary = generateBoundary(s.steps, mixSeed(seed, 1), s.pulsePower);
  BoxVariantSpec truth = BoxVariantSpec::withInitialValues(s.truthVariant);
  SyntheticObservation obs =
      makeSyntheticObservation(truth, boundary, s.noiseVarianceRatio, mixSeed(seed, 2),
                               s.initialTemp);

  const auto bounds = BoxVariantSpec::parameterBounds(s.variant);
  const int p = static_cast<int>(bounds.size());
  MatrixXd unitDesign =
      sampleDesign(s.runs, p, mixSeed(seed, 3 + static_cast<std::uint64_t>(s.variant)));
  BoxVariantSpec spec = BoxVariantSpec::withInitialValues(s.variant);
  DesignScaling scaling = spec.scaling();
  MatrixXd original = scaling.toOriginal(unitDesign);

  MatrixXd outputs(s.steps, s.runs);
  for (int r = 0; r < s.runs; ++r) {
    spec.setFromVector(original.row(r).transpose());
    outputs.col(r) = simulate(spec, boundary, s.initialTemp);
  }

  // ensemble.csv: t, run_001..run_M
  std::vector<std::string> runHeader{"t"};
  for (int r = 0; r < s.runs; ++r) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "run_%03d", r + 1);
    runHeader.push_back(buf);
  }
  writeCsv((dir / "ensemble.csv").string(), runHeader, withStepIndex(outputs));

  // design.csv: original-unit columns then matching "_unit" columns.
  std::vector<std::string> designHeader;
  for (const auto& b : bounds) designHeader.push_back(b.name);
  for (const auto& b : bounds) designHeader.push_back(b.name + "_unit");
  MatrixXd designBody(s.runs, 2 * p);
  designBody.leftCols(p) = original;
  designBody.rightCols(p) = unitDesign;
  writeCsv((dir / "design.csv").string(), designHeader, designBody);

  std::vector<std::string> boundaryHeader{"t"};
  for (const auto& n : BoundarySeries::names()) boundaryHeader.push_back(n);
  writeCsv((dir / "boundary.csv").string(), boundaryHeader, withStepIndex(boundary.asMatrix()));

  writeCsv((dir / "observation.csv").string(), {"t", "Ti_degC"}, withStepIndex(obs.y));
  writeCsv((dir / "truth.csv").string(), {"t", "Ti_degC"}, withStepIndex(obs.truth));

  Manifest manifest;
  manifest.command = "simulate";
  manifest.configHash = fnv1a64Hex(config.rawJson);
  manifest.seed = seed;
  for (const char* f : {"ensemble.csv", "design.csv", "boundary.csv", "observation.csv",
                        "truth.csv"})
    manifest.outputs.emplace_back(f, hashFile((dir / f).string()));
  const std::string manifestHash = manifest.write(dir);

  json meta;
  meta["noiseVariance"] = obs.noiseVariance;
  meta["noiseVarianceRatio"] = s.noiseVarianceRatio;
  meta["variant"] = boxVariantName(s.variant);
  meta["truthVariant"] = boxVariantName(s.truthVariant);
  meta["initialTemp"] = s.initialTemp;
  meta["seed"] = seed;
  meta["manifestHash"] = manifestHash;
  writeTextFile(dir / "observation_meta.json", meta.dump(1) + "\n");
}

void cmdCalibrate(const ExperimentConfig& config, std::optional<std::uint64_t> seedOpt,
                  const std::optional<std::string>& outOpt) {
  const std::uint64_t seed = resolveSeed(config, seedOpt);
  const fs::path dir = resolveOutDir(config, outOpt);
  DirLock lock(dir);

  LoadedData data = loadData(config, mixSeed(seed, 11));
  const int n = data.ensemble.n();
  if (config.aStarC < 2.0 / n || config.aStarC > 1.0)
    throw ConfigError("priors.aStarC must lie in [2/N, 1]");
  if (config.replicates < 2)
    throw ConfigError("replicates must be at least 2 for evidence intervals");

  BasisPair basis =
      buildComplementBasis(buildSimulationBasis(data.ensemble, config.varianceFraction));
  ObservationProjection proj = projectObservation(data.observation, basis);

  EmulatorFitConfig fitConfig = config.emulator;
  fitConfig.seed = mixSeed(seed, 12);
  PrecisionPrior simPrior{config.priorShape, config.priorRate, true};
  EmulatorModel model = fitEmulator(data.ensemble, basis, simPrior, fitConfig);

  PrecisionPrior obsPrior{n * config.aStarC, data.noiseVariance * n * config.aStarC, false};

  // Calibration posterior (design parameters + per-weight observation
  // precisions), replicated for evidence spread.
  auto calibPriorComponents =
      calibrationPrior(model, obsPrior, data.ensemble.scaling.names);
  PosteriorArchive archive;
  {
    std::vector<MatrixXd> samples;
    std::vector<VectorXd> weights;
    for (int r = 0; r < config.replicates; ++r) {
      AnnealingSchedule sched = config.schedule;
      sched.seed = mixSeed(seed, 100 + static_cast<std::uint64_t>(r));
      AisResult res = aisRun(calibrationLogLikelihood(model, proj.wStar), calibPriorComponents,
                             sched);
      archive.calibrationReplicates.push_back(res.logEvidence);
      samples.push_back(res.samples);
      weights.push_back(res.logWeights);
    }
    int rows = 0;
    for (const auto& m : samples) rows += static_cast<int>(m.rows());
    archive.calibrationSamples.resize(rows, samples[0].cols());
    archive.calibrationLogWeights.resize(rows);
    int at = 0;
    for (size_t i = 0; i < samples.size(); ++i) {
      archive.calibrationSamples.middleRows(at, samples[i].rows()) = samples[i];
      archive.calibrationLogWeights.segment(at, weights[i].size()) = weights[i];
      at += static_cast<int>(samples[i].rows());
    }
  }
  for (const auto& c : calibPriorComponents) archive.calibrationNames.push_back(c.name);
  archive.logEvidenceCalibration =
      std::accumulate(archive.calibrationReplicates.begin(), archive.calibrationReplicates.end(),
                      0.0) /
      config.replicates;

  // Structured-discrepancy posterior over the complement space.
  auto discData = DiscrepancyData::make(proj.vHat, data.ensemble.boundary, basis.H);
  auto discPriorComponents =
      discrepancyPrior(data.ensemble.s() + 1, obsPrior, data.ensemble.boundaryNames);
  {
    std::vector<MatrixXd> samples;
    std::vector<VectorXd> weights;
    for (int r = 0; r < config.replicates; ++r) {
      AnnealingSchedule sched = config.discrepancySchedule;
      sched.seed = mixSeed(seed, 200 + static_cast<std::uint64_t>(r));
      AisResult res = aisRun(
          [discData]() -> LogDensityFn {
            auto lik = std::make_shared<DiscrepancyLikelihood>(discData);
            return [lik](const VectorXd& x) { return (*lik)(x); };
          },
          discPriorComponents, sched);
      archive.discrepancyReplicates.push_back(res.logEvidence);
      samples.push_back(res.samples);
      weights.push_back(res.logWeights);
    }
    int rows = 0;
    for (const auto& m : samples) rows += static_cast<int>(m.rows());
    archive.discrepancySamples.resize(rows, samples[0].cols());
    archive.discrepancyLogWeights.resize(rows);
    int at = 0;
    for (size_t i = 0; i < samples.size(); ++i) {
      archive.discrepancySamples.middleRows(at, samples[i].rows()) = samples[i];
      archive.discrepancyLogWeights.segment(at, weights[i].size()) = weights[i];
      at += static_cast<int>(samples[i].rows());
    }
  }
  for (const auto& c : discPriorComponents) archive.discrepancyNames.push_back(c.name);
  archive.logEvidenceDiscrepancy =
      std::accumulate(archive.discrepancyReplicates.begin(), archive.discrepancyReplicates.end(),
                      0.0) /
      config.replicates;

  // Posterior-mean reconstruction in the simulation span, for RMSE columns.
  {
    const VectorXd w = normalizedWeights(archive.calibrationLogWeights);
    const int p = data.ensemble.p();
    const int q = basis.q();
    VectorXd wMean = VectorXd::Zero(q);
    for (int i = 0; i < archive.calibrationSamples.rows(); ++i) {
      const VectorXd zStar = archive.calibrationSamples.row(i).head(p).transpose();
      const VectorXd lambdaStarQ = archive.calibrationSamples.row(i).tail(q).transpose();
      auto preds = emulatorPredict(model, zStar, lambdaStarQ);
      for (int j = 0; j < q; ++j) wMean[j] += w[i] * preds[j].mean;
    }
    archive.predictionMean = basis.K * wMean;
  }

  archive.modelName = config.modelName.empty() ? fs::path(config.paths.ensemble).parent_path()
                                                     .filename().string()
                                               : config.modelName;
  archive.seed = seed;
  archive.runCount = data.ensemble.m();
  archive.outputLength = n;
  archive.observationHash = hashFile(config.paths.observation);
  archive.configHash = fnv1a64Hex(config.rawJson);
  archive.parameterNames = data.ensemble.scaling.names;
  archive.scalingLo = data.ensemble.scaling.lo;
  archive.scalingHi = data.ensemble.scaling.hi;

  Manifest manifest;
  manifest.command = "calibrate";
  manifest.configHash = archive.configHash;
  manifest.seed = seed;
  for (const auto* key : {&config.paths.ensemble, &config.paths.design, &config.paths.boundary,
                          &config.paths.observation})
    manifest.inputs.emplace_back(*key, hashFile(*key));
  archive.manifestJson = manifest.toJson();
  writeArchive((dir / "archive.json").string(), archive);

  // Human-readable summary: design parameters in original units, precisions
  // as-is, evidence in log10.
  const VectorXd calibWeights = normalizedWeights(archive.calibrationLogWeights);
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"parameter", "estimate", "hdi95_lo", "hdi95_hi", "units"});
  json summary;
  summary["model"] = archive.modelName;
  summary["manifestHash"] = fnv1a64Hex(archive.manifestJson + "\n");
  json params = json::array();
  const int p = data.ensemble.p();
  for (int i = 0; i < archive.calibrationSamples.cols(); ++i) {
    VectorXd col = archive.calibrationSamples.col(i);
    double est = weightedMedian(col, calibWeights);
    Interval in = hdi(col, calibWeights, 0.95);
    std::string units = "-";
    if (i < p) {
      est = data.ensemble.scaling.toOriginal(i, est);
      in.lo = data.ensemble.scaling.toOriginal(i, in.lo);
      in.hi = data.ensemble.scaling.toOriginal(i, in.hi);
      units = "original";
    }
    rows.push_back({archive.calibrationNames[i], num(est), num(in.lo), num(in.hi), units});
    params.push_back({{"name", archive.calibrationNames[i]},
                      {"estimate", est},
                      {"hdi95", {in.lo, in.hi}},
                      {"units", units}});
  }
  const std::vector<double> totals = archive.totalLog10Evidence();
  const VectorXd totalsVec =
      Eigen::Map<const VectorXd>(totals.data(), static_cast<Eigen::Index>(totals.size()));
  const Interval evHdi = hdi(totalsVec, 0.95);
  rows.push_back({"log10_evidence", num(archive.log10Evidence()), num(evHdi.lo), num(evHdi.hi),
                  "log10"});
  summary["parameters"] = params;
  summary["log10Evidence"] = archive.log10Evidence();
  summary["log10EvidenceHdi95"] = {evHdi.lo, evHdi.hi};
  summary["log10EvidenceReplicates"] = totals;
  for (const auto& warning : model.warnings) summary["warnings"].push_back(warning);

  // Record the output hashes and restamp: the archive embeds the input-side
  // manifest, the on-disk manifest additionally lists emitted files.
  manifest.outputs.emplace_back("archive.json", hashFile((dir / "archive.json").string()));
  const std::string manifestHash = manifest.write(dir);
  summary["manifestHash"] = manifestHash;
  writeTextFile(dir / "summary.json", summary.dump(1) + "\n");
  writeTextFile(dir / "summary.txt", formatTable(rows));
}

void cmdAnalyze(const ExperimentConfig& config, std::optional<std::uint64_t> seedOpt,
                const std::optional<std::string>& outOpt) {
  const fs::path dir = resolveOutDir(config, outOpt);
  DirLock lock(dir);
  if (config.paths.archive.empty()) throw ConfigError("analyze requires paths.archive");
  PosteriorArchive archive = readArchive(config.paths.archive);

  if (config.paths.observation.empty())
    throw ConfigError("analyze requires paths.observation");
  if (hashFile(config.paths.observation) != archive.observationHash)
    throw DataFormatError("archive/config mismatch: observation hash differs from the archive");

  // Rebuild the complement projection exactly as calibration saw it; the
  // fictitious input is reseeded from the archived run seed.
  ExperimentConfig dataConfig = config;
  LoadedData data = loadData(dataConfig, mixSeed(archive.seed, 11));
  if (data.ensemble.m() != archive.runCount || data.ensemble.n() != archive.outputLength)
    throw DataFormatError("archive/config mismatch: ensemble shape differs from the archive");
  BasisPair basis =
      buildComplementBasis(buildSimulationBasis(data.ensemble, config.varianceFraction));
  ObservationProjection proj = projectObservation(data.observation, basis);

  DiscrepancyReport report = buildDiscrepancyReport(archive, proj.vHat, data.ensemble.boundary,
                                                    basis.H, data.ensemble.boundaryNames);

  Manifest manifest;
  manifest.command = "analyze";
  manifest.configHash = fnv1a64Hex(config.rawJson);
  manifest.seed = resolveSeed(config, seedOpt);
  manifest.inputs.emplace_back(config.paths.archive, hashFile(config.paths.archive));
  manifest.inputs.emplace_back(config.paths.observation, archive.observationHash);

  json j;
  j["model"] = archive.modelName;
  json perInput = json::array();
  for (const auto& in : report.perInput)
    perInput.push_back({{"name", in.name},
                        {"r2", in.r2Estimate},
                        {"r2Hdi95", {in.r2Hdi.lo, in.r2Hdi.hi}},
                        {"r2Tilde", in.r2TildeEstimate},
                        {"r2TildeHdi95", {in.r2TildeHdi.lo, in.r2TildeHdi.hi}},
                        {"significant", in.significant}});
  j["perInput"] = perInput;
  j["ranking"] = report.ranking;

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"rank", "input", "r2_tilde", "hdi95_lo", "hdi95_hi", "r2", "signif"});
  for (size_t r = 0; r < report.ranking.size(); ++r) {
    const auto& in = report.perInput[report.ranking[r]];
    rows.push_back({std::to_string(r + 1), in.name, num(in.r2TildeEstimate),
                    num(in.r2TildeHdi.lo), num(in.r2TildeHdi.hi), num(in.r2Estimate),
                    in.significant ? "*" : ""});
  }

  const std::string manifestHash = manifest.write(dir);
  j["manifestHash"] = manifestHash;
  writeTextFile(dir / "report.json", j.dump(1) + "\n");
  writeTextFile(dir / "report.txt", formatTable(rows));
}

void cmdCompare(const ExperimentConfig& config, std::optional<std::uint64_t> seedOpt,
                const std::optional<std::string>& outOpt) {
  const fs::path dir = resolveOutDir(config, outOpt);
  DirLock lock(dir);
  if (config.paths.archives.size() < 2)
    throw ConfigError("compare requires at least two entries in paths.archives");

  std::vector<std::string> names;
  std::vector<PosteriorArchive> archives;
  for (const auto& [name, path] : config.paths.archives) {
    names.push_back(name);
    archives.push_back(readArchive(path));
  }
  for (size_t i = 1; i < archives.size(); ++i) {
    if (archives[i].runCount != archives[0].runCount)
      throw ConfigError("rule (i): can only compare models built upon simulation samples of the "
                        "same size (M = " +
                        std::to_string(archives[0].runCount) + " vs M = " +
                        std::to_string(archives[i].runCount) + ")");
    if (archives[i].outputLength != archives[0].outputLength)
      throw ConfigError("cannot compare archives with differing output lengths N");
    if (archives[i].observationHash != archives[0].observationHash)
      throw DataFormatError("archives were calibrated against different observations");
  }

  VectorXd observation;
  if (!config.paths.observation.empty()) {
    if (hashFile(config.paths.observation) != archives[0].observationHash)
      throw DataFormatError("paths.observation does not match the archives' observation hash");
    observation = readCsv(config.paths.observation).data.col(1);
  }

  const int k = static_cast<int>(archives.size());
  std::vector<std::vector<BayesFactor>> logBf(k, std::vector<BayesFactor>(k));
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i)
      logBf[j][i] =
          bayesFactor(archives[j].totalLog10Evidence(), archives[i].totalLog10Evidence());

  Manifest manifest;
  manifest.command = "compare";
  manifest.configHash = fnv1a64Hex(config.rawJson);
  manifest.seed = resolveSeed(config, seedOpt);
  for (const auto& [name, path] : config.paths.archives)
    manifest.inputs.emplace_back(path, hashFile(path));
  const std::string manifestHash = manifest.write(dir);

  json out;
  out["manifestHash"] = manifestHash;
  json models = json::array();
  for (int i = 0; i < k; ++i) {
    json m;
    m["name"] = names[i];
    m["model"] = archives[i].modelName;
    m["log10Evidence"] = archives[i].log10Evidence();
    if (observation.size() > 0)
      m["rmse_degC"] = rmse(archives[i].predictionMean, observation);
    models.push_back(m);
  }
  out["models"] = models;
  json pairs = json::array();
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i)
      pairs.push_back({{"numerator", names[j]},
                       {"denominator", names[i]},
                       {"log10BayesFactor", logBf[j][i].estimate},
                       {"hdi95", {logBf[j][i].hdi.lo, logBf[j][i].hdi.hi}},
                       {"label", logBf[j][i].label}});
  out["pairwise"] = pairs;
  writeTextFile(dir / "comparison.json", out.dump(1) + "\n");

  std::vector<std::vector<std::string>> rows;
  {
    std::vector<std::string> head{"log10_B[row,col]"};
    for (const auto& n : names) head.push_back(n);
    head.push_back("log10_evidence");
    if (observation.size() > 0) head.push_back("rmse_degC");
    rows.push_back(head);
  }
  for (int j = 0; j < k; ++j) {
    std::vector<std::string> row{names[j]};
    for (int i = 0; i < k; ++i) row.push_back(num(logBf[j][i].estimate));
    row.push_back(num(archives[j].log10Evidence()));
    if (observation.size() > 0)
      row.push_back(num(rmse(archives[j].predictionMean, observation)));
    rows.push_back(row);
  }
  rows.push_back({});
  rows.push_back({"pair", "log10_B", "hdi95_lo", "hdi95_hi", "label"});
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i) {
      if (i == j) continue;
      rows.push_back({names[j] + "/" + names[i], num(logBf[j][i].estimate),
                      num(logBf[j][i].hdi.lo), num(logBf[j][i].hdi.hi), logBf[j][i].label});
    }
  std::string table = formatTable(rows);
  table += "\nGuidance: iterate on the highest-evidence model and terminate when the last "
           "retained model reaches a sufficient prediction accuracy; this tool ranks models "
           "but never decides when to stop.\n";
  writeTextFile(dir / "comparison.txt", table);
}

}  // namespace calib
