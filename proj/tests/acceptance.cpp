// Release gate: one pass/fail line per criterion, exit 0 only if all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "calib/analysis.hpp"
#include "calib/archive.hpp"
#include "calib/basis.hpp"
#include "calib/csv.hpp"
#include "calib/emulator.hpp"
#include "calib/errors.hpp"
#include "calib/inference.hpp"
#include "calib/kernel.hpp"
#include "calib/pipeline.hpp"
#include "calib/thermalbox.hpp"
#include "calib/types.hpp"

using namespace calib;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(const std::string& name, bool ok, double seconds, const std::string& detail) {
  std::printf("%s: %s (%.1f s)%s%s\n", ok ? "PASS" : "FAIL", name.c_str(), seconds,
              detail.empty() ? "" : " — ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void criterion(const std::string& name, const std::function<bool(std::string&)>& body) {
  std::string detail;
  const auto start = Clock::now();
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  report(name, ok, seconds, detail);
}

SimulationEnsemble randomEnsemble(int n, int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif;
  MatrixXd outputs(n, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i)
      outputs(i, j) =
          std::sin(0.15 * i + 0.8 * j) + 0.4 * std::cos(0.03 * i * (j + 1)) + 0.2 * gauss(rng);
  MatrixXd design(m, 2);
  for (int i = 0; i < design.size(); ++i) design(i / 2, i % 2) = unif(rng);
  DesignScaling scaling;
  scaling.names = {"a", "b"};
  scaling.lo = VectorXd::Zero(2);
  scaling.hi = VectorXd::Ones(2);
  MatrixXd boundary(n, 1);
  for (int i = 0; i < n; ++i) boundary(i, 0) = gauss(rng);
  return makeEnsembleFromUnitDesign(std::move(outputs), std::move(design), std::move(scaling),
                                    boundary, {"u"}, seed + 1);
}

bool basisAlgebra(std::string& detail) {
  std::mt19937_64 rng(2024);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 12 + static_cast<int>(rng() % 53);  // up to 64
    const int m = 4 + static_cast<int>(rng() % 37);   // up to 40
    SimulationEnsemble e = randomEnsemble(n, m, 1000 + rep);
    BasisPair basis = buildComplementBasis(buildSimulationBasis(e, 0.99));
    const int q = basis.q();

    const double ktH = (basis.K.transpose() * basis.H).cwiseAbs().maxCoeff();
    const double htH =
        (basis.H.transpose() * basis.H - MatrixXd::Identity(n - q, n - q)).cwiseAbs().maxCoeff();
    const MatrixXd proj =
        MatrixXd::Identity(n, n) -
        basis.K * (basis.K.transpose() * basis.K).ldlt().solve(basis.K.transpose());
    const double hhT = (basis.H * basis.H.transpose() - proj).cwiseAbs().maxCoeff();
    const MatrixXd centered = e.outputs.rowwise() - basis.columnMeans.transpose();
    const double residFrac =
        (basis.K * basis.W - e.outputs).squaredNorm() / centered.squaredNorm();
    if (ktH > 1e-8 || htH > 1e-8 || hhT > 1e-8 || residFrac > 1.0 - 0.99 + 1e-6) {
      detail = "rep " + std::to_string(rep) + ": KtH=" + std::to_string(ktH) +
               " HtH=" + std::to_string(htH) + " HHt=" + std::to_string(hhT) +
               " resid=" + std::to_string(residFrac);
      return false;
    }
  }
  return true;
}

bool kernelOracles(std::string& detail) {
  EmulatorKernelParams p;
  p.sigma2 = 0.5;
  p.eta2 = 0.5;
  p.beta = VectorXd::Constant(1, 0.5);
  VectorXd z0 = VectorXd::Zero(1), zHalf = VectorXd::Constant(1, 0.5);
  const struct {
    double got, want;
  } cases[] = {
      {rho(z0, z0, p, true), 2.0},
      {rho(z0, z0, p, false), 1.0},
      {rho(z0, zHalf, p, false), 0.5},
  };
  for (const auto& c : cases)
    if (std::abs(c.got - c.want) > 1e-12) {
      detail = "rho mismatch: " + std::to_string(c.got) + " vs " + std::to_string(c.want);
      return false;
    }

  DiscrepancyKernelParams d;
  d.tau2 = 0.5;
  d.alpha = VectorXd::Constant(1, 0.5);
  VectorXd x0 = VectorXd::Zero(1), x1 = VectorXd::Ones(1);
  if (std::abs(zeta(x0, x0, d) - 1.0) > 1e-12 || std::abs(zeta(x0, x1, d) - 0.0625) > 1e-12) {
    detail = "zeta hand case mismatch";
    return false;
  }
  DiscrepancyKernelParams flat;
  flat.tau2 = 0.2;
  flat.alpha = VectorXd::Ones(1);
  if (std::abs(zeta(x0, x1, flat) - 4.0) > 1e-12) {
    detail = "zeta flat case mismatch";
    return false;
  }

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 3 + static_cast<int>(rng() % 6);
    MatrixXd pts(n, 2);
    for (int i = 0; i < pts.size(); ++i) pts(i / 2, i % 2) = unif(rng);
    EmulatorKernelParams kp;
    kp.sigma2 = 0.1 + 0.8 * unif(rng);
    kp.eta2 = 0.1 + 0.8 * unif(rng);
    kp.beta = VectorXd::Constant(2, 0.05 + 0.9 * unif(rng));
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gramEmulator(pts, kp));
    if (eig.eigenvalues().minCoeff() < -1e-10) {
      detail = "emulator gram eigenvalue " + std::to_string(eig.eigenvalues().minCoeff());
      return false;
    }
    DiscrepancyKernelParams dp;
    dp.tau2 = 0.1 + 0.8 * unif(rng);
    dp.alpha = VectorXd::Constant(2, 0.1 + 0.9 * unif(rng));
    Eigen::SelfAdjointEigenSolver<MatrixXd> eigD(gramDiscrepancy(pts, dp));
    if (eigD.eigenvalues().minCoeff() < -1e-10) {
      detail = "discrepancy gram eigenvalue " + std::to_string(eigD.eigenvalues().minCoeff());
      return false;
    }
  }
  return true;
}

bool aisOracle(std::string& detail) {
  const double truth = std::log(1.0 / (2.0 * std::sqrt(M_PI)));
  std::vector<PriorComponent> prior{PriorComponent::standardNormal("x")};
  auto lik = [](const VectorXd& x) {
    return -0.5 * std::log(2.0 * M_PI) - 0.5 * x[0] * x[0];
  };
  int covered = 0;
  double sum = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    AisResult res = aisRun(lik, prior, AnnealingSchedule::defaults(500 + rep));
    sum += res.logEvidence;
    if (std::abs(res.logEvidence - truth) <= 1.96 * res.logEvidenceSE) ++covered;
  }
  const double mean = sum / 20.0;
  if (std::abs(mean - truth) >= 0.05) {
    detail = "mean logZ " + std::to_string(mean) + " vs " + std::to_string(truth);
    return false;
  }
  if (covered < 17) {
    detail = "coverage " + std::to_string(covered) + "/20";
    return false;
  }
  detail = "mean logZ " + std::to_string(mean) + ", coverage " + std::to_string(covered) + "/20";
  return true;
}

bool emulatorArd(std::string& detail) {
  int successes = 0;
  for (int rep = 0; rep < 20; ++rep) {
    std::mt19937_64 rng(9000 + rep);
    std::uniform_real_distribution<double> unif;
    const int m = 24;
    MatrixXd design(m, 3);
    for (int p = 0; p < 3; ++p) {
      std::vector<double> strata(m);
      for (int i = 0; i < m; ++i) strata[i] = (i + unif(rng)) / m;
      std::shuffle(strata.begin(), strata.end(), rng);
      for (int i = 0; i < m; ++i) design(i, p) = strata[i];
    }
    VectorXd w(m);
    for (int i = 0; i < m; ++i) w[i] = std::sin(4.0 * design(i, 0));

    EmulatorFitConfig cfg;
    cfg.seed = 9000 + rep;
    cfg.forwardSelection = false;
    // Direct fit over all inputs: inert betas pushed toward 1.
    VectorXd k(16);
    for (int i = 0; i < 16; ++i) k[i] = std::sin(2.0 * M_PI * (i + 0.5) / 16.0);
    k.array() -= k.mean();
    MatrixXd outputs = k * w.transpose();
    outputs.rowwise() += Eigen::RowVectorXd::Constant(m, 20.0);
    DesignScaling scaling;
    scaling.names = {"z1", "z2", "z3"};
    scaling.lo = VectorXd::Zero(3);
    scaling.hi = VectorXd::Ones(3);
    MatrixXd boundary(16, 1);
    std::normal_distribution<double> gauss;
    for (int i = 0; i < 16; ++i) boundary(i, 0) = gauss(rng);
    SimulationEnsemble e =
        makeEnsembleFromUnitDesign(std::move(outputs), design, std::move(scaling), boundary,
                                   {"x1"}, cfg.seed);
    BasisPair basis = buildSimulationBasis(e, 0.99);
    EmulatorModel model = fitEmulator(e, basis, PrecisionPrior{2.0, 0.0, true}, cfg);
    const VectorXd& beta = model.perWeight[0].kernel.beta;
    const bool betaOk = beta.size() == 3 && beta[1] > 0.9 && beta[2] > 0.9;

    EmulatorFitConfig sel = cfg;
    auto active = forwardSelectInputs(w, design, 100.0, 1.0, sel);
    bool selOk = !active.empty();
    for (int idx : active) selOk = selOk && idx == 0;
    if (betaOk && selOk) ++successes;
  }
  detail = std::to_string(successes) + "/20 repetitions";
  return successes >= 18;
}

// ---------------------------------------------------------------------------
// End-to-end synthetic experiment on the RC surrogate.

struct E2E {
  fs::path root;
  std::vector<std::string> variants{"SingleLayer", "MultiLayer", "MultiLayerInfiltration"};
  std::uint64_t seed = 20240817;

  std::string simDir(const std::string& v) const { return (root / ("sim_" + v)).string(); }
  std::string calDir(const std::string& v) const { return (root / ("cal_" + v)).string(); }
  std::string anaDir(const std::string& v) const { return (root / ("ana_" + v)).string(); }

  void writeConfig(const std::string& path, const json& j) const {
    std::ofstream out(path);
    out << j.dump(1);
  }

  void simulateAll() {
    for (const auto& v : variants) {
      json j;
      j["seed"] = seed;
      j["experiment"] = {{"variant", v},
                         {"truthVariant", "MultiLayerInfiltration"},
                         {"runs", 30},
                         {"steps", 384},
                         {"noiseVarianceRatio", 0.01},
                         {"pulsePower", 120.0},
                         {"initialTemp", 20.0}};
      const std::string cfg = (root / ("sim_" + v + ".json")).string();
      writeConfig(cfg, j);
      cmdSimulate(loadExperimentConfig(cfg), std::nullopt, simDir(v));
    }
  }

  json calibrateConfig(const std::string& v) const {
    json j;
    j["seed"] = seed + 7;
    j["modelName"] = v;
    j["paths"] = {{"ensemble", simDir(v) + "/ensemble.csv"},
                  {"design", simDir(v) + "/design.csv"},
                  {"boundary", simDir(v) + "/boundary.csv"},
                  {"observation", simDir(v) + "/observation.csv"},
                  {"observationMeta", simDir(v) + "/observation_meta.json"}};
    j["replicates"] = 2;
    j["schedule"] = {{"temperatures", 100}, {"chains", 32}, {"stepsPerTemperature", 2}};
    j["discrepancySchedule"] = {{"temperatures", 60}, {"chains", 24}, {"stepsPerTemperature", 1}};
    j["emulator"] = {{"restarts", 4}, {"maxEvaluations", 400}};
    return j;
  }

  void calibrateAll() {
    for (const auto& v : variants) {
      const std::string cfg = (root / ("cal_" + v + ".json")).string();
      writeConfig(cfg, calibrateConfig(v));
      cmdCalibrate(loadExperimentConfig(cfg), std::nullopt, calDir(v));
    }
  }

  void analyzeAll() {
    for (const auto& v : variants) {
      json j = calibrateConfig(v);
      j["paths"]["archive"] = calDir(v) + "/archive.json";
      const std::string cfg = (root / ("ana_" + v + ".json")).string();
      writeConfig(cfg, j);
      cmdAnalyze(loadExperimentConfig(cfg), std::nullopt, anaDir(v));
    }
  }

  void compareAll() {
    json j;
    j["paths"]["observation"] = simDir(variants[0]) + "/observation.csv";
    j["paths"]["archives"] = json::array();
    for (const auto& v : variants)
      j["paths"]["archives"].push_back({{"name", v}, {"path", calDir(v) + "/archive.json"}});
    const std::string cfg = (root / "cmp.json").string();
    writeConfig(cfg, j);
    cmdCompare(loadExperimentConfig(cfg), std::nullopt, (root / "cmp").string());
  }
};

json readJson(const std::string& path) {
  std::ifstream in(path);
  json j;
  in >> j;
  return j;
}

bool endToEnd(std::string& detail) {
  E2E e;
  e.root = fs::temp_directory_path() / "calib_acceptance_e2e";
  fs::remove_all(e.root);
  fs::create_directories(e.root);

  e.simulateAll();
  e.calibrateAll();
  e.analyzeAll();
  e.compareAll();

  std::ostringstream notes;
  bool ok = true;

  // (a) True variant: no boundary input significantly explains discrepancy.
  {
    json report = readJson(e.anaDir("MultiLayerInfiltration") + "/report.json");
    int significant = 0;
    for (const auto& in : report["perInput"])
      if (in["significant"].get<bool>()) ++significant;
    if (significant != 0) {
      ok = false;
      notes << "[a] true variant has " << significant << " significant inputs; ";
    }
  }

  // (b) Missing infiltration: wind speed or direction ranked top and significant.
  {
    json report = readJson(e.anaDir("MultiLayer") + "/report.json");
    const int top = report["ranking"][0].get<int>();
    const std::string name = report["perInput"][top]["name"].get<std::string>();
    const bool sig = report["perInput"][top]["significant"].get<bool>();
    if (!((name == "Ws" || name == "Wd") && sig)) {
      ok = false;
      notes << "[b] top-ranked input " << name << (sig ? " (significant)" : " (not significant)")
            << "; ";
    }
  }

  // (c) Bayes factors: true variant decisively beats both deficient ones.
  {
    json cmp = readJson((e.root / "cmp/comparison.json").string());
    for (const auto& pair : cmp["pairwise"]) {
      if (pair["numerator"] != "MultiLayerInfiltration" || pair["denominator"] == pair["numerator"])
        continue;
      const double bf = pair["log10BayesFactor"].get<double>();
      const std::string label = pair["label"].get<std::string>();
      if (!(bf > 2.0) || label != "decisive") {
        ok = false;
        notes << "[c] B(true," << pair["denominator"].get<std::string>() << ") = " << bf << " ("
              << label << "); ";
      }
    }
  }

  // (d) True-variant HDIs cover the generating values of every parameter whose
  // one-at-a-time output sensitivity exceeds the noise scale.
  {
    json summary = readJson(e.calDir("MultiLayerInfiltration") + "/summary.json");
    json meta = readJson(e.simDir("MultiLayerInfiltration") + "/observation_meta.json");
    const double noiseSd = std::sqrt(meta["noiseVariance"].get<double>());

    BoundarySeries weather = BoundarySeries::fromMatrix(
        readCsv(e.simDir("MultiLayerInfiltration") + "/boundary.csv").data.rightCols(5));
    BoxVariantSpec truth = BoxVariantSpec::withInitialValues(BoxVariant::MultiLayerInfiltration);
    const VectorXd base = simulate(truth, weather, 20.0);

    for (const auto& p : BoxVariantSpec::parameterBounds(BoxVariant::MultiLayerInfiltration)) {
      BoxVariantSpec lo = truth, hi = truth;
      lo.parameters[p.name] = p.lo;
      hi.parameters[p.name] = p.hi;
      const VectorXd range = simulate(hi, weather, 20.0) - simulate(lo, weather, 20.0);
      const double sensitivity = std::sqrt(range.squaredNorm() / range.size());
      if (sensitivity <= noiseSd) continue;
      bool found = false;
      for (const auto& entry : summary["parameters"]) {
        if (entry["name"].get<std::string>() != p.name) continue;
        found = true;
        const double loHdi = entry["hdi95"][0].get<double>();
        const double hiHdi = entry["hdi95"][1].get<double>();
        if (!(p.initial >= loHdi && p.initial <= hiHdi)) {
          ok = false;
          notes << "[d] " << p.name << " truth " << p.initial << " outside [" << loHdi << ", "
                << hiHdi << "]; ";
        }
      }
      if (!found) {
        ok = false;
        notes << "[d] " << p.name << " missing from summary; ";
      }
    }
  }

  detail = notes.str();
  return ok;
}

bool compareRule(std::string& detail) {
  const fs::path root = fs::temp_directory_path() / "calib_acceptance_cmp";
  fs::remove_all(root);
  fs::create_directories(root);

  auto tiny = [](int runCount) {
    PosteriorArchive a;
    a.calibrationNames = {"z1"};
    a.calibrationSamples = MatrixXd::Constant(2, 1, 0.5);
    a.calibrationLogWeights = VectorXd::Zero(2);
    a.discrepancyNames = {"tau2"};
    a.discrepancySamples = MatrixXd::Constant(2, 1, 0.5);
    a.discrepancyLogWeights = VectorXd::Zero(2);
    a.calibrationReplicates = {1.0, 1.1};
    a.discrepancyReplicates = {0.4, 0.5};
    a.runCount = runCount;
    a.outputLength = 8;
    a.observationHash = "feed";
    a.predictionMean = VectorXd::Zero(8);
    return a;
  };
  writeArchive((root / "a30.json").string(), tiny(30));
  writeArchive((root / "a20.json").string(), tiny(20));
  json cfg;
  cfg["paths"]["archives"] = {{{"name", "A"}, {"path", (root / "a30.json").string()}},
                              {{"name", "B"}, {"path", (root / "a20.json").string()}}};
  std::ofstream((root / "c.json").string()) << cfg.dump(1);

  try {
    cmdCompare(loadExperimentConfig((root / "c.json").string()), std::nullopt,
               (root / "out").string());
  } catch (const ConfigError& err) {
    const std::string what = err.what();
    if (what.find("simulation samples of the same size") != std::string::npos) return true;
    detail = "wrong message: " + what;
    return false;
  }
  detail = "comparison of mismatched M was not rejected";
  return false;
}

bool byteReproducibility(std::string& detail) {
  const fs::path root = fs::temp_directory_path() / "calib_acceptance_repro";
  fs::remove_all(root);
  fs::create_directories(root);

  json sim;
  sim["seed"] = 31;
  sim["experiment"] = {{"variant", "SingleLayer"}, {"truthVariant", "SingleLayer"}, {"runs", 8},
                       {"steps", 96},  {"noiseVarianceRatio", 0.01}, {"pulsePower", 120.0}};
  std::ofstream((root / "sim.json").string()) << sim.dump(1);
  cmdSimulate(loadExperimentConfig((root / "sim.json").string()), std::nullopt,
              (root / "data").string());

  json cal;
  cal["seed"] = 32;
  cal["modelName"] = "repro";
  cal["paths"] = {{"ensemble", (root / "data/ensemble.csv").string()},
                  {"design", (root / "data/design.csv").string()},
                  {"boundary", (root / "data/boundary.csv").string()},
                  {"observation", (root / "data/observation.csv").string()},
                  {"observationMeta", (root / "data/observation_meta.json").string()}};
  cal["replicates"] = 2;
  cal["schedule"] = {{"temperatures", 20}, {"chains", 8}, {"stepsPerTemperature", 1}};
  cal["discrepancySchedule"] = {{"temperatures", 15}, {"chains", 6}, {"stepsPerTemperature", 1}};
  cal["emulator"] = {{"restarts", 2}, {"maxEvaluations", 150}};
  std::ofstream((root / "cal.json").string()) << cal.dump(1);

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };

  cmdCalibrate(loadExperimentConfig((root / "cal.json").string()), std::nullopt,
               (root / "run1").string());
  cmdCalibrate(loadExperimentConfig((root / "cal.json").string()), std::nullopt,
               (root / "run2").string());
  for (const char* f : {"archive.json", "summary.json", "summary.txt"})
    if (slurp(root / "run1" / f) != slurp(root / "run2" / f)) {
      detail = std::string(f) + " differs between identically seeded runs";
      return false;
    }
  return true;
}

}  // namespace

int main() {
  criterion("basis-algebra (50 random ensembles)", basisAlgebra);
  criterion("kernel-oracles (hand cases + Gram PSD)", kernelOracles);
  criterion("ais-analytic-oracle (20 replicates)", aisOracle);
  criterion("emulator-ard (20 repetitions)", emulatorArd);
  criterion("end-to-end-synthetic (3 variants)", endToEnd);
  criterion("comparison-rule-enforcement", compareRule);
  criterion("byte-reproducibility", byteReproducibility);
  if (failures == 0) {
    std::printf("ALL CRITERIA PASSED\n");
    return 0;
  }
  std::printf("%d criterion(s) FAILED\n", failures);
  return 1;
}
