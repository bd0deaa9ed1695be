// Microbenchmarks for the hot paths: Gram assembly, basis construction,
// emulator prediction, and the discrepancy likelihood cache.

#include <benchmark/benchmark.h>

#include <random>

#include "calib/basis.hpp"
#include "calib/emulator.hpp"
#include "calib/inference.hpp"
#include "calib/kernel.hpp"
#include "calib/thermalbox.hpp"
#include "calib/types.hpp"

using namespace calib;

namespace {

MatrixXd randomPoints(int n, int p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif;
  MatrixXd pts(n, p);
  for (int i = 0; i < pts.size(); ++i) pts(i / p, i % p) = unif(rng);
  return pts;
}

SimulationEnsemble syntheticEnsemble(int n, int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  MatrixXd outputs(n, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i)
      outputs(i, j) = std::sin(0.1 * i + j) + 0.1 * gauss(rng);
  DesignScaling scaling;
  scaling.names = {"a", "b", "c"};
  scaling.lo = VectorXd::Zero(3);
  scaling.hi = VectorXd::Ones(3);
  MatrixXd boundary = randomPoints(n, 2, seed + 1);
  return makeEnsembleFromUnitDesign(outputs, randomPoints(m, 3, seed + 2), std::move(scaling),
                                    boundary, {"u", "v"}, seed + 3);
}

void BM_GramEmulator(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  MatrixXd pts = randomPoints(m, 3, 1);
  EmulatorKernelParams p;
  p.sigma2 = 0.4;
  p.eta2 = 0.8;
  p.beta = VectorXd::Constant(3, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(gramEmulator(pts, p));
}
BENCHMARK(BM_GramEmulator)->Arg(30)->Arg(100);

void BM_BuildBasis(benchmark::State& state) {
  SimulationEnsemble e = syntheticEnsemble(static_cast<int>(state.range(0)), 30, 2);
  for (auto _ : state) benchmark::DoNotOptimize(buildSimulationBasis(e, 0.99));
}
BENCHMARK(BM_BuildBasis)->Arg(96)->Arg(384);

void BM_ComplementBasis(benchmark::State& state) {
  SimulationEnsemble e = syntheticEnsemble(static_cast<int>(state.range(0)), 30, 3);
  BasisPair basis = buildSimulationBasis(e, 0.99);
  for (auto _ : state) benchmark::DoNotOptimize(buildComplementBasis(basis));
}
BENCHMARK(BM_ComplementBasis)->Arg(96)->Arg(384);

void BM_EmulatorPredict(benchmark::State& state) {
  SimulationEnsemble e = syntheticEnsemble(96, 30, 4);
  BasisPair basis = buildSimulationBasis(e, 0.99);
  EmulatorFitConfig cfg;
  cfg.restarts = 1;
  cfg.maxEvaluations = 50;
  cfg.forwardSelection = false;
  EmulatorModel model = fitEmulator(e, basis, PrecisionPrior{2.0, 0.0, true}, cfg);
  VectorXd z = VectorXd::Constant(3, 0.5);
  VectorXd lambdaStar = VectorXd::Constant(model.qCount(), 100.0);
  for (auto _ : state) benchmark::DoNotOptimize(emulatorPredict(model, z, lambdaStar));
}
BENCHMARK(BM_EmulatorPredict);

void BM_DiscrepancyLikelihood(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  SimulationEnsemble e = syntheticEnsemble(n, 30, 5);
  BasisPair basis = buildComplementBasis(buildSimulationBasis(e, 0.99));
  std::mt19937_64 rng(6);
  std::normal_distribution<double> gauss;
  VectorXd vHat(basis.H.cols());
  for (int i = 0; i < vHat.size(); ++i) vHat[i] = gauss(rng);
  auto data = DiscrepancyData::make(vHat, e.boundary, basis.H);
  DiscrepancyLikelihood lik(data);
  VectorXd x(2 + e.boundary.cols());
  x.setConstant(0.5);
  x[x.size() - 1] = 10.0;
  int flip = 0;
  for (auto _ : state) {
    // Alternate one alpha component to exercise the incremental cache path.
    x[1] = (flip++ % 2 == 0) ? 0.5 : 0.6;
    benchmark::DoNotOptimize(lik(x));
  }
}
BENCHMARK(BM_DiscrepancyLikelihood)->Arg(96)->Arg(384);

void BM_SimulateBox(benchmark::State& state) {
  BoundarySeries weather = generateBoundary(384, 7, 120.0);
  BoxVariantSpec spec = BoxVariantSpec::withInitialValues(BoxVariant::MultiLayerInfiltration);
  for (auto _ : state) benchmark::DoNotOptimize(simulate(spec, weather, 20.0));
}
BENCHMARK(BM_SimulateBox);

}  // namespace

BENCHMARK_MAIN();
