#include "calib/emulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "calib/detail/nelder_mead.hpp"
#include "calib/errors.hpp"

namespace calib {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }
double logit(double x) { return std::log(x / (1.0 - x)); }

MatrixXd subsetColumns(const MatrixXd& design, const std::vector<int>& cols) {
  MatrixXd sub(design.rows(), cols.size());
  for (size_t j = 0; j < cols.size(); ++j) sub.col(j) = design.col(cols[j]);
  return sub;
}

// Gaussian marginal of the weight row plus the Gamma(a', b'/kTk) term; the
// kernel priors are flat inside the hypercube and contribute 0.
double weightFactorLogDensity(const VectorXd& wHat, const MatrixXd& designSub,
                              const EmulatorKernelParams& params, double lambda, double aPrime,
                              double bPrimeScaled, Eigen::LLT<MatrixXd>* cholOut = nullptr) {
  const int m = static_cast<int>(wHat.size());
  MatrixXd cov = gramEmulator(designSub, params);
  cov.diagonal().array() += 1.0 / lambda;
  const double jitter = kGramJitter * cov.diagonal().maxCoeff();
  cov.diagonal().array() += jitter;
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    cov.diagonal().array() += jitter * 1e4;  // one enlarged-jitter retry
    llt.compute(cov);
    if (llt.info() != Eigen::Success) return kNegInf;
  }
  double logDet = 0.0;
  for (int i = 0; i < m; ++i) logDet += 2.0 * std::log(llt.matrixL()(i, i));
  const VectorXd solved = llt.solve(wHat);
  const double gaussian =
      -0.5 * m * std::log(2.0 * M_PI) - 0.5 * logDet - 0.5 * wHat.dot(solved);
  const double gamma = logPriorGamma(lambda, aPrime, bPrimeScaled);
  if (cholOut) *cholOut = std::move(llt);
  return gaussian + gamma;
}

struct WeightFit {
  EmulatorKernelParams kernel;
  double lambda = 1.0;
  double value = kNegInf;
  bool converged = false;
};

// Multi-start Nelder-Mead in transformed coordinates: logit for the
// unit-interval hyperparameters, log for lambda.
WeightFit maximizeWeightFactor(const VectorXd& wHat, const MatrixXd& designSub, double aPrime,
                               double bPrimeScaled, const EmulatorFitConfig& config,
                               std::mt19937_64& rng) {
  const int nBeta = static_cast<int>(designSub.cols());
  const int dim = 3 + nBeta;

  auto unpack = [&](const Eigen::VectorXd& t, EmulatorKernelParams& params, double& lambda) {
    params.sigma2 = clipUnit(logistic(t[0]));
    params.eta2 = clipUnit(logistic(t[1]));
    params.beta.resize(nBeta);
    for (int p = 0; p < nBeta; ++p) params.beta[p] = clipUnit(logistic(t[2 + p]));
    lambda = std::exp(std::min(t[dim - 1], 700.0));
  };

  auto negObjective = [&](const Eigen::VectorXd& t) {
    EmulatorKernelParams params;
    double lambda;
    unpack(t, params, lambda);
    const double v = weightFactorLogDensity(wHat, designSub, params, lambda, aPrime, bPrimeScaled);
    return std::isfinite(v) ? -v : 1e300;
  };

  const double lambdaPriorMeanLog = std::log(aPrime / bPrimeScaled);
  std::uniform_real_distribution<double> unif(0.05, 0.95);
  std::normal_distribution<double> gauss(0.0, 1.0);

  WeightFit best;
  for (int r = 0; r < config.restarts; ++r) {
    Eigen::VectorXd t0(dim);
    if (r == 0) {
      t0.setZero();  // hypercube center
      t0[dim - 1] = lambdaPriorMeanLog;
    } else {
      // Stratify beta starts between rough and smooth corners.
      const double betaLevel = 0.1 + 0.8 * (r - 1) / std::max(1, config.restarts - 2);
      t0[0] = logit(unif(rng));
      t0[1] = logit(unif(rng));
      for (int p = 0; p < nBeta; ++p) t0[2 + p] = logit(clipUnit(betaLevel + 0.1 * gauss(rng)));
      t0[dim - 1] = lambdaPriorMeanLog + gauss(rng);
    }
    auto nm = detail::nelderMead(negObjective, t0, 1.0, config.maxEvaluations);
    if (-nm.value > best.value) {
      unpack(nm.x, best.kernel, best.lambda);
      best.value = -nm.value;
      best.converged = nm.converged;
    }
  }
  return best;
}

}  // namespace

std::vector<int> forwardSelectInputs(const VectorXd& weightRow, const MatrixXd& design,
                                     double aPrime, double bPrimeScaled,
                                     const EmulatorFitConfig& config) {
  const int p = static_cast<int>(design.cols());
  std::vector<int> active;
  std::mt19937_64 rng(config.seed);

  MatrixXd empty(design.rows(), 0);
  double current =
      maximizeWeightFactor(weightRow, empty, aPrime, bPrimeScaled, config, rng).value;

  std::vector<bool> used(p, false);
  while (static_cast<int>(active.size()) < p) {
    int bestInput = -1;
    double bestValue = kNegInf;
    for (int candidate = 0; candidate < p; ++candidate) {
      if (used[candidate]) continue;
      std::vector<int> trial = active;
      trial.push_back(candidate);
      const double v =
          maximizeWeightFactor(weightRow, subsetColumns(design, trial), aPrime, bPrimeScaled,
                               config, rng)
              .value;
      if (v > bestValue) {
        bestValue = v;
        bestInput = candidate;
      }
    }
    if (bestInput < 0 || bestValue - current < config.selectionThreshold) break;
    active.push_back(bestInput);
    used[bestInput] = true;
    current = bestValue;
  }
  std::sort(active.begin(), active.end());
  return active;
}

EmulatorModel fitEmulator(const SimulationEnsemble& ensemble, const BasisPair& basis,
                          PrecisionPrior lambdaPrior, const EmulatorFitConfig& config) {
  const int n = ensemble.n();
  const int m = ensemble.m();
  const int q = basis.q();
  const int p = ensemble.p();

  EmulatorModel model;
  model.trainingDesign = ensemble.design;
  model.trainingWeights = basis.W;
  if (m < 2 * p)
    model.warnings.push_back("fewer than 2P runs; emulator hyperparameters may be weakly "
                             "identified");

  if (!(lambdaPrior.rate > 0.0))
    lambdaPrior.rate =
        std::sqrt(std::numeric_limits<double>::epsilon()) * std::max(basis.maxSingularValue, 1e-300);

  // b' = b + 1/2 sum_m y_m^T (I - K(K^T K)^-1 K^T) y_m
  const MatrixXd ktk = basis.K.transpose() * basis.K;
  const MatrixXd fitted = basis.K * ktk.ldlt().solve(basis.K.transpose() * ensemble.outputs);
  const double residualQuad = 0.5 * (ensemble.outputs - fitted).squaredNorm();
  model.aPrime = lambdaPrior.shape + 0.5 * m * (n - q);
  model.bPrime = lambdaPrior.rate + residualQuad;

  model.perWeight.resize(q);
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < q; ++j) {
    WeightGp gp;
    gp.kTk = basis.K.col(j).squaredNorm();
    gp.wHat = basis.W.row(j).transpose();
    const double bScaled = model.bPrime / gp.kTk;

    EmulatorFitConfig perQ = config;
    perQ.seed = config.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(j) + 1;
    std::mt19937_64 rng(perQ.seed);

    if (config.forwardSelection)
      gp.activeInputs = forwardSelectInputs(gp.wHat, ensemble.design, model.aPrime, bScaled, perQ);
    else {
      gp.activeInputs.resize(p);
      for (int k = 0; k < p; ++k) gp.activeInputs[k] = k;
    }

    const MatrixXd sub = subsetColumns(ensemble.design, gp.activeInputs);
    WeightFit fit = maximizeWeightFactor(gp.wHat, sub, model.aPrime, bScaled, perQ, rng);
    gp.kernel = fit.kernel;
    gp.lambda = fit.lambda;
    gp.converged = fit.converged;
    gp.fitLogDensity = weightFactorLogDensity(gp.wHat, sub, gp.kernel, gp.lambda, model.aPrime,
                                              bScaled, &gp.cholesky);
    if (!std::isfinite(gp.fitLogDensity))
      throw NumericalError("emulator fit produced a singular Gram for weight " +
                           std::to_string(j));
    gp.cholSolveWHat = gp.cholesky.solve(gp.wHat);
    model.perWeight[j] = std::move(gp);
  }

  model.fitLogDensity = 0.0;
  for (const auto& gp : model.perWeight) {
    model.fitLogDensity += gp.fitLogDensity;
    if (!gp.converged)
      model.warnings.push_back("hyperparameter search hit its evaluation budget; best value kept");
  }
  return model;
}

std::vector<WeightPrediction> emulatorPredict(const EmulatorModel& model, const VectorXd& zStar,
                                              const VectorXd& lambdaStarQ) {
  if (zStar.size() != model.pCount())
    throw DataFormatError("emulatorPredict: zStar dimension mismatch");
  if ((zStar.array() < 0.0).any() || (zStar.array() > 1.0).any())
    throw DataFormatError("emulatorPredict: zStar must lie in the unit hypercube");
  if (lambdaStarQ.size() != model.qCount() || (lambdaStarQ.array() <= 0.0).any())
    throw DataFormatError("emulatorPredict: lambdaStarQ must be positive and of length Q");

  const int m = static_cast<int>(model.trainingDesign.rows());
  std::vector<WeightPrediction> out(model.qCount());
  for (int j = 0; j < model.qCount(); ++j) {
    const WeightGp& gp = model.perWeight[j];
    VectorXd zSub(gp.activeInputs.size());
    for (size_t k = 0; k < gp.activeInputs.size(); ++k) zSub[k] = zStar[gp.activeInputs[k]];

    VectorXd cross(m);
    for (int i = 0; i < m; ++i) {
      VectorXd zi(gp.activeInputs.size());
      for (size_t k = 0; k < gp.activeInputs.size(); ++k)
        zi[k] = model.trainingDesign(i, gp.activeInputs[k]);
      cross[i] = rho(zSub, zi, gp.kernel, false);
    }
    const double priorVar = rho(zSub, zSub, gp.kernel, false);
    out[j].mean = cross.dot(gp.cholSolveWHat);
    const double reduction = cross.dot(gp.cholesky.solve(cross));
    out[j].variance =
        std::max(1.0 / lambdaStarQ[j] + priorVar - reduction, 1e-12 / lambdaStarQ[j]);
  }
  return out;
}

}  // namespace calib
