#pragma once

#include <Eigen/Cholesky>
#include <cstdint>
#include <vector>

#include "calib/basis.hpp"
#include "calib/kernel.hpp"
#include "calib/types.hpp"

namespace calib {

struct EmulatorFitConfig {
  int restarts = 8;
  int maxEvaluations = 1500;        // per Nelder-Mead start
  double selectionThreshold = 2.0;  // log-density units
  bool forwardSelection = true;
  std::uint64_t seed = 0;
};

// One fitted basis-weight GP: hyperparameters fixed after optimization,
// Cholesky of [rho(Zq,Zq) + I/lambda] cached for prediction.
struct WeightGp {
  std::vector<int> activeInputs;  // indices into the design columns
  EmulatorKernelParams kernel;
  double lambda = 1.0;
  double kTk = 1.0;  // k_q^T k_q
  VectorXd wHat;     // training weights, size M
  Eigen::LLT<MatrixXd> cholesky;
  VectorXd cholSolveWHat;  // [rho + I/lambda]^-1 wHat
  double fitLogDensity = 0.0;
  bool converged = true;
};

struct EmulatorModel {
  std::vector<WeightGp> perWeight;  // size Q
  MatrixXd trainingDesign;          // M x P
  MatrixXd trainingWeights;         // Q x M
  double fitLogDensity = 0.0;       // sum of per-weight factors
  double aPrime = 0.0;              // a + M(N-Q)/2
  double bPrime = 0.0;              // b + residual quadratic term
  std::vector<std::string> warnings;

  int qCount() const { return static_cast<int>(perWeight.size()); }
  int pCount() const { return static_cast<int>(trainingDesign.cols()); }
};

// Maximizes each per-weight factor (Gaussian marginal of wHat_q, the
// Gamma(a', b'/kTk) term for lambda_q, and the flat kernel priors) and fixes
// the result. `lambdaPrior` carries the Gamma(a,b) prior of the simulation
// precision; rate <= 0 requests the default b = sqrt(eps) * max singular value.
EmulatorModel fitEmulator(const SimulationEnsemble& ensemble, const BasisPair& basis,
                          PrecisionPrior lambdaPrior, const EmulatorFitConfig& config);

// Greedy forward selection over design columns for one weight row. Adds the
// input whose inclusion most increases the maximized per-weight log density,
// stopping when the best increase falls below the threshold.
std::vector<int> forwardSelectInputs(const VectorXd& weightRow, const MatrixXd& design,
                                     double aPrime, double bPrimeScaled,
                                     const EmulatorFitConfig& config);

struct WeightPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

// Predictive conditionals of every basis weight at zStar. lambdaStarQ enters
// only as the 1/lambda*_q summand of the predictive variance.
std::vector<WeightPrediction> emulatorPredict(const EmulatorModel& model, const VectorXd& zStar,
                                              const VectorXd& lambdaStarQ);

}  // namespace calib
