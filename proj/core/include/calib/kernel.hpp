#pragma once

#include <Eigen/Dense>

#include "calib/types.hpp"

namespace calib {

// Hyperparameters of the emulator covariance, all constrained to the open
// unit interval. `beta` is indexed by the active-input subset only.
struct EmulatorKernelParams {
  double sigma2 = 0.5;  // marginal-variance fraction
  double eta2 = 0.5;    // residual-variance fraction (white term)
  VectorXd beta;        // correlation parameter per active input
};

// Hyperparameters of the discrepancy covariance. alpha_s = 1 removes boundary
// condition s from the kernel; alpha[0] belongs to the fictitious input x0.
struct DiscrepancyKernelParams {
  double tau2 = 0.5;
  VectorXd alpha;  // length S+1
};

// Gamma(shape, rate) prior for a precision parameter. When kScaled, the rate
// is divided by k_q^T k_q of the weight the precision belongs to.
struct PrecisionPrior {
  double shape = 2.0;
  double rate = 1.0;
  bool kScaled = false;
};

// Emulator covariance: (1-s2)/s2 * prod_p beta_p^{4 dz_p^2} + [sameIndex] (1-e2)/e2.
double rho(const VectorXd& zi, const VectorXd& zj, const EmulatorKernelParams& params,
           bool sameIndex);

// Discrepancy covariance: (1-t2)/t2 * prod_s alpha_s^{4 dx_s^2}.
double zeta(const VectorXd& xi, const VectorXd& xj, const DiscrepancyKernelParams& params);

// Gram matrices over row-wise point sets. The emulator variant carries the
// white term on the diagonal only.
MatrixXd gramEmulator(const MatrixXd& points, const EmulatorKernelParams& params);
MatrixXd gramDiscrepancy(const MatrixXd& points, const DiscrepancyKernelParams& params);

// Relative jitter added to Gram diagonals before factorization.
inline constexpr double kGramJitter = 1e-10;

// Log prior densities. Out-of-support values return -infinity rather than
// throwing; samplers rely on that.
double logPriorUniform01(double x);
double logPriorBeta1_01(double alpha);  // Beta(1, 0.1)
double logPriorGamma(double x, double shape, double rate);
double logPriorPrecision(double x, const PrecisionPrior& prior, double kTk = 1.0);
double logPriorEmulatorKernel(const EmulatorKernelParams& params);
double logPriorDiscrepancyKernel(const DiscrepancyKernelParams& params);

// Open-interval clip applied by samplers and optimizers to unit-interval
// hyperparameters, keeping the kernels finite.
inline constexpr double kUnitClip = 1e-6;
inline double clipUnit(double x) { return std::min(std::max(x, kUnitClip), 1.0 - kUnitClip); }

}  // namespace calib
