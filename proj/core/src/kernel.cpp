#include "calib/kernel.hpp"

#include <cmath>
#include <limits>

#include "calib/errors.hpp"

namespace calib {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void checkVarianceFraction(double v, const char* name) {
  if (!(v > 0.0) || !(v < 1.0))
    throw NumericalError(std::string(name) + " must lie strictly inside (0,1)");
}

// prod_p c_p^{4 d_p^2} computed in log space.
double correlationProduct(const VectorXd& a, const VectorXd& b, const VectorXd& coeff) {
  double logProd = 0.0;
  for (int p = 0; p < coeff.size(); ++p) {
    const double d = a[p] - b[p];
    logProd += 4.0 * d * d * std::log(coeff[p]);
  }
  return std::exp(logProd);
}

}  // namespace

double rho(const VectorXd& zi, const VectorXd& zj, const EmulatorKernelParams& params,
           bool sameIndex) {
  checkVarianceFraction(params.sigma2, "sigma2");
  checkVarianceFraction(params.eta2, "eta2");
  if (zi.size() != params.beta.size() || zj.size() != params.beta.size())
    throw DataFormatError("rho: input dimension does not match beta");
  double value = (1.0 - params.sigma2) / params.sigma2 * correlationProduct(zi, zj, params.beta);
  if (sameIndex) value += (1.0 - params.eta2) / params.eta2;
  return value;
}

double zeta(const VectorXd& xi, const VectorXd& xj, const DiscrepancyKernelParams& params) {
  checkVarianceFraction(params.tau2, "tau2");
  if (xi.size() != params.alpha.size() || xj.size() != params.alpha.size())
    throw DataFormatError("zeta: input dimension does not match alpha");
  if ((params.alpha.array() <= 0.0).any() || (params.alpha.array() > 1.0).any())
    throw NumericalError("zeta: alpha components must lie in (0,1]");
  return (1.0 - params.tau2) / params.tau2 * correlationProduct(xi, xj, params.alpha);
}

MatrixXd gramEmulator(const MatrixXd& points, const EmulatorKernelParams& params) {
  const int n = static_cast<int>(points.rows());
  if (n == 0) throw DataFormatError("gram: empty point list");
  MatrixXd g(n, n);
  for (int i = 0; i < n; ++i) {
    g(i, i) = rho(points.row(i), points.row(i), params, true);
    for (int j = i + 1; j < n; ++j) {
      g(i, j) = rho(points.row(i), points.row(j), params, false);
      g(j, i) = g(i, j);
    }
  }
  return g;
}

MatrixXd gramDiscrepancy(const MatrixXd& points, const DiscrepancyKernelParams& params) {
  const int n = static_cast<int>(points.rows());
  if (n == 0) throw DataFormatError("gram: empty point list");
  MatrixXd g(n, n);
  for (int i = 0; i < n; ++i) {
    g(i, i) = zeta(points.row(i), points.row(i), params);
    for (int j = i + 1; j < n; ++j) {
      g(i, j) = zeta(points.row(i), points.row(j), params);
      g(j, i) = g(i, j);
    }
  }
  return g;
}

double logPriorUniform01(double x) { return (x > 0.0 && x < 1.0) ? 0.0 : kNegInf; }

double logPriorBeta1_01(double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) return kNegInf;
  return std::log(0.1) + (0.1 - 1.0) * std::log1p(-alpha);
}

double logPriorGamma(double x, double shape, double rate) {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double logPriorPrecision(double x, const PrecisionPrior& prior, double kTk) {
  const double rate = prior.kScaled ? prior.rate / kTk : prior.rate;
  return logPriorGamma(x, prior.shape, rate);
}

double logPriorEmulatorKernel(const EmulatorKernelParams& params) {
  double lp = logPriorUniform01(params.sigma2) + logPriorUniform01(params.eta2);
  for (int p = 0; p < params.beta.size(); ++p) lp += logPriorUniform01(params.beta[p]);
  return lp;
}

double logPriorDiscrepancyKernel(const DiscrepancyKernelParams& params) {
  double lp = logPriorUniform01(params.tau2);
  for (int s = 0; s < params.alpha.size(); ++s) lp += logPriorBeta1_01(params.alpha[s]);
  return lp;
}

}  // namespace calib
