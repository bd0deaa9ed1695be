#include "calib/types.hpp"

#include <cmath>
#include <random>

#include "calib/errors.hpp"

namespace calib {

MatrixXd DesignScaling::toUnit(const MatrixXd& original) const {
  if (original.cols() != size())
    throw DataFormatError("design column count does not match scaling");
  MatrixXd u = original;
  for (int p = 0; p < size(); ++p) {
    const double span = hi[p] - lo[p];
    if (!(span > 0)) throw ConfigError("parameter '" + names[p] + "' has empty range");
    u.col(p) = (original.col(p).array() - lo[p]) / span;
  }
  return u;
}

MatrixXd DesignScaling::toOriginal(const MatrixXd& unit) const {
  if (unit.cols() != size())
    throw DataFormatError("design column count does not match scaling");
  MatrixXd o = unit;
  for (int p = 0; p < size(); ++p)
    o.col(p) = lo[p] + unit.col(p).array() * (hi[p] - lo[p]);
  return o;
}

namespace {

void checkFinite(const MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw DataFormatError(std::string("non-finite entries in ") + what);
}

}  // namespace

SimulationEnsemble makeEnsembleFromUnitDesign(MatrixXd outputs, MatrixXd designUnit,
                                              DesignScaling scaling, const MatrixXd& boundaryRaw,
                                              std::vector<std::string> boundaryNames,
                                              std::uint64_t fictitiousSeed) {
  checkFinite(outputs, "outputs");
  checkFinite(designUnit, "design");
  checkFinite(boundaryRaw, "boundary");
  const int n = static_cast<int>(outputs.rows());
  const int m = static_cast<int>(outputs.cols());
  const int s = static_cast<int>(boundaryRaw.cols());
  if (m < 2) throw DataFormatError("ensemble needs at least 2 runs");
  if (designUnit.rows() != m) throw DataFormatError("design rows must equal run count");
  if (boundaryRaw.rows() != n) throw DataFormatError("boundary rows must equal output length");
  if (static_cast<int>(boundaryNames.size()) != s)
    throw DataFormatError("boundary name count does not match column count");
  if ((designUnit.array() < -1e-12).any() || (designUnit.array() > 1 + 1e-12).any())
    throw DataFormatError("normalized design entries must lie in [0,1]");
  designUnit = designUnit.cwiseMax(0.0).cwiseMin(1.0);

  SimulationEnsemble e;
  e.outputs = std::move(outputs);
  e.design = std::move(designUnit);
  e.scaling = std::move(scaling);
  e.fictitiousSeed = fictitiousSeed;

  e.boundary.resize(n, s + 1);
  e.boundaryMean.resize(s);
  e.boundaryStd.resize(s);
  for (int j = 0; j < s; ++j) {
    const double mean = boundaryRaw.col(j).mean();
    double var = (boundaryRaw.col(j).array() - mean).square().sum() / n;
    const double sd = std::sqrt(var);
    e.boundaryMean[j] = mean;
    e.boundaryStd[j] = sd;
    if (sd > 0)
      e.boundary.col(j + 1) = (boundaryRaw.col(j).array() - mean) / sd;
    else
      e.boundary.col(j + 1).setZero();
  }
  std::mt19937_64 rng(fictitiousSeed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < n; ++i) e.boundary(i, 0) = gauss(rng);

  e.boundaryNames.reserve(s + 1);
  e.boundaryNames.push_back("x0");
  for (auto& name : boundaryNames) e.boundaryNames.push_back(std::move(name));
  return e;
}

SimulationEnsemble makeEnsemble(MatrixXd outputs, const MatrixXd& designOriginal,
                                DesignScaling scaling, const MatrixXd& boundaryRaw,
                                std::vector<std::string> boundaryNames,
                                std::uint64_t fictitiousSeed) {
  MatrixXd unit = scaling.toUnit(designOriginal);
  if ((unit.array() < -1e-9).any() || (unit.array() > 1 + 1e-9).any())
    throw DataFormatError("design entries fall outside their declared bounds");
  return makeEnsembleFromUnitDesign(std::move(outputs), std::move(unit), std::move(scaling),
                                    boundaryRaw, std::move(boundaryNames), fictitiousSeed);
}

}  // namespace calib
