#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace calib {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Invertible per-parameter affine map between original units and [0,1].
struct DesignScaling {
  std::vector<std::string> names;
  VectorXd lo;
  VectorXd hi;

  int size() const { return static_cast<int>(names.size()); }
  MatrixXd toUnit(const MatrixXd& original) const;
  MatrixXd toOriginal(const MatrixXd& unit) const;
  double toOriginal(int p, double u) const { return lo[p] + u * (hi[p] - lo[p]); }
};

// An ensemble of M simulator runs over an N-point output series.
//
// `boundary` holds the standardized time-varying boundary conditions with the
// fictitious i.i.d. standard-normal column stored first (index 0), so that
// boundary input indices agree with the alpha_0..alpha_S convention used by
// the discrepancy kernel and the R^2 report. `boundaryNames[0]` is always
// "x0".
struct SimulationEnsemble {
  MatrixXd outputs;                        // N x M
  MatrixXd design;                         // M x P, every entry in [0,1]
  DesignScaling scaling;                   // original-unit bounds per column
  MatrixXd boundary;                       // N x (S+1), standardized, col 0 = x0
  std::vector<std::string> boundaryNames;  // size S+1
  VectorXd boundaryMean;                   // size S, per raw column
  VectorXd boundaryStd;                    // size S
  std::uint64_t fictitiousSeed = 0;

  int n() const { return static_cast<int>(outputs.rows()); }
  int m() const { return static_cast<int>(outputs.cols()); }
  int p() const { return static_cast<int>(design.cols()); }
  int s() const { return static_cast<int>(boundary.cols()) - 1; }
};

// Validates, standardizes the raw boundary columns and prepends the seeded
// fictitious input. `designOriginal` is M x P in original units; `scaling`
// supplies the lo/hi used to normalize it.
SimulationEnsemble makeEnsemble(MatrixXd outputs, const MatrixXd& designOriginal,
                                DesignScaling scaling, const MatrixXd& boundaryRaw,
                                std::vector<std::string> boundaryNames,
                                std::uint64_t fictitiousSeed);

// As above but with a design already normalized to [0,1].
SimulationEnsemble makeEnsembleFromUnitDesign(MatrixXd outputs, MatrixXd designUnit,
                                              DesignScaling scaling, const MatrixXd& boundaryRaw,
                                              std::vector<std::string> boundaryNames,
                                              std::uint64_t fictitiousSeed);

}  // namespace calib
