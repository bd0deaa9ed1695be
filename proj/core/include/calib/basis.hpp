#pragma once

#include "calib/types.hpp"

namespace calib {

// Orthogonal simulation basis K (SVD vectors scaled by s_q/sqrt(M), plus the
// all-ones column) and its orthonormal complement H.
struct BasisPair {
  MatrixXd K;            // N x Q
  MatrixXd H;            // N x (N-Q); empty until buildComplementBasis
  MatrixXd W;            // Q x M simulation weights
  VectorXd columnMeans;  // per-run subtracted means, size M
  double varianceExplained = 1.0;
  double maxSingularValue = 0.0;  // of the centered ensemble, for the lambda prior rate

  int n() const { return static_cast<int>(K.rows()); }
  int q() const { return static_cast<int>(K.cols()); }
  bool hasComplement() const { return H.cols() > 0; }
};

// Builds K and W from the ensemble. Each output column is centered on its own
// mean; left singular vectors are kept in decreasing singular-value order
// until their cumulative squared singular values reach `varianceFraction` of
// the total, scaled by s_q/sqrt(M) with the sign of the largest-magnitude
// entry fixed positive. The last column of K is the all-ones vector.
BasisPair buildSimulationBasis(const SimulationEnsemble& ensemble, double varianceFraction);

// Populates H with an orthonormal basis of the eigenvalue-1 eigenspace of
// P = I - K (K^T K)^-1 K^T.
BasisPair buildComplementBasis(BasisPair basis);

struct ObservationProjection {
  VectorXd wStar;  // Q
  VectorXd vHat;   // N - Q
};

ObservationProjection projectObservation(const VectorXd& y, const BasisPair& basis);

}  // namespace calib
