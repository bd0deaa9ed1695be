#include "calib/basis.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

#include "calib/errors.hpp"

namespace calib {

BasisPair buildSimulationBasis(const SimulationEnsemble& ensemble, double varianceFraction) {
  if (!(varianceFraction > 0.0) || varianceFraction > 1.0)
    throw ConfigError("varianceFraction must lie in (0,1]");
  const int n = ensemble.n();
  const int m = ensemble.m();
  if (m < 2) throw DataFormatError("basis needs at least 2 runs");

  BasisPair basis;
  basis.columnMeans = ensemble.outputs.colwise().mean();
  MatrixXd centered = ensemble.outputs.rowwise() - basis.columnMeans.transpose();

  Eigen::JacobiSVD<MatrixXd> svd(centered, Eigen::ComputeThinU);
  const VectorXd& sv = svd.singularValues();
  basis.maxSingularValue = sv.size() > 0 ? sv[0] : 0.0;

  const double total = sv.squaredNorm();
  int selected = 0;
  if (total > 0) {
    double cum = 0.0;
    const double target = varianceFraction * total;
    while (selected < sv.size() && cum < target * (1.0 - 1e-12)) {
      const double s2 = sv[selected] * sv[selected];
      if (s2 <= 1e-24 * sv[0] * sv[0])
        throw NumericalError("rank-deficient ensemble: reaching the variance fraction "
                             "would select a zero singular value");
      cum += s2;
      ++selected;
    }
    // Include vectors tied with the last selected singular value.
    while (selected < sv.size() &&
           std::abs(sv[selected] - sv[selected - 1]) <= 1e-9 * sv[0]) {
      cum += sv[selected] * sv[selected];
      ++selected;
    }
    basis.varianceExplained = cum / total;
  } else {
    basis.varianceExplained = 1.0;  // nothing to explain
  }

  const int q = selected + 1;
  if (n < q + 1) throw DataFormatError("output length too short for the selected basis");

  basis.K.resize(n, q);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (int j = 0; j < selected; ++j) {
    VectorXd col = svd.matrixU().col(j) * (sv[j] * scale);
    int argmax = 0;
    col.cwiseAbs().maxCoeff(&argmax);
    if (col[argmax] < 0) col = -col;
    basis.K.col(j) = col;
  }
  basis.K.col(q - 1).setOnes();

  basis.W.resize(q, m);
  for (int j = 0; j < q; ++j) {
    const VectorXd& k = basis.K.col(j);
    basis.W.row(j) = k.transpose() * ensemble.outputs / k.squaredNorm();
  }
  return basis;
}

BasisPair buildComplementBasis(BasisPair basis) {
  const int n = basis.n();
  const int q = basis.q();
  if (q == 0) throw ConfigError("complement basis requires a populated K");
  if (q >= n)
    throw NumericalError("no complement space: Q = N leaves the discrepancy model undefined");

  const MatrixXd ktk = basis.K.transpose() * basis.K;
  MatrixXd proj = MatrixXd::Identity(n, n) - basis.K * ktk.ldlt().solve(basis.K.transpose());
  proj = 0.5 * (proj + proj.transpose());

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(proj);
  if (eig.info() != Eigen::Success)
    throw NumericalError("eigen-decomposition of the orthogonal projector failed");

  // Exact eigenvalues are {0,1}; 0.5 separates the clusters unambiguously.
  const int keep = static_cast<int>((eig.eigenvalues().array() > 0.5).count());
  if (keep != n - q)
    throw NumericalError("projector eigenvalue clusters inconsistent with N-Q");
  basis.H = eig.eigenvectors().rightCols(keep);
  return basis;
}

ObservationProjection projectObservation(const VectorXd& y, const BasisPair& basis) {
  if (!basis.hasComplement())
    throw ConfigError("projectObservation requires a complete basis (K and H)");
  if (y.size() != basis.n()) throw DataFormatError("observation length does not match basis");
  if (!y.allFinite()) throw DataFormatError("non-finite entries in observation");

  ObservationProjection p;
  p.wStar.resize(basis.q());
  for (int j = 0; j < basis.q(); ++j) {
    const VectorXd& k = basis.K.col(j);
    p.wStar[j] = k.dot(y) / k.squaredNorm();
  }
  p.vHat = basis.H.transpose() * y;
  return p;
}

}  // namespace calib
