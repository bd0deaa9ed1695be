#include "calib/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "calib/errors.hpp"

namespace calib {

namespace {

double populationVariance(const VectorXd& v) {
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / v.size();
}

}  // namespace

WeightedSamples computeR2(const MatrixXd& discrepancySamples, const VectorXd& logWeights,
                          const VectorXd& vHat, const MatrixXd& boundary, const MatrixXd& H,
                          int inputIndex) {
  const int inputs = static_cast<int>(boundary.cols());
  const int draws = static_cast<int>(discrepancySamples.rows());
  if (discrepancySamples.cols() != inputs + 2)
    throw DataFormatError("computeR2: sample layout does not match boundary inputs");
  if (inputIndex < 0 || inputIndex >= inputs)
    throw DataFormatError("computeR2: inputIndex out of range");
  if (draws == 0) throw DataFormatError("computeR2: archive contains no discrepancy samples");

  const double varVHat = populationVariance(vHat);
  if (!(varVHat > 0.0))
    throw NumericalError("no discrepancy variance; analysis undefined (observation lies in "
                         "the simulation span)");

  const int n = static_cast<int>(boundary.rows());
  MatrixXd sqDist(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double d = boundary(i, inputIndex) - boundary(j, inputIndex);
      sqDist(i, j) = 4.0 * d * d;
    }

  WeightedSamples out;
  out.values.resize(draws);
  out.weights = normalizedWeights(logWeights);

#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < draws; ++r) {
    const double tau2 = discrepancySamples(r, 0);
    const double alphaI = discrepancySamples(r, 1 + inputIndex);
    const double lambdaStar = discrepancySamples(r, inputs + 1);
    const double scale = (1.0 - tau2) / tau2;

    // zeta with all other alphas at 1: scale * alpha_i^{4 dx^2}.
    const MatrixXd zetaI = scale * (std::log(alphaI) * sqDist.array()).exp();
    const MatrixXd g = H.transpose() * zetaI * H;
    MatrixXd cov = g;
    cov.diagonal().array() += 1.0 / lambdaStar;
    const double jitter = kGramJitter * cov.diagonal().maxCoeff();
    cov.diagonal().array() += jitter;
    Eigen::LLT<MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
      cov.diagonal().array() += jitter * 1e4;
      llt.compute(cov);
    }
    if (llt.info() != Eigen::Success) {
      out.values[r] = 0.0;
      continue;
    }
    const VectorXd v = g * llt.solve(vHat);
    out.values[r] = populationVariance(v) / varVHat;
  }
  return out;
}

DiscrepancyReport buildDiscrepancyReport(const PosteriorArchive& posterior, const VectorXd& vHat,
                                         const MatrixXd& boundary, const MatrixXd& H,
                                         const std::vector<std::string>& names) {
  const int inputs = static_cast<int>(boundary.cols());
  if (static_cast<int>(names.size()) != inputs)
    throw DataFormatError("discrepancy report: name count does not match boundary inputs");

  std::vector<WeightedSamples> r2(inputs);
  for (int s = 0; s < inputs; ++s)
    r2[s] = computeR2(posterior.discrepancySamples, posterior.discrepancyLogWeights, vHat,
                      boundary, H, s);

  DiscrepancyReport report;
  report.perInput.resize(inputs);
  for (int s = 0; s < inputs; ++s) {
    DiscrepancyInput& entry = report.perInput[s];
    entry.name = names[s];
    entry.r2Estimate = weightedMedian(r2[s].values, r2[s].weights);
    entry.r2Hdi = hdi(r2[s].values, r2[s].weights, 0.95);
    // Per-draw pairing with the fictitious baseline; R~^2_0 is identically 0.
    const VectorXd tilde = r2[s].values - r2[0].values;
    entry.r2TildeEstimate = weightedMedian(tilde, r2[s].weights);
    entry.r2TildeHdi = hdi(tilde, r2[s].weights, 0.95);
    entry.significant =
        s != 0 && (entry.r2TildeHdi.lo > 0.0 || entry.r2TildeHdi.hi < 0.0);
  }

  report.ranking.resize(inputs);
  std::iota(report.ranking.begin(), report.ranking.end(), 0);
  std::sort(report.ranking.begin(), report.ranking.end(), [&](int a, int b) {
    return report.perInput[a].r2TildeEstimate > report.perInput[b].r2TildeEstimate;
  });
  return report;
}

std::string bayesFactorLabel(double log10B) {
  if (log10B < 0.0) return "negative";
  if (log10B < 0.5) return "weak";
  if (log10B < 1.0) return "substantial";
  if (log10B < 2.0) return "strong";
  return "decisive";
}

BayesFactor bayesFactor(const std::vector<double>& evidenceJ,
                        const std::vector<double>& evidenceI) {
  if (evidenceJ.empty() || evidenceI.empty())
    throw DataFormatError("bayesFactor: empty replicate list");
  const double meanJ =
      std::accumulate(evidenceJ.begin(), evidenceJ.end(), 0.0) / evidenceJ.size();
  const double meanI =
      std::accumulate(evidenceI.begin(), evidenceI.end(), 0.0) / evidenceI.size();

  BayesFactor bf;
  bf.estimate = meanJ - meanI;
  VectorXd crossDiff(evidenceJ.size() * evidenceI.size());
  int k = 0;
  for (double j : evidenceJ)
    for (double i : evidenceI) crossDiff[k++] = j - i;
  bf.hdi = crossDiff.size() > 1 ? hdi(crossDiff, 0.95) : Interval{bf.estimate, bf.estimate};
  bf.label = bayesFactorLabel(bf.estimate);
  return bf;
}

double rmse(const VectorXd& predictions, const VectorXd& observations) {
  if (predictions.size() != observations.size())
    throw DataFormatError("rmse: length mismatch");
  return std::sqrt((predictions - observations).squaredNorm() / predictions.size());
}

}  // namespace calib
