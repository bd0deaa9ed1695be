#pragma once

#include <string>
#include <vector>

#include "calib/inference.hpp"
#include "calib/types.hpp"

namespace calib {

struct WeightedSamples {
  VectorXd values;
  VectorXd weights;
};

// Per-draw fraction of discrepancy variance attributable to one boundary
// input alone: every other alpha is set to 1, the GP posterior mean of the
// complement-space discrepancy is formed, and var(v)/var(vHat) is returned
// with the draw's AIS weight attached. inputIndex 0 is the fictitious input.
WeightedSamples computeR2(const MatrixXd& discrepancySamples, const VectorXd& logWeights,
                          const VectorXd& vHat, const MatrixXd& boundary, const MatrixXd& H,
                          int inputIndex);

struct DiscrepancyInput {
  std::string name;
  double r2Estimate = 0.0;
  Interval r2Hdi;
  double r2TildeEstimate = 0.0;
  Interval r2TildeHdi;
  bool significant = false;
};

struct DiscrepancyReport {
  std::vector<DiscrepancyInput> perInput;  // index 0 = fictitious input
  std::vector<int> ranking;                // sorted by r2TildeEstimate descending
};

DiscrepancyReport buildDiscrepancyReport(const PosteriorArchive& posterior, const VectorXd& vHat,
                                         const MatrixXd& boundary, const MatrixXd& H,
                                         const std::vector<std::string>& names);

struct BayesFactor {
  double estimate = 0.0;  // log10 B_{j,i}
  Interval hdi;
  std::string label;
};

// Evidence-scale label of a log10 Bayes factor; boundary values take the
// stronger category.
std::string bayesFactorLabel(double log10B);

// Replicate lists are per-run log10 evidence estimates.
BayesFactor bayesFactor(const std::vector<double>& evidenceJ, const std::vector<double>& evidenceI);

double rmse(const VectorXd& predictions, const VectorXd& observations);

}  // namespace calib
