#include "calib/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "calib/errors.hpp"

namespace calib {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double toTransformed(double x, Transform t) {
  switch (t) {
    case Transform::Logit: return std::log(x / (1.0 - x));
    case Transform::Log: return std::log(x);
    default: return x;
  }
}

double fromTransformed(double t, Transform tr) {
  switch (tr) {
    case Transform::Logit: return 1.0 / (1.0 + std::exp(-t));
    case Transform::Log: return std::exp(t);
    default: return t;
  }
}

double logJacobian(double x, Transform t) {
  switch (t) {
    case Transform::Logit:
      return (x > 0.0 && x < 1.0) ? std::log(x) + std::log1p(-x) : kNegInf;
    case Transform::Log: return x > 0.0 ? std::log(x) : kNegInf;
    default: return 0.0;
  }
}

double logSumExp(const VectorXd& v) {
  const double mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((v.array() - mx).exp().sum());
}

}  // namespace

// ---------------------------------------------------------------------------
// Schedule and prior components

VectorXd AnnealingSchedule::defaultLadder(int count) {
  if (count < 3) throw ConfigError("annealing ladder needs at least 3 temperatures");
  VectorXd t(count);
  t[0] = 0.0;
  const double tMin = 1e-4, tKnee = 0.2;
  const int geo = std::max(2, static_cast<int>(0.6 * count));
  for (int i = 1; i <= geo; ++i)
    t[i] = tMin * std::pow(tKnee / tMin, static_cast<double>(i - 1) / (geo - 1));
  const int lin = count - 1 - geo;
  for (int i = 1; i <= lin; ++i)
    t[geo + i] = tKnee + (1.0 - tKnee) * static_cast<double>(i) / lin;
  t[count - 1] = 1.0;
  return t;
}

AnnealingSchedule AnnealingSchedule::defaults(std::uint64_t seed) {
  AnnealingSchedule s;
  s.temperatures = defaultLadder(200);
  s.seed = seed;
  return s;
}

void AnnealingSchedule::validate() const {
  if (temperatures.size() < 2) throw ConfigError("schedule needs at least 2 temperatures");
  if (temperatures[0] != 0.0) throw ConfigError("first temperature must be 0");
  if (temperatures[temperatures.size() - 1] != 1.0) throw ConfigError("last temperature must be 1");
  for (int i = 1; i < temperatures.size(); ++i)
    if (!(temperatures[i] > temperatures[i - 1]))
      throw ConfigError("temperatures must be strictly increasing");
  if (chains < 1 || stepsPerTemperature < 1) throw ConfigError("chains and steps must be positive");
  if (!(proposalScale > 0.0)) throw ConfigError("proposalScale must be positive");
}

PriorComponent PriorComponent::uniform01(std::string name) {
  PriorComponent c;
  c.name = std::move(name);
  c.transform = Transform::Logit;
  c.sample = [](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return std::min(std::max(u(rng), 1e-12), 1.0 - 1e-12);
  };
  c.logDensity = [](double x) { return logPriorUniform01(x); };
  return c;
}

PriorComponent PriorComponent::beta1_01(std::string name) {
  PriorComponent c;
  c.name = std::move(name);
  c.transform = Transform::Logit;
  c.sample = [](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return std::min(std::max(1.0 - std::pow(u(rng), 10.0), 1e-12), 1.0 - 1e-12);
  };
  c.logDensity = [](double x) { return logPriorBeta1_01(x); };
  return c;
}

PriorComponent PriorComponent::gammaPrecision(std::string name, double shape, double rate) {
  PriorComponent c;
  c.name = std::move(name);
  c.transform = Transform::Log;
  c.sample = [shape, rate](std::mt19937_64& rng) {
    std::gamma_distribution<double> g(shape, 1.0 / rate);
    return std::max(g(rng), 1e-300);
  };
  c.logDensity = [shape, rate](double x) { return logPriorGamma(x, shape, rate); };
  return c;
}

PriorComponent PriorComponent::standardNormal(std::string name) {
  PriorComponent c;
  c.name = std::move(name);
  c.transform = Transform::Identity;
  c.sample = [](std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    return g(rng);
  };
  c.logDensity = [](double x) { return -0.5 * std::log(2.0 * M_PI) - 0.5 * x * x; };
  return c;
}

// ---------------------------------------------------------------------------
// AIS

namespace {

struct ChainOutput {
  VectorXd x;
  double logWeight = 0.0;
  long accepts = 0;
  long proposals = 0;
};

ChainOutput runChain(const LogDensityFn& logLik, const std::vector<PriorComponent>& prior,
                     const AnnealingSchedule& schedule, int chainIndex) {
  const int dim = static_cast<int>(prior.size());
  std::seed_seq seq{schedule.seed, static_cast<std::uint64_t>(chainIndex) + 1};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  VectorXd x(dim), lpComp(dim), ljComp(dim), scale(dim);
  for (int i = 0; i < dim; ++i) {
    x[i] = prior[i].sample(rng);
    lpComp[i] = prior[i].logDensity(x[i]);
    ljComp[i] = logJacobian(x[i], prior[i].transform);
    scale[i] = schedule.proposalScale;
  }
  double logL = logLik(x);

  ChainOutput out;
  const VectorXd& temps = schedule.temperatures;
  for (int k = 1; k < temps.size(); ++k) {
    const double t = temps[k];
    if (std::isfinite(out.logWeight)) out.logWeight += (t - temps[k - 1]) * logL;

    for (int sweep = 0; sweep < schedule.stepsPerTemperature; ++sweep) {
      for (int i = 0; i < dim; ++i) {
        ++out.proposals;
        const double tCur = toTransformed(x[i], prior[i].transform);
        const double xProp = fromTransformed(tCur + scale[i] * gauss(rng), prior[i].transform);
        const double lpProp = prior[i].logDensity(xProp);
        if (!std::isfinite(lpProp)) continue;  // outside support
        VectorXd xNew = x;
        xNew[i] = xProp;
        const double logLProp = logLik(xNew);
        const double ljProp = logJacobian(xProp, prior[i].transform);
        const double delta = (lpProp + ljProp - lpComp[i] - ljComp[i]) + t * (logLProp - logL);
        if (delta >= 0.0 || std::log(unif(rng)) < delta) {
          x[i] = xProp;
          lpComp[i] = lpProp;
          ljComp[i] = ljProp;
          logL = logLProp;
          ++out.accepts;
        }
      }
    }
    // No scale adaptation: tuning the proposal from the chain's own history
    // would break kernel invariance and bias the importance weights.
  }
  out.x = x;
  return out;
}

}  // namespace

AisResult aisRun(const std::function<LogDensityFn()>& makeLogLikelihood,
                 const std::vector<PriorComponent>& prior, const AnnealingSchedule& schedule) {
  schedule.validate();
  if (prior.empty()) throw ConfigError("aisRun: empty prior");
  const int dim = static_cast<int>(prior.size());

  std::vector<ChainOutput> chains(schedule.chains);
#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < schedule.chains; ++c) {
    LogDensityFn logLik = makeLogLikelihood();
    chains[c] = runChain(logLik, prior, schedule, c);
  }

  AisResult result;
  result.samples.resize(schedule.chains, dim);
  result.logWeights.resize(schedule.chains);
  long accepts = 0, proposals = 0;
  for (int c = 0; c < schedule.chains; ++c) {
    result.samples.row(c) = chains[c].x.transpose();
    result.logWeights[c] = chains[c].logWeight;
    accepts += chains[c].accepts;
    proposals += chains[c].proposals;
  }
  if (!result.logWeights.array().isFinite().any())
    throw NumericalError("AIS: every chain carries -infinity weight; the target is "
                         "incompatible with the prior support");

  const double lse = logSumExp(result.logWeights);
  const int nc = schedule.chains;
  result.logEvidence = lse - std::log(static_cast<double>(nc));
  // Jackknife over chains: sturdier than the delta method when the weight
  // distribution is skewed, which it typically is.
  if (nc > 1) {
    VectorXd loo(nc);
    for (int c = 0; c < nc; ++c) {
      const double frac = std::exp(result.logWeights[c] - lse);
      loo[c] = (frac < 1.0 ? lse + std::log1p(-frac) : kNegInf) -
               std::log(static_cast<double>(nc - 1));
    }
    const double looMean = loo.mean();
    result.logEvidenceSE =
        std::sqrt((nc - 1.0) / nc * (loo.array() - looMean).square().sum());
  }
  result.meanAcceptance = proposals > 0 ? static_cast<double>(accepts) / proposals : 0.0;
  return result;
}

AisResult aisRun(const LogDensityFn& logLikelihood, const std::vector<PriorComponent>& prior,
                 const AnnealingSchedule& schedule) {
  return aisRun([&logLikelihood]() { return logLikelihood; }, prior, schedule);
}

// ---------------------------------------------------------------------------
// Weighted summaries

VectorXd normalizedWeights(const VectorXd& logWeights) {
  const double lse = logSumExp(logWeights);
  VectorXd w = (logWeights.array() - lse).exp();
  for (int i = 0; i < w.size(); ++i)
    if (!std::isfinite(w[i])) w[i] = 0.0;
  return w;
}

Interval hdi(const VectorXd& samples, const VectorXd& weights, double mass) {
  if (!(mass > 0.0) || !(mass < 1.0)) throw ConfigError("hdi mass must lie in (0,1)");
  if (samples.size() == 0 || weights.size() != samples.size())
    throw DataFormatError("hdi: empty samples or weight length mismatch");
  const double total = weights.sum();
  if (!(total > 0.0)) throw NumericalError("hdi: nonpositive total weight");

  const int n = static_cast<int>(samples.size());
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return samples[a] < samples[b]; });

  if (samples[idx.front()] == samples[idx.back()])
    return {samples[idx.front()], samples[idx.front()]};

  std::vector<double> prefix(n + 1, 0.0);
  for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + weights[idx[i]];
  const double target = mass * total;

  Interval best{samples[idx.front()], samples[idx.back()]};
  double bestWidth = best.hi - best.lo;
  int j = 0;
  for (int i = 0; i < n; ++i) {
    if (j < i) j = i;
    while (j < n && prefix[j + 1] - prefix[i] < target) ++j;
    if (j >= n) break;
    const double width = samples[idx[j]] - samples[idx[i]];
    if (width < bestWidth) {
      bestWidth = width;
      best = {samples[idx[i]], samples[idx[j]]};
    }
  }
  return best;
}

Interval hdi(const VectorXd& samples, double mass) {
  return hdi(samples, VectorXd::Ones(samples.size()), mass);
}

double weightedMedian(const VectorXd& samples, const VectorXd& weights) {
  const int n = static_cast<int>(samples.size());
  if (n == 0) throw DataFormatError("weightedMedian: empty samples");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return samples[a] < samples[b]; });
  const double half = 0.5 * weights.sum();
  double cum = 0.0;
  for (int i = 0; i < n; ++i) {
    cum += weights[idx[i]];
    if (cum >= half) return samples[idx[i]];
  }
  return samples[idx.back()];
}

// ---------------------------------------------------------------------------
// Calibration target

double calibrationLogTarget(const VectorXd& zStar, const VectorXd& lambdaStarQ,
                            const EmulatorModel& model, const VectorXd& wStar,
                            const PrecisionPrior& obsPrecision) {
  if ((zStar.array() < 0.0).any() || (zStar.array() > 1.0).any()) return kNegInf;
  if ((lambdaStarQ.array() <= 0.0).any()) return kNegInf;

  double lp = 0.0;
  for (int p = 0; p < zStar.size(); ++p) lp += logPriorUniform01(zStar[p]);
  for (int j = 0; j < model.qCount(); ++j)
    lp += logPriorPrecision(lambdaStarQ[j], obsPrecision, model.perWeight[j].kTk);
  if (!std::isfinite(lp)) return kNegInf;

  const auto preds = emulatorPredict(model, zStar, lambdaStarQ);
  double lik = 0.0;
  for (int j = 0; j < model.qCount(); ++j) {
    const double r = wStar[j] - preds[j].mean;
    lik += -0.5 * std::log(2.0 * M_PI * preds[j].variance) - 0.5 * r * r / preds[j].variance;
  }
  return lp + lik;
}

LogDensityFn calibrationLogLikelihood(const EmulatorModel& model, VectorXd wStar) {
  const EmulatorModel* m = &model;
  return [m, wStar = std::move(wStar)](const VectorXd& x) {
    const int p = m->pCount();
    const int q = m->qCount();
    const VectorXd zStar = x.head(p);
    const VectorXd lambdaStarQ = x.tail(q);
    if ((zStar.array() < 0.0).any() || (zStar.array() > 1.0).any()) return kNegInf;
    if ((lambdaStarQ.array() <= 0.0).any()) return kNegInf;
    const auto preds = emulatorPredict(*m, zStar, lambdaStarQ);
    double lik = 0.0;
    for (int j = 0; j < q; ++j) {
      const double r = wStar[j] - preds[j].mean;
      lik += -0.5 * std::log(2.0 * M_PI * preds[j].variance) - 0.5 * r * r / preds[j].variance;
    }
    return lik;
  };
}

std::vector<PriorComponent> calibrationPrior(const EmulatorModel& model,
                                             const PrecisionPrior& obsPrecision,
                                             const std::vector<std::string>& paramNames) {
  std::vector<PriorComponent> prior;
  for (int p = 0; p < model.pCount(); ++p) {
    const std::string name =
        p < static_cast<int>(paramNames.size()) ? paramNames[p] : "z" + std::to_string(p + 1);
    prior.push_back(PriorComponent::uniform01(name));
  }
  for (int j = 0; j < model.qCount(); ++j) {
    const double rate = obsPrecision.rate / model.perWeight[j].kTk;
    prior.push_back(PriorComponent::gammaPrecision("lambdaStar_" + std::to_string(j + 1),
                                                   obsPrecision.shape, rate));
  }
  return prior;
}

// ---------------------------------------------------------------------------
// Discrepancy target

std::shared_ptr<const DiscrepancyData> DiscrepancyData::make(VectorXd vHat,
                                                             const MatrixXd& boundary,
                                                             MatrixXd H) {
  auto data = std::make_shared<DiscrepancyData>();
  const int n = static_cast<int>(boundary.rows());
  const int inputs = static_cast<int>(boundary.cols());
  data->vHat = std::move(vHat);
  data->H = std::move(H);
  if (data->H.rows() != n || data->H.cols() != data->vHat.size())
    throw DataFormatError("discrepancy data: H dimensions inconsistent with vHat/boundary");
  data->sqDist.reserve(inputs);
  for (int s = 0; s < inputs; ++s) {
    MatrixXd d(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double diff = boundary(i, s) - boundary(j, s);
        d(i, j) = 4.0 * diff * diff;
      }
    data->sqDist.push_back(std::move(d));
  }
  return data;
}

DiscrepancyLikelihood::DiscrepancyLikelihood(std::shared_ptr<const DiscrepancyData> data)
    : data_(std::move(data)) {}

double DiscrepancyLikelihood::operator()(const VectorXd& x) {
  const int inputs = data_->inputCount();
  if (x.size() != inputs + 2) throw DataFormatError("discrepancy likelihood: bad dimension");
  const double tau2 = x[0];
  const VectorXd alpha = x.segment(1, inputs);
  const double lambdaStar = x[inputs + 1];
  if (!(tau2 > 0.0) || !(tau2 < 1.0) || !(lambdaStar > 0.0)) return kNegInf;
  if ((alpha.array() <= 0.0).any() || (alpha.array() > 1.0).any()) return kNegInf;

  const VectorXd logAlpha = alpha.array().log();
  const int n = static_cast<int>(data_->H.rows());
  if (!cacheValid_) {
    MatrixXd logCorr = MatrixXd::Zero(n, n);
    for (int s = 0; s < inputs; ++s) logCorr += logAlpha[s] * data_->sqDist[s];
    corr_ = logCorr.array().exp();
    projected_.noalias() = data_->H.transpose() * corr_ * data_->H;
    logAlphaCached_ = logAlpha;
    cacheValid_ = true;
  } else if (logAlpha != logAlphaCached_) {
    for (int s = 0; s < inputs; ++s) {
      const double delta = logAlpha[s] - logAlphaCached_[s];
      if (delta != 0.0) corr_.array() *= (delta * data_->sqDist[s].array()).exp();
    }
    projected_.noalias() = data_->H.transpose() * corr_ * data_->H;
    logAlphaCached_ = logAlpha;
  }

  const double scale = (1.0 - tau2) / tau2;
  const int d = static_cast<int>(data_->vHat.size());
  MatrixXd cov = scale * projected_;
  cov.diagonal().array() += 1.0 / lambdaStar;
  const double jitter = kGramJitter * cov.diagonal().maxCoeff();
  cov.diagonal().array() += jitter;
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    cov.diagonal().array() += jitter * 1e4;
    llt.compute(cov);
    if (llt.info() != Eigen::Success) return kNegInf;
  }
  double logDet = 0.0;
  for (int i = 0; i < d; ++i) logDet += 2.0 * std::log(llt.matrixL()(i, i));
  const double quad = data_->vHat.dot(llt.solve(data_->vHat));
  return -0.5 * d * std::log(2.0 * M_PI) - 0.5 * logDet - 0.5 * quad;
}

double discrepancyLogTarget(const DiscrepancyKernelParams& params, double lambdaStar,
                            const VectorXd& vHat, const MatrixXd& boundary, const MatrixXd& H,
                            const PrecisionPrior& obsPrecision) {
  const double lp = logPriorDiscrepancyKernel(params) +
                    logPriorPrecision(lambdaStar, obsPrecision);
  if (!std::isfinite(lp)) return kNegInf;
  if (!(lambdaStar > 0.0)) return kNegInf;

  const int n = static_cast<int>(boundary.rows());
  const int d = static_cast<int>(vHat.size());
  MatrixXd inner = gramDiscrepancy(boundary, params);
  inner.diagonal().array() += 1.0 / lambdaStar;
  MatrixXd cov = H.transpose() * inner * H;
  const double jitter = kGramJitter * cov.diagonal().maxCoeff();
  cov.diagonal().array() += jitter;
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    cov.diagonal().array() += jitter * 1e4;
    llt.compute(cov);
    if (llt.info() != Eigen::Success) return kNegInf;
  }
  double logDet = 0.0;
  for (int i = 0; i < d; ++i) logDet += 2.0 * std::log(llt.matrixL()(i, i));
  const double quad = vHat.dot(llt.solve(vHat));
  const double lik = -0.5 * d * std::log(2.0 * M_PI) - 0.5 * logDet - 0.5 * quad;
  (void)n;
  return lp + lik;
}

std::vector<PriorComponent> discrepancyPrior(int inputCount, const PrecisionPrior& obsPrecision,
                                             const std::vector<std::string>& inputNames) {
  std::vector<PriorComponent> prior;
  prior.push_back(PriorComponent::uniform01("tau2"));
  for (int s = 0; s < inputCount; ++s) {
    const std::string name =
        s < static_cast<int>(inputNames.size()) ? inputNames[s] : "x" + std::to_string(s);
    prior.push_back(PriorComponent::beta1_01("alpha_" + name));
  }
  prior.push_back(
      PriorComponent::gammaPrecision("lambdaStar", obsPrecision.shape, obsPrecision.rate));
  return prior;
}

// ---------------------------------------------------------------------------

std::vector<double> PosteriorArchive::totalLog10Evidence() const {
  const size_t n = std::min(calibrationReplicates.size(), discrepancyReplicates.size());
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i)
    out[i] = (calibrationReplicates[i] + discrepancyReplicates[i]) / std::log(10.0);
  return out;
}

double PosteriorArchive::log10Evidence() const {
  const auto totals = totalLog10Evidence();
  if (totals.empty())
    return (logEvidenceCalibration + logEvidenceDiscrepancy) / std::log(10.0);
  double sum = 0.0;
  for (double v : totals) sum += v;
  return sum / totals.size();
}

}  // namespace calib
