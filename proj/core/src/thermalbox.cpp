#include "calib/thermalbox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "calib/errors.hpp"

namespace calib {

namespace {

// Geometry and fixed transport constants of the desk-scale box.
constexpr double kEnvelopeArea = 6.0 * 0.96 * 0.96;          // m^2
constexpr double kGlazedArea = 0.52 * 0.52;                  // m^2
constexpr double kOpaqueArea = kEnvelopeArea - kGlazedArea;  // m^2
constexpr double kWallThickness = 0.12;                      // m
constexpr double kExtLayerThickness = 0.06;                  // m, two 3 cm layers lumped
constexpr double kInsLayerThickness = 0.06;                  // m
constexpr double kFilmIn = 7.7;                              // W/m^2K
constexpr double kFilmOut = 25.0;                            // W/m^2K
constexpr double kGlazingU = 3.0;                            // W/m^2K
constexpr double kGlazingTransmittance = 0.6;
constexpr double kAirRhoCp = 1.2 * 1005.0;  // J/m^3K
constexpr double kDischargeCoeff = 0.6;
constexpr double kWindowAzimuthDeg = 180.0;
constexpr double kMaxStepDeltaT = 50.0;  // degC, Euler stability guard

double param(const BoxVariantSpec& spec, const std::string& name) {
  auto it = spec.parameters.find(name);
  if (it == spec.parameters.end())
    throw ConfigError("box variant is missing parameter '" + name + "'");
  return it->second;
}

}  // namespace

std::string boxVariantName(BoxVariant v) {
  switch (v) {
    case BoxVariant::SingleLayer: return "SingleLayer";
    case BoxVariant::MultiLayer: return "MultiLayer";
    case BoxVariant::MultiLayerInfiltration: return "MultiLayerInfiltration";
  }
  throw ConfigError("unknown box variant");
}

BoxVariant boxVariantFromName(const std::string& name) {
  if (name == "SingleLayer") return BoxVariant::SingleLayer;
  if (name == "MultiLayer") return BoxVariant::MultiLayer;
  if (name == "MultiLayerInfiltration") return BoxVariant::MultiLayerInfiltration;
  throw ConfigError("unknown box variant '" + name + "'");
}

std::vector<BoxParam> BoxVariantSpec::parameterBounds(BoxVariant variant) {
  const BoxParam rcSplit{"rc_split", 0.53, 0.98, 0.79};
  switch (variant) {
    case BoxVariant::SingleLayer:
      return {{"wall_k", 0.07, 0.13, 0.10}, {"wall_c", 1680, 3120, 2400}, rcSplit};
    case BoxVariant::MultiLayer:
      return {{"wall_ext_k", 0.7, 1.3, 1.05},
              {"wall_ext_c", 2240, 4160, 3361},
              {"wall_ins_k", 0.035, 0.065, 0.048},
              {"wall_ins_c", 112, 208, 179},
              rcSplit};
    case BoxVariant::MultiLayerInfiltration:
      return {{"wall_ext_k", 0.7, 1.3, 1.05},
              {"wall_ext_c", 2240, 4160, 3361},
              {"wall_ins_k", 0.035, 0.065, 0.048},
              {"wall_ins_c", 112, 208, 179},
              {"crack_area_mm2", 10, 1300, 790},
              rcSplit};
  }
  throw ConfigError("unknown box variant");
}

BoxVariantSpec BoxVariantSpec::withInitialValues(BoxVariant variant) {
  BoxVariantSpec spec;
  spec.variant = variant;
  for (const auto& p : parameterBounds(variant)) spec.parameters[p.name] = p.initial;
  return spec;
}

DesignScaling BoxVariantSpec::scaling() const {
  const auto bounds = parameterBounds(variant);
  DesignScaling s;
  s.lo.resize(bounds.size());
  s.hi.resize(bounds.size());
  for (size_t i = 0; i < bounds.size(); ++i) {
    s.names.push_back(bounds[i].name);
    s.lo[i] = bounds[i].lo;
    s.hi[i] = bounds[i].hi;
  }
  return s;
}

VectorXd BoxVariantSpec::parameterVector() const {
  const auto bounds = parameterBounds(variant);
  VectorXd v(bounds.size());
  for (size_t i = 0; i < bounds.size(); ++i) v[i] = param(*this, bounds[i].name);
  return v;
}

void BoxVariantSpec::setFromVector(const VectorXd& values) {
  const auto bounds = parameterBounds(variant);
  if (values.size() != static_cast<int>(bounds.size()))
    throw ConfigError("parameter vector length does not match variant");
  for (size_t i = 0; i < bounds.size(); ++i) parameters[bounds[i].name] = values[i];
}

void BoxVariantSpec::validate() const {
  if (stepMinutes <= 0) throw ConfigError("stepMinutes must be positive");
  for (const auto& p : parameterBounds(variant)) {
    const double v = param(*this, p.name);
    if (v < p.lo || v > p.hi)
      throw ConfigError("parameter '" + p.name + "' outside its bounds");
  }
}

const std::vector<std::string>& BoundarySeries::names() {
  static const std::vector<std::string> n = {"Te", "Gv", "Ws", "Wd", "RHP"};
  return n;
}

MatrixXd BoundarySeries::asMatrix() const {
  MatrixXd m(size(), 5);
  m.col(0) = externalTemp;
  m.col(1) = solarVertical;
  m.col(2) = windSpeed;
  m.col(3) = windDirection;
  m.col(4) = heatPulses;
  return m;
}

BoundarySeries BoundarySeries::fromMatrix(const MatrixXd& m) {
  if (m.cols() != 5) throw DataFormatError("boundary matrix must have 5 columns");
  BoundarySeries b;
  b.externalTemp = m.col(0);
  b.solarVertical = m.col(1);
  b.windSpeed = m.col(2);
  b.windDirection = m.col(3);
  b.heatPulses = m.col(4);
  return b;
}

void BoundarySeries::validate() const {
  const int n = size();
  if (solarVertical.size() != n || windSpeed.size() != n || windDirection.size() != n ||
      heatPulses.size() != n)
    throw DataFormatError("boundary series lengths differ");
  if ((heatPulses.array() < 0).any()) throw DataFormatError("heat pulses must be nonnegative");
  if ((windSpeed.array() < 0).any()) throw DataFormatError("wind speed must be nonnegative");
}

VectorXd simulate(const BoxVariantSpec& spec, const BoundarySeries& boundary,
                  double initialTemp) {
  spec.validate();
  boundary.validate();
  const int n = boundary.size();
  if (n < 2) throw DataFormatError("simulation needs at least 2 steps");
  const double dt = spec.stepMinutes * 60.0;
  const double glazingUA = kGlazingU * kGlazedArea;
  const double radFrac = param(spec, "rc_split");
  const bool multi = spec.variant != BoxVariant::SingleLayer;
  const bool infiltration = spec.variant == BoxVariant::MultiLayerInfiltration;
  const double crackArea = infiltration ? param(spec, "crack_area_mm2") * 1e-6 : 0.0;

  // Node conductances and capacitances.
  double gIn, gMid = 0.0, gOut, cap1, cap2 = 0.0;
  if (multi) {
    const double kExt = param(spec, "wall_ext_k");
    const double kIns = param(spec, "wall_ins_k");
    gIn = kOpaqueArea / (1.0 / kFilmIn + 0.5 * kExtLayerThickness / kExt);
    gMid = kOpaqueArea / (0.5 * kExtLayerThickness / kExt + 0.5 * kInsLayerThickness / kIns);
    gOut = kOpaqueArea / (0.5 * kInsLayerThickness / kIns + 1.0 / kFilmOut);
    cap1 = param(spec, "wall_ext_c") * 1e3 * kExtLayerThickness * kOpaqueArea;
    cap2 = param(spec, "wall_ins_c") * 1e3 * kInsLayerThickness * kOpaqueArea;
  } else {
    const double kWall = param(spec, "wall_k");
    gIn = kOpaqueArea / (1.0 / kFilmIn + 0.5 * kWallThickness / kWall);
    gOut = kOpaqueArea / (0.5 * kWallThickness / kWall + 1.0 / kFilmOut);
    cap1 = param(spec, "wall_c") * 1e3 * kWallThickness * kOpaqueArea;
  }

  VectorXd tInternal(n);
  double t1 = initialTemp, t2 = initialTemp;
  for (int i = 0; i < n; ++i) {
    const double te = boundary.externalTemp[i];
    const double pulse = boundary.heatPulses[i];
    const double solar = kGlazingTransmittance * kGlazedArea * boundary.solarVertical[i];
    double gInf = 0.0;
    if (infiltration) {
      const double dirRad = (boundary.windDirection[i] - kWindowAzimuthDeg) * M_PI / 180.0;
      const double dirWeight = 0.5 * (1.0 + std::cos(dirRad));
      gInf = kAirRhoCp * kDischargeCoeff * crackArea * boundary.windSpeed[i] * dirWeight;
    }

    // Air node treated quasi-statically: its capacity is negligible next to
    // the wall nodes at a 15-minute step.
    const double qConv = (1.0 - radFrac) * pulse;
    const double denom = gIn + glazingUA + gInf;
    const double tIn = (gIn * t1 + (glazingUA + gInf) * te + qConv) / denom;
    tInternal[i] = tIn;

    const double qRad = radFrac * pulse + solar;
    double d1, d2 = 0.0;
    if (multi) {
      d1 = dt / cap1 * (gIn * (tIn - t1) + gMid * (t2 - t1) + qRad);
      d2 = dt / cap2 * (gMid * (t1 - t2) + gOut * (te - t2));
    } else {
      d1 = dt / cap1 * (gIn * (tIn - t1) + gOut * (te - t1) + qRad);
    }
    if (std::abs(d1) > kMaxStepDeltaT || std::abs(d2) > kMaxStepDeltaT)
      throw NumericalError("Euler step unstable: reduce step");
    t1 += d1;
    t2 += d2;
  }
  return tInternal;
}

VectorXd generateRolbs(double pulsePower, int totalSteps, std::uint64_t seed) {
  if (totalSteps < 16) throw ConfigError("ROLBS sequence needs at least 16 steps");
  std::mt19937_64 rng(seed);
  // Logarithmically spaced on/off durations, capped by the series length.
  std::vector<int> durations;
  for (int d = 1; d <= std::max(2, totalSteps / 8); d *= 2) durations.push_back(d);
  std::uniform_int_distribution<size_t> pick(0, durations.size() - 1);
  std::bernoulli_distribution startOn(0.5);

  VectorXd pulses = VectorXd::Zero(totalSteps);
  bool on = startOn(rng);
  int i = 0;
  while (i < totalSteps) {
    const int len = std::min(durations[pick(rng)], totalSteps - i);
    if (on) pulses.segment(i, len).setConstant(pulsePower);
    i += len;
    on = !on;
  }
  return pulses;
}

BoundarySeries generateBoundary(int steps, std::uint64_t seed, double pulsePower) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  BoundarySeries b;
  b.externalTemp.resize(steps);
  b.solarVertical.resize(steps);
  b.windSpeed.resize(steps);
  b.windDirection.resize(steps);

  double arTemp = 0.0, arWind = 0.0, arDir = 0.0;
  for (int i = 0; i < steps; ++i) {
    const double hour = i * 0.25;  // 15-minute steps
    const double dayPhase = 2.0 * M_PI * (hour - 9.0) / 24.0;
    arTemp = 0.9 * arTemp + 0.5 * gauss(rng);
    b.externalTemp[i] = 18.0 + 6.0 * std::sin(dayPhase) + arTemp;

    const double hod = std::fmod(hour, 24.0);
    const double sunUp = (hod > 6.0 && hod < 18.0) ? std::sin(M_PI * (hod - 6.0) / 12.0) : 0.0;
    const double cloud = std::clamp(1.0 + 0.25 * gauss(rng), 0.0, 1.3);
    b.solarVertical[i] = 600.0 * sunUp * cloud;

    arWind = 0.85 * arWind + 0.8 * gauss(rng);
    b.windSpeed[i] = std::max(0.0, 3.0 + 1.5 * std::sin(2.0 * M_PI * hour / 24.0 + 1.0) + arWind);

    arDir = 0.95 * arDir + 8.0 * gauss(rng);
    b.windDirection[i] =
        std::fmod(200.0 + 70.0 * std::sin(2.0 * M_PI * hour / 31.0) + arDir + 720.0, 360.0);
  }
  b.heatPulses = generateRolbs(pulsePower, steps, seed ^ 0x524f4c4253ULL);
  return b;
}

SyntheticObservation makeSyntheticObservation(const BoxVariantSpec& truthSpec,
                                              const BoundarySeries& boundary,
                                              double noiseVarianceRatio, std::uint64_t seed,
                                              double initialTemp) {
  if (noiseVarianceRatio < 0) throw ConfigError("noiseVarianceRatio must be nonnegative");
  SyntheticObservation obs;
  obs.truth = simulate(truthSpec, boundary, initialTemp);
  const double mean = obs.truth.mean();
  const double var = (obs.truth.array() - mean).square().sum() / obs.truth.size();
  obs.noiseVariance = noiseVarianceRatio * var;
  obs.y = obs.truth;
  if (obs.noiseVariance > 0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(obs.noiseVariance));
    for (int i = 0; i < obs.y.size(); ++i) obs.y[i] += gauss(rng);
  }
  return obs;
}

MatrixXd sampleDesign(int runs, int params, std::uint64_t seed) {
  if (runs < 2) throw ConfigError("design needs at least 2 runs");
  if (params < 1) throw ConfigError("design needs at least 1 parameter");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  MatrixXd design(runs, params);
  std::vector<int> perm(runs);
  for (int p = 0; p < params; ++p) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < runs; ++i) design(i, p) = (perm[i] + unif(rng)) / runs;
  }
  return design;
}

}  // namespace calib
