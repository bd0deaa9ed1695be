#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "calib/types.hpp"

namespace calib {

enum class BoxVariant { SingleLayer, MultiLayer, MultiLayerInfiltration };

std::string boxVariantName(BoxVariant v);
BoxVariant boxVariantFromName(const std::string& name);

struct BoxParam {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  double initial = 0.0;  // generating value used by the synthetic truth
};

// A lumped-parameter RC variant of the test box. SingleLayer carries one wall
// capacitance node; MultiLayer splits the wall into external-mass and
// insulation nodes; MultiLayerInfiltration adds a wind-driven air-exchange
// conductance proportional to the crack area.
struct BoxVariantSpec {
  BoxVariant variant = BoxVariant::SingleLayer;
  std::map<std::string, double> parameters;
  int stepMinutes = 15;

  static std::vector<BoxParam> parameterBounds(BoxVariant variant);
  static BoxVariantSpec withInitialValues(BoxVariant variant);
  DesignScaling scaling() const;
  VectorXd parameterVector() const;  // ordered as parameterBounds
  void setFromVector(const VectorXd& values);
  void validate() const;
};

struct BoundarySeries {
  VectorXd externalTemp;    // degC
  VectorXd solarVertical;   // W/m^2
  VectorXd windSpeed;       // m/s
  VectorXd windDirection;   // degrees
  VectorXd heatPulses;      // W

  int size() const { return static_cast<int>(externalTemp.size()); }
  MatrixXd asMatrix() const;  // N x 5, column order as declared
  static const std::vector<std::string>& names();
  static BoundarySeries fromMatrix(const MatrixXd& m);
  void validate() const;
};

// Explicit-Euler integration of the RC network; returns the internal
// temperature series.
VectorXd simulate(const BoxVariantSpec& spec, const BoundarySeries& boundary, double initialTemp);

// Randomly ordered binary pulse train with log-spaced on/off durations.
VectorXd generateRolbs(double pulsePower, int totalSteps, std::uint64_t seed);

// Synthetic weather driving the box, including the ROLBS pulse train.
BoundarySeries generateBoundary(int steps, std::uint64_t seed, double pulsePower);

struct SyntheticObservation {
  VectorXd y;
  VectorXd truth;  // noiseless series
  double noiseVariance = 0.0;
};

SyntheticObservation makeSyntheticObservation(const BoxVariantSpec& truthSpec,
                                              const BoundarySeries& boundary,
                                              double noiseVarianceRatio, std::uint64_t seed,
                                              double initialTemp);

// Latin-hypercube design: each column's M values occupy distinct strata.
MatrixXd sampleDesign(int runs, int params, std::uint64_t seed);

}  // namespace calib
