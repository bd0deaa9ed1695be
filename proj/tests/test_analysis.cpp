#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "calib/analysis.hpp"
#include "calib/basis.hpp"
#include "calib/errors.hpp"

using namespace calib;

namespace {

MatrixXd onesComplement(int n) {
  BasisPair basis;
  basis.K = MatrixXd::Ones(n, 1);
  return buildComplementBasis(basis).H;
}

// Draw rows laid out as [tau2, alpha_0, alpha_1, lambdaStar].
MatrixXd drawRows(const std::vector<std::array<double, 4>>& rows) {
  MatrixXd m(static_cast<int>(rows.size()), 4);
  for (size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < 4; ++j) m(static_cast<int>(i), j) = rows[i][j];
  return m;
}

}  // namespace

TEST_CASE("compute_r2") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss;
  const int n = 24;
  MatrixXd H = onesComplement(n);
  MatrixXd boundary(n, 2);
  VectorXd smooth(n);
  for (int i = 0; i < n; ++i) {
    boundary(i, 0) = gauss(rng);                       // fictitious input
    boundary(i, 1) = std::sin(2.0 * M_PI * i / n) * 1.4;  // structured input
    smooth[i] = 2.0 * boundary(i, 1) + 0.05 * gauss(rng);
  }
  VectorXd vHat = H.transpose() * smooth;

  SUBCASE("alpha_i = 1 gives exactly zero attribution") {
    MatrixXd draws = drawRows({{0.5, 1.0, 0.6, 5.0}});
    VectorXd lw = VectorXd::Zero(1);
    WeightedSamples r2 = computeR2(draws, lw, vHat, boundary, H, 0);
    CHECK(r2.values[0] == doctest::Approx(0.0).epsilon(1e-10));
  }
  SUBCASE("structured input dominates the fictitious one") {
    std::vector<std::array<double, 4>> rows;
    std::uniform_real_distribution<double> unif(0.3, 0.8);
    for (int i = 0; i < 20; ++i) rows.push_back({unif(rng), unif(rng), unif(rng), 20.0});
    MatrixXd draws = drawRows(rows);
    VectorXd lw = VectorXd::Zero(20);
    WeightedSamples r0 = computeR2(draws, lw, vHat, boundary, H, 0);
    WeightedSamples r1 = computeR2(draws, lw, vHat, boundary, H, 1);
    VectorXd w = normalizedWeights(lw);
    CHECK(weightedMedian(r1.values, w) > weightedMedian(r0.values, w));
    CHECK(r1.values.maxCoeff() <= 1.05);
    CHECK(r0.values.maxCoeff() <= 1.05);
    CHECK(r0.values.minCoeff() >= 0.0);
  }
  SUBCASE("observation inside span(K) is rejected") {
    MatrixXd draws = drawRows({{0.5, 0.5, 0.5, 5.0}});
    VectorXd lw = VectorXd::Zero(1);
    CHECK_THROWS_WITH_AS(computeR2(draws, lw, VectorXd::Zero(n - 1), boundary, H, 0),
                         doctest::Contains("no discrepancy variance"), NumericalError);
  }
}

TEST_CASE("discrepancy report flags and ranking") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss;
  const int n = 24;
  MatrixXd H = onesComplement(n);
  MatrixXd boundary(n, 2);
  VectorXd smooth(n);
  for (int i = 0; i < n; ++i) {
    boundary(i, 0) = gauss(rng);
    boundary(i, 1) = std::sin(2.0 * M_PI * i / n) * 1.4;
    smooth[i] = 2.0 * boundary(i, 1) + 0.05 * gauss(rng);
  }
  VectorXd vHat = H.transpose() * smooth;

  PosteriorArchive posterior;
  std::vector<std::array<double, 4>> rows;
  std::uniform_real_distribution<double> unif(0.3, 0.8);
  for (int i = 0; i < 24; ++i) rows.push_back({unif(rng), unif(rng), unif(rng), 20.0});
  posterior.discrepancySamples = drawRows(rows);
  posterior.discrepancyLogWeights = VectorXd::Zero(24);

  DiscrepancyReport report =
      buildDiscrepancyReport(posterior, vHat, boundary, H, {"x0", "Ws"});
  REQUIRE(report.perInput.size() == 2);
  CHECK(report.perInput[0].name == "x0");
  CHECK_FALSE(report.perInput[0].significant);  // fictitious input, by construction
  CHECK(report.perInput[0].r2TildeEstimate == doctest::Approx(0.0));
  CHECK(report.perInput[1].r2TildeEstimate > 0.0);
  CHECK(report.ranking[0] == 1);
  for (const auto& in : report.perInput) {
    CHECK(in.r2TildeHdi.lo <= in.r2TildeEstimate + 1e-12);
    CHECK(in.r2TildeHdi.hi >= in.r2TildeEstimate - 1e-12);
    CHECK(in.significant == (in.r2TildeHdi.lo > 0.0 || in.r2TildeHdi.hi < 0.0));
  }
}

TEST_CASE("bayes factors") {
  SUBCASE("published-style totals") {
    BayesFactor bf = bayesFactor({812.17}, {-52.79});
    CHECK(bf.estimate == doctest::Approx(864.96).epsilon(1e-12));
    CHECK(bf.label == "decisive");
  }
  SUBCASE("self comparison") {
    std::vector<double> reps{3.0, 3.2, 2.8};
    BayesFactor bf = bayesFactor(reps, reps);
    CHECK(bf.estimate == doctest::Approx(0.0));
    CHECK(bf.label == "weak");
    CHECK(bf.hdi.lo <= 0.0);
    CHECK(bf.hdi.hi >= 0.0);
  }
  SUBCASE("label boundaries take the stronger category") {
    CHECK(bayesFactorLabel(-0.1) == "negative");
    CHECK(bayesFactorLabel(0.0) == "weak");
    CHECK(bayesFactorLabel(0.49) == "weak");
    CHECK(bayesFactorLabel(0.5) == "substantial");
    CHECK(bayesFactorLabel(1.0) == "strong");
    CHECK(bayesFactorLabel(1.5) == "strong");
    CHECK(bayesFactorLabel(2.0) == "decisive");
    CHECK(bayesFactorLabel(900.0) == "decisive");
  }
  SUBCASE("antisymmetry and transitivity") {
    std::vector<double> a{10.0, 10.4}, b{7.1, 6.9}, c{1.0, 1.2};
    const double ab = bayesFactor(a, b).estimate;
    const double ba = bayesFactor(b, a).estimate;
    const double bc = bayesFactor(b, c).estimate;
    const double ac = bayesFactor(a, c).estimate;
    CHECK(ab == -ba);
    CHECK(ac == doctest::Approx(ab + bc).epsilon(1e-12));
  }
  SUBCASE("empty replicate list rejected") {
    CHECK_THROWS(bayesFactor({}, {1.0}));
  }
}

TEST_CASE("rmse") {
  VectorXd a(2), b(2);
  a << 0, 0;
  b << 3, 4;
  CHECK(rmse(a, a) == 0.0);
  CHECK(rmse(a, b) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-12));
  VectorXd shifted = a.array() + 2.5;
  CHECK(rmse(a, shifted) == doctest::Approx(2.5).epsilon(1e-12));
  VectorXd wrong(3);
  CHECK_THROWS(rmse(a, wrong));
}
