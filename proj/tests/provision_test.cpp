#include <iqp/provision.hpp>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include <iqp/errors.hpp>
#include <iqp/matrix.hpp>

namespace iqp {
namespace {

TEST(SoftmaxTest, TwoWeightFixture) {
  const auto w = softmax_weights({0.0, std::log(3.0)});
  ASSERT_EQ(w.normalized.size(), 2u);
  EXPECT_NEAR(w.normalized[0], 0.25, 1e-12);
  EXPECT_NEAR(w.normalized[1], 0.75, 1e-12);
  EXPECT_DOUBLE_EQ(w.raw[1], std::log(3.0));  // raw weights pass through
}

TEST(SoftmaxTest, EqualWeightsShareEvenly) {
  const auto w = softmax_weights(std::vector<double>(6, 0.37));
  double total = 0.0;
  for (double v : w.normalized) {
    EXPECT_NEAR(v, 1.0 / 6.0, 1e-12);
    total += v;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(SoftmaxTest, InvariantUnderCommonShift) {
  const std::vector<double> raw = {0.1, 1.4, 0.9, 2.2};
  const auto a = softmax_weights(raw);
  std::vector<double> shifted = raw;
  for (double& v : shifted) v += 123.0;
  const auto b = softmax_weights(shifted);
  for (std::size_t i = 0; i < raw.size(); ++i)
    EXPECT_NEAR(a.normalized[i], b.normalized[i], 1e-12);
}

TEST(SoftmaxTest, LargeWeightsDoNotOverflow) {
  const auto w = softmax_weights({1000.0, 1000.0 + std::log(3.0)});
  EXPECT_NEAR(w.normalized[0], 0.25, 1e-12);
  EXPECT_NEAR(w.normalized[1], 0.75, 1e-12);
}

TEST(SoftmaxTest, RejectsBadInput) {
  EXPECT_THROW(softmax_weights({}), EmptyInputError);
  EXPECT_THROW(softmax_weights({1.0, std::numeric_limits<double>::quiet_NaN()}),
               NonFiniteInputError);
  EXPECT_THROW(softmax_weights({std::numeric_limits<double>::infinity()}),
               NonFiniteInputError);
}

TEST(FeatureScaleTest, MapsColumnsOntoUnitInterval) {
  const DataMatrix m = {{2.0, 0.0}, {4.0, 100.0}, {10.0, 50.0}};
  const auto [scaled, params] = feature_scale(m);
  EXPECT_DOUBLE_EQ(scaled.at(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(scaled.at(1, 0), 0.25);
  EXPECT_DOUBLE_EQ(scaled.at(2, 0), 1.0);
  EXPECT_DOUBLE_EQ(scaled.at(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(scaled.at(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(scaled.at(2, 1), 0.5);
  EXPECT_DOUBLE_EQ(params.min[0], 2.0);
  EXPECT_DOUBLE_EQ(params.max[0], 10.0);
}

TEST(FeatureScaleTest, ParamsMapThresholdsTheSameWay) {
  const DataMatrix m = {{2.0}, {4.0}, {10.0}};
  const auto [scaled, params] = feature_scale(m);
  EXPECT_DOUBLE_EQ(params.apply(0, 6.0), 0.5);
  EXPECT_DOUBLE_EQ(params.apply(0, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(params.apply(0, 10.0), 1.0);
}

TEST(FeatureScaleTest, ConstantColumnBecomesZerosWithWarning) {
  const DataMatrix m = {{5.0, 1.0}, {5.0, 2.0}};
  std::vector<std::string> warnings;
  const auto [scaled, params] = feature_scale(m, &warnings);
  EXPECT_DOUBLE_EQ(scaled.at(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(scaled.at(1, 0), 0.0);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("constant"), std::string::npos);
  EXPECT_DOUBLE_EQ(params.apply(0, 5.0), 0.0);  // threshold collapses too
}

TEST(FeatureScaleTest, EmptyMatrixIsAnError) {
  EXPECT_THROW(feature_scale(DataMatrix{}), EmptyInputError);
}

TEST(QualityProvisionTest, SingleFeatureFixture) {
  // Deviations 0, 0.2, 0.4 min-max to 0, 0.5, 1 and flip to 1, 0.5, 0.
  const DataMatrix X = {{0.5}, {0.7}, {0.1}};
  const auto scores = quality_provision(X, {0.5}, {1.0});
  ASSERT_EQ(scores.score.size(), 3u);
  EXPECT_NEAR(scores.score[0], 1.0, 1e-12);
  EXPECT_NEAR(scores.score[1], 0.5, 1e-12);
  EXPECT_NEAR(scores.score[2], 0.0, 1e-12);
  EXPECT_NEAR(scores.raw_deviation[0], 0.0, 1e-12);
  EXPECT_NEAR(scores.raw_deviation[1], 0.2, 1e-12);
  EXPECT_NEAR(scores.raw_deviation[2], 0.4, 1e-12);
}

TEST(QualityProvisionTest, TractExactlyAtEveryThresholdScoresOne) {
  const DataMatrix X = {{0.3, 0.9}, {0.1, 0.2}};
  const auto scores = quality_provision(X, {0.3, 0.9}, {0.5, 0.5});
  EXPECT_DOUBLE_EQ(scores.score[0], 1.0);
  EXPECT_DOUBLE_EQ(scores.score[1], 0.0);
}

TEST(QualityProvisionTest, ScoresStayInsideUnitInterval) {
  const DataMatrix X = {{0.0, 1.0}, {0.4, 0.2}, {0.9, 0.9}, {0.5, 0.5}};
  const auto scores = quality_provision(X, {0.5, 0.5}, {0.7, 0.3});
  for (double s : scores.score) {
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(QualityProvisionTest, RankingIgnoresACommonWeightScale) {
  const DataMatrix X = {{0.1, 0.8}, {0.6, 0.3}, {0.2, 0.2}, {0.9, 0.9}};
  const std::vector<double> t = {0.5, 0.4};
  const auto a = quality_provision(X, t, {0.25, 0.75});
  const auto b = quality_provision(X, t, {0.75, 2.25});  // everything x3
  for (std::size_t r = 0; r < X.rows(); ++r)
    EXPECT_NEAR(a.score[r], b.score[r], 1e-12);
}

TEST(QualityProvisionTest, IdenticalDeviationsCollapseToOneWithWarning) {
  // Quarters stay exact in binary, so both deviations are exactly 0.25.
  const DataMatrix X = {{0.25}, {0.75}};
  std::vector<std::string> warnings;
  const auto scores = quality_provision(X, {0.5}, {1.0}, &warnings);
  EXPECT_DOUBLE_EQ(scores.score[0], 1.0);
  EXPECT_DOUBLE_EQ(scores.score[1], 1.0);
  ASSERT_EQ(warnings.size(), 1u);
}

TEST(QualityProvisionTest, RejectsMalformedInputs) {
  const DataMatrix X = {{0.5, 0.5}};
  EXPECT_THROW(quality_provision(DataMatrix{}, {0.5}, {1.0}), EmptyInputError);
  EXPECT_THROW(quality_provision(X, {0.5}, {0.5, 0.5}), MissingThresholdError);
  EXPECT_THROW(quality_provision(X, {0.5, 0.5}, {1.0}), MissingWeightError);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(quality_provision(X, {0.5, nan}, {0.5, 0.5}), MissingThresholdError);
  EXPECT_THROW(quality_provision(X, {0.5, 0.5}, {0.5, nan}), MissingWeightError);
}

TEST(QuantityProvisionTest, MoreOfEverythingScoresHigher) {
  const DataMatrix X = {{0.0}, {5.0}, {10.0}};
  const auto scores = quantity_provision(X);
  EXPECT_NEAR(scores.score[0], 0.0, 1e-12);
  EXPECT_NEAR(scores.score[1], 0.5, 1e-12);
  EXPECT_NEAR(scores.score[2], 1.0, 1e-12);
}

TEST(QuantityProvisionTest, ComplementaryTractsDegenerateToOnes) {
  // Each tract is the same distance from the per-column maxima, so the
  // min-max step has nothing to spread.
  const DataMatrix X = {{1.0, 0.0}, {0.0, 1.0}};
  std::vector<std::string> warnings;
  const auto scores = quantity_provision(X, &warnings);
  EXPECT_DOUBLE_EQ(scores.score[0], 1.0);
  EXPECT_DOUBLE_EQ(scores.score[1], 1.0);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(QuantityProvisionTest, MatchesQualityUnderMaxThresholdsAndEqualWeights) {
  const DataMatrix X = {{0.1, 0.9, 0.4}, {0.8, 0.2, 0.6}, {0.5, 0.5, 1.0}, {0.0, 0.3, 0.2}};
  std::vector<double> tmax(X.cols());
  for (std::size_t c = 0; c < X.cols(); ++c) {
    tmax[c] = X.at(0, c);
    for (std::size_t r = 1; r < X.rows(); ++r) tmax[c] = std::max(tmax[c], X.at(r, c));
  }
  const std::vector<double> w(X.cols(), 1.0 / static_cast<double>(X.cols()));
  const auto via_quality = quality_provision(X, tmax, w);
  const auto via_quantity = quantity_provision(X);
  for (std::size_t r = 0; r < X.rows(); ++r) {
    EXPECT_DOUBLE_EQ(via_quantity.score[r], via_quality.score[r]);
    EXPECT_DOUBLE_EQ(via_quantity.raw_deviation[r], via_quality.raw_deviation[r]);
  }
}

}  // namespace
}  // namespace iqp
