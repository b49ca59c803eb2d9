#include <iqp/labeling.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include <iqp/errors.hpp>
#include <iqp/matrix.hpp>

namespace iqp {
namespace {

TEST(StandardizeTest, ProducesPopulationZScores) {
  DataMatrix m{{0.0}, {1.0}, {2.0}};
  auto [z, params] = standardize(m);
  // mean 1, population sd sqrt(2/3): z = {-sqrt(1.5), 0, +sqrt(1.5)}
  EXPECT_NEAR(z.at(0, 0), -1.224744871391589, 1e-12);
  EXPECT_NEAR(z.at(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(z.at(2, 0), 1.224744871391589, 1e-12);
  EXPECT_DOUBLE_EQ(params.mean[0], 1.0);
  EXPECT_NEAR(params.sd[0], std::sqrt(2.0 / 3.0), 1e-15);
}

TEST(StandardizeTest, ConstantColumnBecomesZerosWithWarning) {
  DataMatrix m{{5.0, 1.0}, {5.0, 2.0}, {5.0, 3.0}};
  std::vector<std::string> warnings;
  auto [z, params] = standardize(m, &warnings);
  for (std::size_t r = 0; r < 3; ++r) EXPECT_DOUBLE_EQ(z.at(r, 0), 0.0);
  EXPECT_DOUBLE_EQ(params.sd[0], 0.0);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("constant"), std::string::npos);
}

TEST(KmeansTwoTest, SeparatesTwoObviousGroups) {
  DataMatrix points{{0.0}, {1.0}, {9.0}, {10.0}};
  const auto km = kmeans_two(points, 7);
  EXPECT_EQ(km.assignments[0], km.assignments[1]);
  EXPECT_EQ(km.assignments[2], km.assignments[3]);
  EXPECT_NE(km.assignments[0], km.assignments[2]);
  // Cluster means land on the group means regardless of which id each got.
  std::vector<double> centers = {km.centroids[0][0], km.centroids[1][0]};
  std::sort(centers.begin(), centers.end());
  EXPECT_DOUBLE_EQ(centers[0], 0.5);
  EXPECT_DOUBLE_EQ(centers[1], 9.5);
}

TEST(KmeansTwoTest, ResultIsALloydFixedPoint) {
  // Converged output must be self-consistent: every point sits with its
  // nearest centroid and every centroid is the mean of its members.
  DataMatrix points;
  Rng rng(33);
  for (int i = 0; i < 60; ++i)
    points.append_row(std::vector<double>{rng.uniform(), rng.uniform()});
  const auto km = kmeans_two(points, 5);

  std::array<std::vector<double>, 2> sums = {std::vector<double>(2, 0.0),
                                             std::vector<double>(2, 0.0)};
  std::array<std::size_t, 2> counts = {0, 0};
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const int a = km.assignments[i];
    const double d_own = detail::sq_dist(points.row(i), km.centroids[a]);
    const double d_other = detail::sq_dist(points.row(i), km.centroids[1 - a]);
    EXPECT_LE(d_own, d_other + 1e-12);
    for (std::size_t c = 0; c < 2; ++c) sums[a][c] += points.at(i, c);
    counts[a]++;
  }
  for (int k = 0; k < 2; ++k) {
    ASSERT_GT(counts[k], 0u);
    for (std::size_t c = 0; c < 2; ++c)
      EXPECT_NEAR(km.centroids[k][c], sums[k][c] / counts[k], 1e-9);
  }
}

TEST(KmeansTwoTest, DeterministicGivenSeed) {
  DataMatrix points;
  Rng rng(44);
  for (int i = 0; i < 40; ++i)
    points.append_row(std::vector<double>{rng.normal(), rng.normal()});
  const auto a = kmeans_two(points, 9);
  const auto b = kmeans_two(points, 9);
  EXPECT_EQ(a.assignments, b.assignments);
  EXPECT_EQ(a.centroids[0], b.centroids[0]);
  EXPECT_EQ(a.centroids[1], b.centroids[1]);
}

TEST(KmeansTwoTest, AllIdenticalPointsIsAnError) {
  DataMatrix points{{3.0, 3.0}, {3.0, 3.0}, {3.0, 3.0}};
  EXPECT_THROW(kmeans_two(points, 1), DegenerateDataError);
}

TEST(KmeansTwoTest, LonelyOutlierGetsItsOwnCluster) {
  DataMatrix points{{0.0}, {0.0}, {0.0}, {0.0}, {100.0}};
  const auto km = kmeans_two(points, 3);
  EXPECT_NE(km.assignments[4], km.assignments[0]);
  for (int i = 1; i < 4; ++i) EXPECT_EQ(km.assignments[i], km.assignments[0]);
}

TEST(SilhouetteTest, TwoTightDistantBlobsScoreHigh) {
  DataMatrix points{{0.0, 0.0}, {0.1, 0.0}, {10.0, 10.0}, {10.1, 10.0}};
  const double s = silhouette(points, {0, 0, 1, 1});
  EXPECT_GT(s, 0.9);
}

TEST(SilhouetteTest, HandComputedOneDimensionalValue) {
  DataMatrix points{{0.0}, {1.0}, {9.0}, {10.0}};
  const double s = silhouette(points, {0, 0, 1, 1});
  // Per point (b-a)/max(a,b): (8.5/9.5 + 7.5/8.5)/2 averaged over both pairs.
  EXPECT_NEAR(s, 0.8885448916408669, 1e-12);
}

TEST(SilhouetteTest, CoincidentPointsUseZeroConvention) {
  DataMatrix points{{2.0}, {2.0}, {2.0}, {2.0}};
  EXPECT_DOUBLE_EQ(silhouette(points, {0, 1, 0, 1}), 0.0);
}

TEST(SilhouetteTest, SingletonClusterScoresZero) {
  DataMatrix points{{0.0}, {1.0}, {10.0}};
  // Point 2 is alone in its cluster and contributes 0 by convention.
  const double s = silhouette(points, {0, 0, 1});
  const double s0 = (10.0 - 1.0) / 10.0;  // a = 1, b = 10
  const double s1 = (9.0 - 1.0) / 9.0;    // a = 1, b = 9
  EXPECT_NEAR(s, (s0 + s1 + 0.0) / 3.0, 1e-12);
}

TEST(LabelHazardTest, HigherHazardClusterGetsLabelOne) {
  DataMatrix hazard{{2.0, 0.0}, {3.0, 1.0}, {40.0, 9.0}, {45.0, 10.0}};
  const auto res = label_hazard(hazard, 11);
  EXPECT_EQ(res.labels, (std::vector<int>{0, 0, 1, 1}));
  EXPECT_GT(res.silhouette, 0.9);
}

TEST(LabelHazardTest, RowOrderChangeOnlyPermutesLabels) {
  DataMatrix hazard{{2.0, 0.0}, {3.0, 1.0}, {40.0, 9.0}, {45.0, 10.0}};
  DataMatrix reordered{{45.0, 10.0}, {2.0, 0.0}, {40.0, 9.0}, {3.0, 1.0}};
  const auto a = label_hazard(hazard, 11);
  const auto b = label_hazard(reordered, 11);
  EXPECT_EQ(b.labels, (std::vector<int>{1, 0, 1, 0}));
  EXPECT_DOUBLE_EQ(a.silhouette, b.silhouette);
}

TEST(LabelHazardTest, NegatingBothIndicatorsFlipsLabels) {
  DataMatrix hazard{{2.0, 0.0}, {3.0, 1.0}, {40.0, 9.0}, {45.0, 10.0}};
  DataMatrix negated{{-2.0, 0.0}, {-3.0, -1.0}, {-40.0, -9.0}, {-45.0, -10.0}};
  const auto pos = label_hazard(hazard, 11);
  const auto neg = label_hazard(negated, 11);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(neg.labels[i], 1 - pos.labels[i]);
}

TEST(LabelHazardTest, LabelOneCentroidSumExceedsLabelZero) {
  DataMatrix hazard;
  Rng rng(55);
  for (int i = 0; i < 50; ++i)
    hazard.append_row(std::vector<double>{rng.normal(40.0, 2.0), rng.normal(9.0, 1.0)});
  for (int i = 0; i < 50; ++i)
    hazard.append_row(std::vector<double>{rng.normal(5.0, 2.0), rng.normal(1.0, 0.5)});
  const auto res = label_hazard(hazard, 77);
  double sum0 = res.centroids[0][0] + res.centroids[0][1];
  double sum1 = res.centroids[1][0] + res.centroids[1][1];
  EXPECT_GT(sum1, sum0);
  // First 50 rows came from the hot/polluted blob.
  for (int i = 0; i < 50; ++i) EXPECT_EQ(res.labels[i], 1);
  for (int i = 50; i < 100; ++i) EXPECT_EQ(res.labels[i], 0);
}

}  // namespace
}  // namespace iqp
