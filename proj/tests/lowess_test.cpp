#include <iqp/lowess.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include <iqp/errors.hpp>
#include <iqp/rng.hpp>

namespace iqp {
namespace {

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

TEST(LowessTest, ReproducesAffineDataExactly) {
  const auto x = linspace(0.0, 10.0, 50);
  std::vector<double> y;
  for (double v : x) y.push_back(2.0 * v + 1.0);
  for (const double frac : {0.1, 0.3, 0.6, 1.0}) {
    const auto curve = lowess_fit(x, y, frac, 1);
    ASSERT_EQ(curve.grid.size(), x.size());
    for (std::size_t i = 0; i < curve.grid.size(); ++i)
      EXPECT_NEAR(curve.fitted[i], 2.0 * curve.grid[i] + 1.0, 1e-9)
          << "frac " << frac << " at x = " << curve.grid[i];
  }
}

TEST(LowessTest, ReproducesQuadraticDataExactly) {
  const auto x = linspace(-3.0, 3.0, 60);
  std::vector<double> y;
  for (double v : x) y.push_back(v * v - 2.0 * v + 0.5);
  const auto curve = lowess_fit(x, y, 0.4, 0);
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    const double g = curve.grid[i];
    EXPECT_NEAR(curve.fitted[i], g * g - 2.0 * g + 0.5, 1e-9);
  }
}

TEST(LowessTest, ConstantDataStaysConstant) {
  const auto x = linspace(0.0, 1.0, 25);
  const std::vector<double> y(25, 4.25);
  const auto curve = lowess_fit(x, y, 0.5, 2);
  for (double v : curve.fitted) EXPECT_NEAR(v, 4.25, 1e-12);
}

TEST(LowessTest, TracksSineWithinFivePercent) {
  const std::size_t n = 200;
  const auto x = linspace(0.0, 2.0 * std::numbers::pi, n);
  std::vector<double> y;
  for (double v : x) y.push_back(std::sin(v));
  const auto curve = lowess_fit(x, y, 0.3, 1);
  double worst = 0.0;
  for (std::size_t i = 0; i < curve.grid.size(); ++i)
    worst = std::max(worst, std::abs(curve.fitted[i] - std::sin(curve.grid[i])));
  EXPECT_LT(worst, 0.05);
}

TEST(LowessTest, UnsortedInputMatchesSortedInput) {
  Rng rng(404);
  std::vector<double> x = linspace(0.0, 5.0, 40);
  std::vector<double> y;
  for (double v : x) y.push_back(std::cos(v) + 0.1 * rng.normal());
  auto xs = x;
  auto ys = y;
  // Shuffle the pairs together.
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  for (std::size_t i = 0; i < order.size(); ++i) {
    xs[i] = x[order[i]];
    ys[i] = y[order[i]];
  }
  const auto sorted_fit = lowess_fit(x, y, 0.4, 1);
  const auto shuffled_fit = lowess_fit(xs, ys, 0.4, 1);
  ASSERT_EQ(sorted_fit.grid, shuffled_fit.grid);
  for (std::size_t i = 0; i < sorted_fit.fitted.size(); ++i)
    EXPECT_DOUBLE_EQ(sorted_fit.fitted[i], shuffled_fit.fitted[i]);
}

TEST(LowessTest, DuplicatingEveryPointLeavesTheFitUnchanged) {
  Rng rng(405);
  const auto x = linspace(0.0, 8.0, 30);
  std::vector<double> y;
  for (double v : x) y.push_back(0.5 * v - 1.0 + 0.2 * rng.normal());

  std::vector<double> x2, y2;
  for (std::size_t i = 0; i < x.size(); ++i) {
    x2.insert(x2.end(), {x[i], x[i]});
    y2.insert(y2.end(), {y[i], y[i]});
  }
  const auto base = lowess_fit(x, y, 0.5, 1);
  const auto doubled = lowess_fit(x2, y2, 0.5, 1);
  ASSERT_EQ(base.grid, doubled.grid);  // grid holds distinct x values
  for (std::size_t i = 0; i < base.fitted.size(); ++i)
    EXPECT_NEAR(base.fitted[i], doubled.fitted[i], 1e-9);
}

TEST(LowessTest, RobustPassDampsAnOutlier) {
  const auto x = linspace(0.0, 10.0, 40);
  std::vector<double> y;
  for (double v : x) y.push_back(v);
  y[20] += 50.0;  // single wild point

  const auto plain = lowess_fit(x, y, 0.4, 0);
  const auto robust = lowess_fit(x, y, 0.4, 2);
  const double true_value = x[20];
  EXPECT_LT(std::abs(robust.fitted[20] - true_value),
            std::abs(plain.fitted[20] - true_value));
  // Far from the outlier both fits agree with the line.
  EXPECT_NEAR(robust.fitted[0], 0.0, 0.3);
  EXPECT_NEAR(robust.fitted[39], 10.0, 0.3);
}

TEST(LowessTest, RecoversPlantedZeroCrossings) {
  // y = s (x - t) + noise: the fitted curve's sign change must land within
  // 5% of the range of the planted t, across random slopes and offsets.
  Rng rng(406);
  const double range = 50.0;
  for (int trial = 0; trial < 20; ++trial) {
    const double t = rng.uniform(0.2 * range, 0.8 * range);
    const double s = rng.uniform(0.05, 2.0);
    std::vector<double> x, y;
    for (int i = 0; i < 150; ++i) {
      const double xv = rng.uniform(0.0, range);
      x.push_back(xv);
      y.push_back(s * (xv - t) + 0.1 * s * range * 0.5 * rng.normal());
    }
    const auto curve = lowess_fit(x, y, 0.4, 1);
    double crossing = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i + 1 < curve.grid.size(); ++i) {
      if (curve.fitted[i] < 0.0 && curve.fitted[i + 1] >= 0.0) {
        const double y0 = curve.fitted[i], y1 = curve.fitted[i + 1];
        crossing = curve.grid[i] +
                   (curve.grid[i + 1] - curve.grid[i]) * (-y0) / (y1 - y0);
        break;
      }
    }
    ASSERT_FALSE(std::isnan(crossing)) << "trial " << trial;
    EXPECT_NEAR(crossing, t, 0.05 * range) << "trial " << trial;
  }
}

TEST(LowessTest, InputValidation) {
  const auto x = linspace(0.0, 1.0, 9);  // one short of the minimum
  const std::vector<double> y(9, 0.0);
  EXPECT_THROW(lowess_fit(x, y, 0.5, 1), TooFewPointsError);

  const auto x10 = linspace(0.0, 1.0, 10);
  const std::vector<double> y10(10, 0.0);
  EXPECT_THROW(lowess_fit(x10, y10, 0.0, 1), ConfigError);
  EXPECT_THROW(lowess_fit(x10, y10, 1.5, 1), ConfigError);
  EXPECT_THROW(lowess_fit(x10, {1.0, 2.0}, 0.5, 1), LengthMismatchError);
}

TEST(BootstrapBandTest, ExactLineGivesVanishingBand) {
  const auto x = linspace(0.0, 10.0, 40);
  std::vector<double> y;
  for (double v : x) y.push_back(-1.5 * v + 4.0);
  const auto curve = bootstrap_band(x, y, 0.5, 1, 60, 0.95, 99);
  ASSERT_EQ(curve.band_lo.size(), curve.grid.size());
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    EXPECT_LT(curve.band_hi[i] - curve.band_lo[i], 1e-6);
    EXPECT_GE(curve.fitted[i], curve.band_lo[i] - 1e-9);
    EXPECT_LE(curve.fitted[i], curve.band_hi[i] + 1e-9);
  }
}

TEST(BootstrapBandTest, DeterministicGivenSeedAndSensitiveToIt) {
  Rng rng(505);
  const auto x = linspace(0.0, 5.0, 30);
  std::vector<double> y;
  for (double v : x) y.push_back(v + rng.normal());
  const auto a = bootstrap_band(x, y, 0.5, 1, 40, 0.95, 7);
  const auto b = bootstrap_band(x, y, 0.5, 1, 40, 0.95, 7);
  const auto c = bootstrap_band(x, y, 0.5, 1, 40, 0.95, 8);
  EXPECT_EQ(a.band_lo, b.band_lo);
  EXPECT_EQ(a.band_hi, b.band_hi);
  EXPECT_NE(a.band_lo, c.band_lo);
}

TEST(BootstrapBandTest, MoreReplicatesDoNotBlowUpTheBand) {
  Rng rng(506);
  const auto x = linspace(0.0, 10.0, 60);
  std::vector<double> y;
  for (double v : x) y.push_back(0.8 * v + rng.normal());
  const auto small = bootstrap_band(x, y, 0.5, 1, 50, 0.95, 3);
  const auto large = bootstrap_band(x, y, 0.5, 1, 200, 0.95, 3);
  std::vector<double> w_small, w_large;
  for (std::size_t i = 0; i < small.grid.size(); ++i) {
    w_small.push_back(small.band_hi[i] - small.band_lo[i]);
    w_large.push_back(large.band_hi[i] - large.band_lo[i]);
  }
  auto median_of = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  EXPECT_LE(median_of(w_large), 1.2 * median_of(w_small));
}

TEST(BootstrapBandTest, InputValidation) {
  const auto x = linspace(0.0, 1.0, 12);
  const std::vector<double> y(12, 0.0);
  EXPECT_THROW(bootstrap_band(x, y, 0.5, 1, 1, 0.95, 1), ConfigError);
  EXPECT_THROW(bootstrap_band(x, y, 0.5, 1, 50, 0.0, 1), ConfigError);
  EXPECT_THROW(bootstrap_band(x, y, 0.5, 1, 50, 1.0, 1), ConfigError);
}

}  // namespace
}  // namespace iqp
