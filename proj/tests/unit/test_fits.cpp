#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "freespec/errors.hpp"
#include "freespec/fits.hpp"

using namespace freespec;

namespace {

std::map<int, double> published_histogram() {
  const double total = 9076.0;
  return {{5, 2 / total}, {6, 1016 / total}, {7, 5878 / total}, {8, 2145 / total}, {9, 34 / total}, {10, 1 / total}};
}

std::map<int, double> sampled_histogram(double mu, double sigma, int lo, int hi) {
  std::map<int, double> h;
  double total = 0.0;
  for (int k = lo; k <= hi; ++k) total += h[k] = gaussian_density(k, mu, sigma);
  for (auto& [k, f] : h) f /= total;
  return h;
}

}  // namespace

TEST(GaussianDensity, StandardNormalAtZero) {
  EXPECT_NEAR(gaussian_density(0, 0, 1), 1 / std::sqrt(2 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(gaussian_density(3, 1, 2), gaussian_density(-1, 1, 2), 1e-15);
}

TEST(FitGaussian, PublishedHistogramUnweighted) {
  const FitResult f = fit_gaussian(published_histogram(), false);
  EXPECT_EQ(f.model, FitModel::gaussian);
  EXPECT_NEAR(f.mu, 7.13537, 1e-3);
  EXPECT_NEAR(f.sigma, 0.600874, 1e-3);
  EXPECT_NEAR(f.error, 0.000855473, 1e-4);
  EXPECT_EQ(f.points, 6u);
}

TEST(FitGaussian, PublishedHistogramWeighted) {
  const FitResult f = fit_gaussian(published_histogram(), true);
  EXPECT_EQ(f.model, FitModel::gaussian_weighted);
  EXPECT_NEAR(f.mu, 7.20503, 1e-3);
  EXPECT_NEAR(f.sigma, 0.551157, 1e-3);
  EXPECT_NEAR(f.error, 0.438183, 1e-4);
}

TEST(FitGaussian, ErrorMatchesIndependentFormula) {
  const auto h = published_histogram();
  const FitResult f = fit_gaussian(h, false);
  double sum = 0.0;
  for (const auto& [k, d] : h) {
    const double z = (k - f.mu) / f.sigma;
    const double g = std::exp(-z * z / 2) / (f.sigma * std::sqrt(2 * std::numbers::pi));
    sum += (g - d) * (g - d);
  }
  EXPECT_NEAR(f.error, std::sqrt(sum / 6), 1e-15);
}

TEST(FitGaussian, RecoversSampledParameters) {
  const FitResult f = fit_gaussian(sampled_histogram(8.5, 0.65, 5, 12), false);
  EXPECT_NEAR(f.mu, 8.5, 1e-2);
  EXPECT_NEAR(f.sigma, 0.65, 1e-2);
  const FitResult w = fit_gaussian(sampled_histogram(8.5, 0.65, 5, 12), true);
  EXPECT_NEAR(w.mu, 8.5, 1e-2);
  EXPECT_NEAR(w.sigma, 0.65, 1e-2);
}

TEST(FitGaussian, WeightedFitSkipsEmptyBins) {
  auto h = published_histogram();
  h[11] = 0.0;
  const FitResult f = fit_gaussian(h, true);
  EXPECT_EQ(f.excluded, 1u);
  EXPECT_EQ(f.points, 6u);
  EXPECT_NEAR(f.mu, 7.20503, 1e-3);
}

TEST(FitGaussian, SingleBinIsDegenerate) {
  EXPECT_THROW(fit_gaussian({{4, 1.0}}, false), FitDegenerate);
}

TEST(FitGaussian, FrequenciesMustSumToOne) {
  EXPECT_THROW(fit_gaussian({{4, 0.5}, {5, 0.4}}, false), ArgumentError);
  EXPECT_THROW(fit_gaussian({{4, 1.5}, {5, -0.5}}, false), ArgumentError);
}

TEST(FitExponential, RecoversExactSeries) {
  std::vector<double> n, v;
  for (int k = 2; k <= 10; ++k) {
    n.push_back(k);
    v.push_back(0.5 * std::exp(-0.8 * k));
  }
  const FitResult f = fit_exponential(n, v);
  EXPECT_EQ(f.model, FitModel::exponential);
  EXPECT_NEAR(f.a, 0.5, 1e-6);
  EXPECT_NEAR(f.r, 0.8, 1e-6);
  EXPECT_LE(f.error, 1e-9);
}

TEST(FitExponential, ConstantSeries) {
  const std::vector<double> n{2, 3, 4, 5}, v{0.1, 0.1, 0.1, 0.1};
  const FitResult f = fit_exponential(n, v);
  EXPECT_NEAR(f.r, 0.0, 1e-9);
  EXPECT_NEAR(f.a, 0.1, 1e-9);
}

TEST(FitExponential, PublishedReducibilitySeries) {
  const std::vector<double> pct{15.3, 9.74, 5.48, 2.82, 1.92, 1.11, 0.88, 0.594, 0.376, 0.389, 0.392, 0.192};
  std::vector<double> n, v;
  for (std::size_t i = 0; i < pct.size(); ++i) {
    n.push_back(static_cast<double>(i + 2));
    v.push_back(pct[i] / 100);
  }
  const FitResult f = fit_exponential(n, v);
  EXPECT_GT(f.r, 0.0);
  EXPECT_GT(f.a, 0.0);
  EXPECT_EQ(f.points, 12u);
  // The fitted curve must beat the best constant.
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double flat = 0.0;
  for (double x : v) flat += (x - mean) * (x - mean);
  EXPECT_LT(f.error, std::sqrt(flat / static_cast<double>(v.size())));
}

TEST(FitExponential, KeepsNonpositivePointsInThePolish) {
  const std::vector<double> n{2, 3, 4, 5}, v{0.5 * std::exp(-1.6), 0.5 * std::exp(-2.4), 0.5 * std::exp(-3.2), 0.0};
  const FitResult f = fit_exponential(n, v);
  EXPECT_GT(f.r, 0.0);
  EXPECT_LE(f.error, 0.02);
}

TEST(FitExponential, RejectsShortOrMismatchedInput) {
  const std::vector<double> two{1, 2}, three{1, 2, 3};
  EXPECT_THROW(fit_exponential(two, two), ArgumentError);
  EXPECT_THROW(fit_exponential(three, two), ArgumentError);
}
