#pragma once

#include <cstddef>
#include <map>
#include <span>

namespace freespec {

enum class FitModel { gaussian, gaussian_weighted, exponential };

const char* to_string(FitModel m);

struct FitResult {
  FitModel model = FitModel::gaussian;
  /// Gaussian parameters.
  double mu = 0.0;
  double sigma = 0.0;
  /// Exponential parameters of a * exp(-r n).
  double a = 0.0;
  double r = 0.0;
  /// Root mean square residual; relative to the observed value for the
  /// weighted Gaussian.
  double error = 0.0;
  std::size_t points = 0;
  /// Bins left out of the error sum (zero frequencies in the weighted fit).
  std::size_t excluded = 0;
};

/// Normal density with mean mu and standard deviation sigma.
double gaussian_density(double x, double mu, double sigma);

/// Fits a normal density to a probability histogram (value -> frequency).
/// Frequencies must sum to 1 within 1e-12; throws FitDegenerate for fewer
/// than two bins or zero spread.
FitResult fit_gaussian(const std::map<int, double>& histogram, bool weighted);

/// Error term of a Gaussian fit at given parameters.
double gaussian_fit_error(const std::map<int, double>& histogram, double mu, double sigma, bool weighted);

/// Least-squares fit of a * exp(-r n): log-linear start from the positive
/// points, then a simplex polish on all points. Needs at least 3 points.
FitResult fit_exponential(std::span<const double> n, std::span<const double> values);

}  // namespace freespec
