#include "freespec/fits.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <gsl/gsl_multimin.h>

#include "freespec/errors.hpp"

namespace freespec {

const char* to_string(FitModel m) {
  switch (m) {
    case FitModel::gaussian: return "gaussian";
    case FitModel::gaussian_weighted: return "gaussian_weighted";
    case FitModel::exponential: return "exponential";
  }
  return "unknown";
}

double gaussian_density(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

double gaussian_fit_error(const std::map<int, double>& histogram, double mu, double sigma, bool weighted) {
  double sum = 0.0;
  std::size_t used = 0;
  for (const auto& [k, freq] : histogram) {
    if (weighted && freq == 0.0) continue;
    double diff = gaussian_density(k, mu, sigma) - freq;
    if (weighted) diff /= freq;
    sum += diff * diff;
    ++used;
  }
  return used == 0 ? 0.0 : std::sqrt(sum / static_cast<double>(used));
}

namespace {

using Objective = std::function<double(double, double)>;

double trampoline(const gsl_vector* v, void* params) {
  const auto& f = *static_cast<const Objective*>(params);
  const double out = f(gsl_vector_get(v, 0), gsl_vector_get(v, 1));
  return std::isfinite(out) ? out : std::numeric_limits<double>::max();
}

struct SimplexResult {
  double x0 = 0.0;
  double x1 = 0.0;
  double value = 0.0;
};

/// Nelder-Mead on a two-parameter objective.
SimplexResult simplex_minimize(const Objective& f, double x0, double x1, double step0, double step1) {
  gsl_multimin_function fn;
  fn.n = 2;
  fn.f = &trampoline;
  fn.params = const_cast<Objective*>(&f);

  gsl_vector* start = gsl_vector_alloc(2);
  gsl_vector* steps = gsl_vector_alloc(2);
  gsl_vector_set(start, 0, x0);
  gsl_vector_set(start, 1, x1);
  gsl_vector_set(steps, 0, step0);
  gsl_vector_set(steps, 1, step1);
  gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 2);
  gsl_multimin_fminimizer_set(m, &fn, start, steps);

  for (int iter = 0; iter < 5000; ++iter) {
    if (gsl_multimin_fminimizer_iterate(m) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), 1e-12) == GSL_SUCCESS) break;
  }
  SimplexResult out{gsl_vector_get(m->x, 0), gsl_vector_get(m->x, 1), m->fval};
  gsl_multimin_fminimizer_free(m);
  gsl_vector_free(steps);
  gsl_vector_free(start);
  return out;
}

}  // namespace

FitResult fit_gaussian(const std::map<int, double>& histogram, bool weighted) {
  if (histogram.size() < 2) throw FitDegenerate("fit_gaussian: need at least two bins");
  double total = 0.0;
  for (const auto& [k, freq] : histogram) {
    if (!(freq >= 0.0) || !std::isfinite(freq)) throw ArgumentError("fit_gaussian: frequencies must be nonnegative");
    total += freq;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ArgumentError("fit_gaussian: frequencies do not sum to 1");

  double mean = 0.0;
  for (const auto& [k, freq] : histogram) mean += k * freq;
  double var = 0.0;
  for (const auto& [k, freq] : histogram) var += freq * (k - mean) * (k - mean);
  if (!(var > 0.0)) throw FitDegenerate("fit_gaussian: histogram has zero spread");
  const double sd = std::sqrt(var);

  // sigma is searched through its logarithm so it stays positive.
  const Objective f = [&](double mu, double log_sigma) {
    return gaussian_fit_error(histogram, mu, std::exp(log_sigma), weighted);
  };

  FitResult best;
  best.model = weighted ? FitModel::gaussian_weighted : FitModel::gaussian;
  best.error = std::numeric_limits<double>::infinity();
  const int lo = histogram.begin()->first;
  const int hi = histogram.rbegin()->first;
  const int grid = static_cast<int>(std::lround((hi - lo) / 0.01));
  for (int i = 0; i <= grid; ++i) {
    const double mu0 = lo + 0.01 * i;
    const SimplexResult r = simplex_minimize(f, mu0, std::log(sd), 0.1, 0.1);
    if (r.value < best.error) {
      best.error = r.value;
      best.mu = r.x0;
      best.sigma = std::exp(r.x1);
    }
  }
  for (const auto& [k, freq] : histogram) {
    if (weighted && freq == 0.0)
      ++best.excluded;
    else
      ++best.points;
  }
  return best;
}

FitResult fit_exponential(std::span<const double> n, std::span<const double> values) {
  if (n.size() != values.size()) throw ArgumentError("fit_exponential: abscissa and value counts differ");
  if (n.size() < 3) throw ArgumentError("fit_exponential: need at least 3 points");
  for (std::size_t i = 0; i < n.size(); ++i)
    if (!std::isfinite(n[i]) || !std::isfinite(values[i])) throw ArgumentError("fit_exponential: non-finite data");

  std::vector<std::size_t> positive;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] > 0.0) positive.push_back(i);

  double a0 = 0.0;
  double r0 = 0.0;
  if (positive.size() >= 2) {
    Eigen::MatrixXd design(static_cast<Eigen::Index>(positive.size()), 2);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(positive.size()));
    for (std::size_t j = 0; j < positive.size(); ++j) {
      design(static_cast<Eigen::Index>(j), 0) = 1.0;
      design(static_cast<Eigen::Index>(j), 1) = -n[positive[j]];
      rhs(static_cast<Eigen::Index>(j)) = std::log(values[positive[j]]);
    }
    const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(rhs);
    a0 = std::exp(coef(0));
    r0 = coef(1);
  } else {
    for (double v : values) a0 += v;
    a0 /= static_cast<double>(values.size());
  }

  auto sse = [&](double a, double r) {
    double s = 0.0;
    for (std::size_t i = 0; i < n.size(); ++i) {
      const double d = a * std::exp(-r * n[i]) - values[i];
      s += d * d;
    }
    return s;
  };
  const Objective f = sse;

  FitResult out;
  out.model = FitModel::exponential;
  out.a = a0;
  out.r = r0;
  double best = sse(a0, r0);
  const SimplexResult polished = simplex_minimize(f, a0, r0, 0.1 * std::max(std::abs(a0), 1e-3), 0.05);
  if (polished.value < best) {
    out.a = polished.x0;
    out.r = polished.x1;
    best = polished.value;
  }
  out.points = n.size();
  out.error = std::sqrt(best / static_cast<double>(n.size()));
  return out;
}

}  // namespace freespec
