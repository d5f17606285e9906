#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace slelab {

/// Moment summary of one Monte Carlo ensemble against a known target.
/// zscore = (mean - target) / std_error; a zero std_error with mean != target
/// reports the sentinel 1e300 instead of infinity so JSON stays finite.
struct EnsembleStats {
  std::size_t n_paths = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double target = 0.0;
  double zscore = 0.0;
  double dt = 0.0;
};

EnsembleStats summarize(const std::vector<double>& values, double target, double dt);

/// Ordinary least squares line fit; slope standard error assumes independent
/// homoscedastic residuals, which is all the scaling diagnostics need.
struct ScalingFit {
  std::vector<double> xs;
  std::vector<double> ys;
  double slope = 0.0;
  double intercept = 0.0;
  double std_error = 0.0;  ///< standard error of the slope
  double r2 = 0.0;
};

ScalingFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys);

/// Two-sided Kolmogorov-Smirnov distance between samples and a CDF.
double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Nodes and weights for n-point Gauss-Legendre on [lo, hi].
void gauss_legendre(int n, double lo, double hi,
                    std::vector<double>& x, std::vector<double>& w);

double integrate_gl(const std::function<double(double)>& f, double lo, double hi, int n);

/// Adaptive Simpson to absolute tolerance tol.
double integrate_adaptive(const std::function<double(double)>& f, double lo, double hi,
                          double tol);

/// Linear-interpolation percentile, p in [0, 1]. Sorts a copy.
double percentile(std::vector<double> values, double p);

}  // namespace slelab
