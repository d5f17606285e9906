#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slelab/stats.hpp"

namespace slelab {

/**
 * The radial diffusion K_t that carries the occupation statistics of the
 * reverse flow after the Y-exponential time change, together with its
 * occupation integral L_t and the time change sigma(t).
 *
 * Two drift regimes:
 *   original:  dK = (1/2 - q - r) K dt + sqrt(K^2+1) dB
 *   weighted:  dK = (1/2 - q)     K dt + sqrt(K^2+1) dB
 * The weighted dynamics have the stationary density u_q below (q > 0).
 * Euler-Maruyama stepping; L by trapezoid of (K^2-1)/(K^2+1); sigma by
 * trapezoid of e^{2as}(K^2+1) with a = (q + r - 1/2)/2.
 */
enum class KRegime { original, weighted };

struct KPath {
  double dt = 0.0;
  double q = 0.0;
  double r = 0.0;
  double a = 0.0;
  double x0 = 0.0;
  KRegime regime = KRegime::original;
  std::vector<double> t;
  std::vector<double> k;
  std::vector<double> l;
  std::vector<double> sigma;
  /// Pathwise invariant breaches (|L_t| <= t, sigma lower bound, sigma
  /// monotone); must stay 0.
  int violations = 0;
};

KPath simulate_K(double q, double r, double T, double dt, KRegime regime, double x0,
                 std::uint64_t seed);

/// CSV with header "t,k,l,sigma".
void write_kpath_csv(const KPath& path, const std::string& file);

/// Stationary density u_q(x) = C_q (x^2+1)^{-(q+1/2)},
/// C_q = Gamma(q+1/2) / (Gamma(1/2) Gamma(q)). Defined for q > 0.
/// The tail satisfies u_q(x) x^{2q+1} -> C_q.
struct StationaryDensity {
  double q = 0.0;
  double norm_const = 0.0;

  double pdf(double x) const;
  /// CDF through the substitution x = tan(theta), which turns the integrand
  /// into cos^{2q-1}(theta) on a compact interval: no tail truncation.
  double cdf(double x) const;
  double tail_constant() const { return norm_const; }
};

StationaryDensity invariant_density(double q);

/// P^x{ K exits (0, y^2) in K^2 through y^2 } = phi(x)/phi(y) under the
/// weighted dynamics, phi(x) = integral_0^|x| (s^2+1)^{q-1/2} ds.
/// Requires 0 <= x^2 <= y^2, y != 0.
double hitting_split(double q, double x, double y);

/// Weighted-regime check of the closed-form tilted moment
///   E^x[e^{p L_t} (K_t^2+1)^{delta/2}] = (x0^2+1)^{delta/2} e^{t(delta/2 - p)}
/// with (p, theta) the moment pair of delta. Meaningful for delta < q.
EnsembleStats exp_moment_check(double q, double delta, double t, std::size_t n_paths,
                               double dt, std::uint64_t seed, double x0 = 0.0,
                               int jobs = 0);

/// Original-regime conservation of
///   N_t = e^{theta (L_t - t)/2} e^{(theta - r/2) t} (K_t^2+1)^{r/2},
/// theta = r/2 + q r + r^2/2; target (x0^2+1)^{r/2}.
EnsembleStats nt_martingale_check(double q, double r, double t, std::size_t n_paths,
                                  double dt, std::uint64_t seed, double x0 = 0.0,
                                  int jobs = 0);

/**
 * Stationarity diagnostics for the weighted dynamics: KS distance of
 * post-burn-in samples against u_q, and the ergodic drift of L per unit time
 * against mu = (1-2q)/(1+2q). Burn-in is 10/q; the drift is measured on the
 * post-burn-in window (the pre-stationary transient would otherwise bias
 * L_T/T by O(burn_in/T), which is exactly what the check must not absorb).
 */
struct StationarityReport {
  double q = 0.0;
  double ks = 0.0;
  std::size_t n_samples = 0;
  EnsembleStats l_drift;  ///< per-path (L_T - L_burn)/(T - burn) vs mu
  double burn_in = 0.0;
  double sample_spacing = 0.0;
  std::vector<double> hist_edges;    ///< bin edges on [-6, 6]
  std::vector<double> hist_density;  ///< empirical density per bin
  std::vector<double> hist_target;   ///< u_q at bin centers
  int violations = 0;
};

StationarityReport diffusion_stationarity(double q, std::size_t n_paths, double T,
                                          double dt, std::uint64_t seed, int jobs = 0);

/**
 * Pathwise envelope coverage under the weighted dynamics:
 *   |L_s - mu s|  <= c (s+2)^{1/2} log(s+2)
 *   K_s^2 + 1     <= c min{(s+1)^u, (T-s+1)^u}
 *   sigma(s)      <= c e^{2as} min{(s+1)^u, (T-s+1)^u}
 * c_star is the smallest c giving 90% joint coverage of the first two;
 * c_sigma covers the third. The growth power u is a configuration input:
 * the envelopes hold for some finite u, but no specific value is pinned.
 */
struct EnvelopeReport {
  double q = 0.0;
  double r = 0.0;
  double u = 0.0;
  double T = 0.0;
  std::size_t n_paths = 0;
  double c_star = 0.0;
  double c_sigma = 0.0;
  double coverage_at_c_star = 0.0;
  int violations = 0;
};

EnvelopeReport envelope_check(double q, double r, double u, double T,
                              std::size_t n_paths, double dt, std::uint64_t seed,
                              int jobs = 0);

}  // namespace slelab
