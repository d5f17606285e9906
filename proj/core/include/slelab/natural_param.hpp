#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "slelab/driver.hpp"
#include "slelab/loewner.hpp"

namespace slelab {

/**
 * Candidate constructions of the d-dimensional-content parametrization of
 * the trace. The four estimators are conjectured equivalent up to constants;
 * the library reports them side by side and never asserts them equal.
 */
enum class TauCandidate { minkowski, conformal_minkowski, d_variation, derivative_sum };

const char* tau_candidate_name(TauCandidate c);

struct ParamSeries {
  TauCandidate candidate = TauCandidate::derivative_sum;
  std::size_t n = 0;          ///< subdivision count
  double d = 0.0;             ///< content exponent used
  std::vector<double> times;  ///< k/n grid, starting at 0
  std::vector<double> taus;   ///< partial sums; taus[0] = 0, nondecreasing
};

/// CSV with header "t,tau".
void write_param_series_csv(const ParamSeries& s, const std::string& file);
ParamSeries read_param_series_csv(const std::string& file);

/**
 * Derivative-sum candidate: tau_n(t) = sum_{k<=tn} n^(-d/2) |f_hat'_{k/n}(i/sqrt n)|^d
 * with f_hat_t(z) = f_t(z + U_t) and d = 1 + 1/(4a) taken from driver.a.
 * The driver grid must resolve 1/n exactly (dt divides 1/n), else a domain
 * error. Scaling identity, exact per realization on the discrete chain:
 * dilating the driver by r maps tau_n(t) to r^d tau_{n/r^2}(r^2 t).
 */
ParamSeries tau_derivative_sum(const DrivingPath& driver, std::size_t n);

/// d-variation candidate: partial sums of |gamma(k/n) - gamma((k-1)/n)|^d on
/// the uniform capacity-time partition. The trace must resolve 1/n.
ParamSeries tau_d_variation(const Trace& tr, std::size_t n, double d);

struct BBox {
  double xlo = 0.0, xhi = 0.0, ylo = 0.0, yhi = 0.0;

  double width() const { return xhi - xlo; }
  double height() const { return yhi - ylo; }
};

/**
 * Minkowski content estimate eps^(d-2) * area{z : dist(z, trace) <= eps} by
 * pixel counting on a grid of spacing grid_h (must be <= eps/4) over bbox.
 * Distances come from a uniform spatial hash over the trace points, so the
 * trace must be sampled densely relative to eps. The bbox must contain the
 * full eps-neighborhood, else a domain error. Empty trace gives 0.
 */
double tau_minkowski(const Trace& tr, double eps, double d, BBox bbox, double grid_h);

/**
 * Conformal variant: eps^(d-2) * area{z : Upsilon_t(z) <= eps} with
 * Upsilon_t = Im g_t / |g_t'| evaluated through the slit chain per pixel
 * center. Upsilon is nonincreasing in t, so each pixel stops as soon as it
 * is decided. Upsilon_0 = Im z, so t = 0 measures the strip {Im z <= eps}.
 * Upsilon is comparable to the distance to trace union R within a factor 4,
 * so this agrees with tau_minkowski up to a bounded factor, never exactly.
 */
double tau_conformal_minkowski(const DrivingPath& driver, BBox bbox, double grid_h,
                               double eps, double t, double d, int jobs = 0);

/**
 * Subpower envelope phi0(x) = C exp{ sqrt(log(x+1)) * (loglog(x+2))^u }.
 * loglog(x+2) is negative for x < e-2; non-integer u is then taken as the
 * odd power sgn(v)|v|^u, which coincides with the integer powers and keeps
 * phi0 positive and increasing where the events sample it.
 */
struct Phi0 {
  double C = 10.0;
  double u = 1.0;

  double operator()(double x) const;
};

struct GoodEventReport {
  std::array<bool, 6> events{};  ///< E_1..E_6 in the order documented below
  double C = 0.0;
  double u = 0.0;
  std::size_t n = 0;
  double S = 0.0;
  bool overall = false;  ///< conjunction of the six
};

/**
 * Regularity events on a reverse flow started at z = i/sqrt(n), evaluated at
 * every grid time t in [1/n, S] (S = the state's horizon):
 *   1. Y_t >= sqrt(t) / phi0(1/t)
 *   2. Y_t >= sqrt(t) / phi0(n t)
 *   3. |X_t| <= sqrt(t) * phi0(1/t)
 *   4. |X_t| <= sqrt(t) * phi0(n t)
 *   5. (n t)^beta / phi0(n t) <= |h_t'(i/sqrt n)| <= (n t)^beta * phi0(n t)
 *   6. t^(-beta) / phi0(1/t) <= |h_S'/h_t'| <= t^(-beta) * phi0(1/t)
 * with beta = d - 3/2. Under the conjunction the derivative weight behaves
 * typically; the hitting probability of the conjunction decays like a power
 * of n with subpower corrections, so it is reported, never asserted.
 */
GoodEventReport good_event_indicator(const FlowState& state, std::size_t n,
                                     Phi0 phi0, double a);

/// Frostman weight F = n^(1-d/2) |h_S'(i/sqrt n)|^d 1{event}; the derivative
/// is read from the end of the same reverse-flow state the events used.
double frostman_weight(const FlowState& state, std::size_t n, double a,
                       const GoodEventReport& event);

struct EmpiricalMeasure {
  struct Atom {
    cplx center{};
    double mass = 0.0;
  };
  std::vector<Atom> atoms;
  double smear_radius = 0.0;  ///< each atom uniform on a disk of this radius

  double total_mass() const;
};

struct FrostmanEnergy {
  double value = 0.0;
  bool divergent_risk = false;  ///< alpha >= 2 with overlapping smears
};

/**
 * Energy integral of |x-y|^(-alpha) against mu x mu. Point masses would make
 * the diagonal infinite, hence the mandatory smearing; disk pairs separated
 * by more than 4 radii use the center distance, the rest (diagonal included)
 * use quadrature of the disk-difference density. For alpha >= 2 the
 * overlapping part diverges: it is excluded and the result flagged.
 */
FrostmanEnergy frostman_energy(const EmpiricalMeasure& mu, double alpha);

struct FrostmanDiagnostic {
  std::size_t n = 0;
  double a = 0.0;
  double alpha = 0.0;
  double xi = 0.0;  ///< = d(d-2)+1, sets the smear radius n^(-(1-xi)/alpha)
  EmpiricalMeasure measure;
  std::vector<double> weights;  ///< F(j,n), j = 1..n
  double mean_weight = 0.0;     ///< (1/n) sum_j F(j,n)
  std::size_t events_passed = 0;
  FrostmanEnergy energy;
};

/**
 * The dimension-lower-bound diagnostic: atoms at gamma(j/n) with mass
 * F(j,n)/n and smear radius n^(-(1-xi)/alpha). Each F(j,n) evaluates the
 * good events and the derivative weight on the reverse flow over [0, S_j],
 * S_j = 1 + (j-1)/n, driven by the time reversal of the driver split at S_j.
 * The driver must resolve 1/n and reach S_n = 2 - 1/n. A nondegenerate
 * measure with bounded energy as n grows is evidence the trace carries
 * dimension >= alpha; the trend is reported, not asserted against constants.
 */
FrostmanDiagnostic frostman_diagnostic(const DrivingPath& driver, std::size_t n,
                                       double alpha, Phi0 phi0 = {}, int jobs = 0);

}  // namespace slelab
