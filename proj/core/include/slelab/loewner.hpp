#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "slelab/driver.hpp"

namespace slelab {

using cplx = std::complex<double>;

/**
 * Chordal Loewner machinery over a sampled driver.
 *
 * Discretization: the driver is frozen on each grid interval at its right
 * endpoint. Under a frozen driver the forward map over one interval is the
 * vertical slit map below, exactly; concatenating them gives the forward
 * chain. The same freezing applied to the time-reversed driver turns the
 * downward (inverse-map) flow into an ODE that is integrated directly with an
 * adaptive explicit midpoint rule, which keeps the marked-point series and
 * log-derivative available at every grid time without composing the chain.
 */

/// sqrt branch with nonnegative imaginary part (maps into the closed upper
/// half plane). re_hint resolves the boundary case: for a real nonnegative
/// radicand the half-plane rule is blind, and continuity along the real axis
/// requires the root whose sign matches the original offset from the slit.
inline cplx slit_sqrt(cplx w, double re_hint) {
  const double u = w.real();
  const double v = w.imag();
  if (v == 0.0) {
    if (u < 0.0) return {0.0, std::sqrt(-u)};
    const double s = std::sqrt(u);
    return re_hint < 0.0 ? cplx(-s, 0.0) : cplx(s, 0.0);
  }
  // Hand-rolled to avoid csqrt in the composition hot loop. Compute the
  // larger component first so neither r+u nor r-u cancels.
  const double r = std::hypot(u, v);
  if (u >= 0.0) {
    const double x = std::copysign(std::sqrt(0.5 * (r + u)), v);
    return {x, 0.5 * v / x};
  }
  const double y = std::sqrt(0.5 * (r - u));
  return {0.5 * v / y, y};
}

/// Elementary vertical slit update for one frozen-driver interval.
/// c = 2 a dt, so hcap() = c/2 = a dt is the capacity increment.
struct SlitMap {
  double du = 0.0;
  double c = 0.0;

  cplx forward(cplx z) const {
    const cplx d = z - du;
    return du + slit_sqrt(d * d + c, d.real());
  }
  cplx inverse(cplx w) const {
    const cplx d = w - du;
    return du + slit_sqrt(d * d - c, d.real());
  }
  double hcap() const { return 0.5 * c; }
  double tip_height() const { return std::sqrt(c); }
};

struct SlitChain {
  double dt = 0.0;
  double a = 0.5;
  std::vector<SlitMap> maps;  ///< maps[j] covers (j dt, (j+1) dt], du = driver at (j+1) dt

  double hcap() const {
    double h = 0.0;
    for (const auto& m : maps) h += m.hcap();
    return h;
  }
  /// Driver value at grid index k (right-endpoint convention).
  double driver_at(std::size_t k) const { return k == 0 ? 0.0 : maps[k - 1].du; }
};

SlitChain build_chain(const DrivingPath& driver);

/// Binary container: magic "SLECHN1\0", u64 count, f64 dt, f64 a,
/// then count (du, c) little-endian f64 pairs.
void write_chain_binary(const SlitChain& chain, const std::string& file);
SlitChain read_chain_binary(const std::string& file);

inline constexpr std::size_t kWholeChain = static_cast<std::size_t>(-1);

/// f_t and f_t' at w via inverse-map composition through the first `upto`
/// maps. near_slit counts compositions that passed within relative 1e-12 of
/// a slit base, where the derivative loses precision.
struct EvalResult {
  cplx value{};
  cplx deriv{1.0, 0.0};
  int near_slit = 0;
};

EvalResult evaluate_inverse(const SlitChain& chain, cplx w, std::size_t upto = kWholeChain);

inline cplx inverse_at(const SlitChain& chain, cplx w, std::size_t upto = kWholeChain) {
  return evaluate_inverse(chain, w, upto).value;
}

/**
 * Advances the frozen-driver marked-point flow by time h:
 *   dZ/dt = s / Z,   dlog|deriv|/dt = -s Re(1/Z^2),
 * with s = +a for the forward flow and s = -a for the reverse flow.
 * Explicit midpoint with local error control by step halving; `tol` is the
 * absolute error budget for the whole interval. A cheap predictor skips the
 * halving comparison when the step is far from the singularity.
 * Returns false when the forward flow reached Im Z <= swallow_y.
 */
bool advance_frozen(cplx& Z, double& logd, double s, double h, double tol, double swallow_y);

struct FlowOptions {
  double ode_tol = 1e-8;     ///< local error target per grid step
  double swallow_y = 1e-12;  ///< forward flow swallowing threshold on Im Z
};

/**
 * Track of one marked point. Forward: z[k] = g_{t_k}(z0) - U_{t_k} and
 * log_abs_deriv[k] = log|g'_{t_k}(z0)|; the series stops at swallowing and
 * upsilon is frozen at its last value. Reverse: z[k] = h_{t_k}(z0) - U_{t_k}
 * for the reverse flow driven by the given (already reversed) driver, with
 * log|h'|; Im z is then strictly increasing and psi = |h'|/Y nonincreasing.
 * `violations` counts pathwise monotonicity breaches beyond rounding
 * tolerance; it must stay 0.
 */
struct FlowState {
  double dt = 0.0;
  double a = 0.5;
  cplx z0{};
  bool is_reverse = false;
  std::vector<double> times;
  std::vector<cplx> z;
  std::vector<double> log_abs_deriv;
  bool swallowed = false;
  double swallow_time = std::numeric_limits<double>::infinity();
  int violations = 0;

  double Y(std::size_t k) const { return z[k].imag(); }
  double abs_deriv(std::size_t k) const { return std::exp(log_abs_deriv[k]); }
  double psi(std::size_t k) const { return abs_deriv(k) / Y(k); }
  double upsilon(std::size_t k) const { return Y(k) / abs_deriv(k); }
  /// Final upsilon; for swallowed points, the frozen pre-swallowing value.
  double upsilon_final() const { return upsilon(z.size() - 1); }
};

FlowState forward_point(const DrivingPath& driver, cplx z, FlowOptions opts = {});
FlowState reverse_point(const DrivingPath& driver, cplx z, FlowOptions opts = {});

/**
 * Curve samples gamma(t_k) by inverse-map composition. y0 = 0 composes from
 * the exact slit tip; y0 > 0 evaluates at U_t + i y0 and can carry the
 * vertical-segment error bound v(t, y0) per point (quadratic cost, off by
 * default).
 */
struct Trace {
  double dt = 0.0;
  double y0 = 0.0;
  std::vector<double> times;
  std::vector<cplx> points;
  std::vector<double> error_bound;  ///< v(t_k, y0) when requested, else 0
};

Trace trace(const DrivingPath& driver, double y0 = 0.0, bool with_error_bounds = false,
            int quad_nodes = 16);

/// CSV with header "t,re,im,vbound".
void write_trace_csv(const Trace& tr, const std::string& file);
Trace read_trace_csv(const std::string& file);

/**
 * v(t, y) = integral_0^y |f_t'(U_t + i r)| dr, the length bound on the
 * vertical segment that controls |gamma(t) - f_t(U_t + iy)|. Quadrature is
 * graded toward r = 0 (r = y u^3); returns +infinity when the integrand
 * exceeds the divergence cap near 0.
 */
double tip_error_bound(const SlitChain& chain, double t, double y, int quad_nodes = 24);

/// Empirical check of the rectangle distortion bound sup |f'(w)|/|f'(z)| <=
/// (2r)^alpha over R(r) = [-r, r] x [1/r, r]; report only, alpha configurable.
struct DistortionReport {
  double r = 0.0;
  double alpha = 0.0;
  double max_log_ratio = 0.0;
  double bound_log = 0.0;
  bool within = false;
  int near_slit = 0;
};

DistortionReport rect_distortion_check(const SlitChain& chain, double r, double alpha,
                                       int grid = 8);

}  // namespace slelab
