#pragma once

namespace slelab {

/**
 * Exponent bookkeeping shared by every other module.
 *
 * Everything here is closed form in the diffusion strength kappa > 0, or
 * equivalently in a = 2/kappa, plus the weight r carried by the derivative
 * martingales. All derived quantities are plain algebra; the structs exist so
 * downstream code cannot mix r-weighted and unweighted exponents by accident.
 */

/// Curve-level exponents. dimension_valid turns false at kappa >= 8, where the
/// curve fills area and the closed forms below stop describing a dimension;
/// `a` itself stays usable.
struct SleParams {
  double kappa = 0.0;
  double a = 0.0;      ///< 2 / kappa
  double d = 0.0;      ///< 1 + kappa/8 = 1 + 1/(4a)
  double beta = 0.0;   ///< d - 3/2 = (1 - 2a)/(4a)
  double xi = 0.0;     ///< d(d-2) + 1 = 1/(16 a^2)
  bool dimension_valid = true;
};

/// Throws std::domain_error for kappa <= 0.
SleParams derive_exponents(double kappa);
SleParams derive_exponents_from_a(double a);

/// Exponents attached to the weight r in the derivative martingale family,
/// including the drift/occupation parameters of the associated radial
/// diffusion. For the original (unweighted) dynamics q = 2a + 1/2 - r; the
/// occupation drift mu = (1-2q)/(1+2q) is finite only for q != -1/2.
struct MartingaleExponents {
  double r = 0.0;
  double lambda = 0.0;  ///< r(1 + 1/(2a)) - r^2/(4a)
  double q = 0.0;       ///< 2a + 1/2 - r
  double theta = 0.0;   ///< r/2 + q r + r^2/2
  double zeta = 0.0;    ///< r - theta
  double mu = 0.0;      ///< (1 - 2q)/(1 + 2q)
};

MartingaleExponents martingale_exponents(double a, double r);

/// Inversion of lambda(r) on the increasing branch r in [0, 2a + 1/2], with
/// the critical point where the inversion stops being real.
/// Throws std::domain_error when lambda > a(1 + 1/(2a))^2 (radicand < 0).
struct InverseExponents {
  double lambda = 0.0;
  double r = 0.0;        ///< 2a + 1 - 2a sqrt((1 + 1/(2a))^2 - lambda/a)
  double zeta = 0.0;     ///< r - r^2/(4a) = lambda - r/(2a)
  double lambda_c = 0.0; ///< a + 3/(16a) + 1
  double zeta_c = 0.0;   ///< a - 1/(16a)
};

InverseExponents inverse_exponents(double a, double lambda);

/// Tilted-moment pair for the radial diffusion: for |delta| < q the pair
/// (p, theta) below makes exp(p L_t) (K_t^2+1)^(delta/2) exp((theta - p) t)
/// a martingale under the weighted dynamics. valid flags delta < q.
struct MomentPair {
  double delta = 0.0;
  double p = 0.0;      ///< (1 + 2q) delta / 4 - delta^2 / 4
  double theta = 0.0;  ///< 2p - delta/2 = q delta - delta^2/2
  bool valid = true;
};

MomentPair moment_pair(double q, double delta);

}  // namespace slelab
