#include "slelab/params.hpp"

#include <cmath>
#include <stdexcept>

namespace slelab {

SleParams derive_exponents_from_a(double a) {
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw std::domain_error("derive_exponents: a must be positive and finite");
  }
  SleParams p;
  p.a = a;
  p.kappa = 2.0 / a;
  p.d = 1.0 + 1.0 / (4.0 * a);
  p.beta = p.d - 1.5;
  p.xi = 1.0 / (16.0 * a * a);
  p.dimension_valid = p.kappa < 8.0;  // d would exceed 2 past this point
  return p;
}

SleParams derive_exponents(double kappa) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw std::domain_error("derive_exponents: kappa must be positive and finite");
  }
  return derive_exponents_from_a(2.0 / kappa);
}

MartingaleExponents martingale_exponents(double a, double r) {
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw std::domain_error("martingale_exponents: a must be positive and finite");
  }
  MartingaleExponents m;
  m.r = r;
  m.lambda = r * (1.0 + 1.0 / (2.0 * a)) - r * r / (4.0 * a);
  m.q = 2.0 * a + 0.5 - r;
  m.theta = 0.5 * r + m.q * r + 0.5 * r * r;
  m.zeta = r - m.theta;
  m.mu = (1.0 - 2.0 * m.q) / (1.0 + 2.0 * m.q);
  return m;
}

InverseExponents inverse_exponents(double a, double lambda) {
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw std::domain_error("inverse_exponents: a must be positive and finite");
  }
  const double s = 1.0 + 1.0 / (2.0 * a);
  const double radicand = s * s - lambda / a;
  if (radicand < 0.0) {
    throw std::domain_error("inverse_exponents: lambda above a(1 + 1/(2a))^2");
  }
  InverseExponents e;
  e.lambda = lambda;
  e.r = 2.0 * a + 1.0 - 2.0 * a * std::sqrt(radicand);
  e.zeta = lambda - e.r / (2.0 * a);
  e.lambda_c = a + 3.0 / (16.0 * a) + 1.0;
  e.zeta_c = a - 1.0 / (16.0 * a);
  return e;
}

MomentPair moment_pair(double q, double delta) {
  MomentPair mp;
  mp.delta = delta;
  mp.p = 0.25 * (1.0 + 2.0 * q) * delta - 0.25 * delta * delta;
  mp.theta = 2.0 * mp.p - 0.5 * delta;
  mp.valid = delta < q;
  return mp;
}

}  // namespace slelab
