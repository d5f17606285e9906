#include <cmath>
#include <vector>

#include "doctest.h"
#include "slelab/diffusion.hpp"
#include "slelab/stats.hpp"

using namespace slelab;

TEST_CASE("invariant density closed forms") {
  // q = 1/2 is the Cauchy density 1/(pi (1+x^2))
  const StationaryDensity half = invariant_density(0.5);
  CHECK(half.pdf(0.0) == doctest::Approx(1.0 / 3.141592653589793).epsilon(1e-12));
  CHECK(half.cdf(0.0) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(half.cdf(1.0) == doctest::Approx(0.75).epsilon(1e-10));

  // q = 1: u(x) = (1/2)(x^2+1)^{-3/2}
  const StationaryDensity one = invariant_density(1.0);
  CHECK(one.pdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(one.pdf(1.0) == doctest::Approx(0.5 * std::pow(2.0, -1.5)).epsilon(1e-12));
  CHECK(one.cdf(0.0) == doctest::Approx(0.5).epsilon(1e-10));

  // pdf integral matches both the closed-form antiderivative x/(2 sqrt(x^2+1))
  // and the cdf; total mass approaches 1 once the heavy tails are included
  const double mass =
      integrate_adaptive([&](double x) { return one.pdf(x); }, -60.0, 60.0, 1e-10);
  CHECK(mass == doctest::Approx(60.0 / std::sqrt(3601.0)).epsilon(1e-9));
  CHECK(mass == doctest::Approx(one.cdf(60.0) - one.cdf(-60.0)).epsilon(1e-8));
  CHECK(one.cdf(1e8) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(half.cdf(1e12) == doctest::Approx(1.0).epsilon(1e-10));

  // heavy-tail constant: u_q(x) x^{2q+1} -> C_q
  CHECK(one.pdf(200.0) * std::pow(200.0, 3.0) ==
        doctest::Approx(one.tail_constant()).epsilon(1e-3));
}

TEST_CASE("hitting split: linear scale function at q = 1/2") {
  CHECK(hitting_split(0.5, 0.3, 1.0) == doctest::Approx(0.3).epsilon(1e-10));
  CHECK(hitting_split(0.5, 0.0, 2.0) == doctest::Approx(0.0));
  CHECK(hitting_split(1.0, 1.0, 1.0) == doctest::Approx(1.0));
  // q = 1: phi is convex with phi(0) = 0, so phi(y/2)/phi(y) < 1/2
  CHECK(hitting_split(1.0, 0.5, 1.0) < 0.5);
}

TEST_CASE("hitting split matches a first-exit simulation") {
  // weighted dynamics from x = 0.6: P{K hits y = 1.2 before 0}. At q = 1/2
  // the drift vanishes, so the target is the martingale value x/y = 1/2.
  const double q = 0.5, x0 = 0.6, y = 1.2;
  const double target = hitting_split(q, x0, y);
  CHECK(target == doctest::Approx(0.5).epsilon(1e-10));
  const std::size_t n_paths = 4000;
  const double dt = 1e-4;
  std::vector<double> hit(n_paths);
  std::uint64_t state = 88172645463325252ull;
  auto u01 = [&state]() {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return static_cast<double>(state >> 11) * 0x1.0p-53;
  };
  const double sqdt = std::sqrt(dt);
  for (std::size_t i = 0; i < n_paths; ++i) {
    double k = x0;
    for (;;) {
      // Box-Muller pair, one draw used
      const double g =
          std::sqrt(-2.0 * std::log(1.0 - u01())) * std::cos(6.283185307179586 * u01());
      k += (0.5 - q) * k * dt + std::sqrt(k * k + 1.0) * sqdt * g;
      if (k >= y) {
        hit[i] = 1.0;
        break;
      }
      if (k <= 0.0) {
        hit[i] = 0.0;
        break;
      }
    }
  }
  const EnsembleStats st = summarize(hit, target, dt);
  CHECK(std::abs(st.zscore) < 4.0);
}

TEST_CASE("K path bookkeeping and invariants") {
  const KPath p = simulate_K(1.0, 1.0, 2.0, 1e-3, KRegime::weighted, 0.0, 9);
  REQUIRE(p.t.size() == p.k.size());
  REQUIRE(p.t.size() == p.l.size());
  REQUIRE(p.t.size() == p.sigma.size());
  CHECK(p.t.back() == doctest::Approx(2.0));
  CHECK(p.violations == 0);
  // |L_t| <= t holds pathwise
  bool l_ok = true;
  for (std::size_t j = 0; j < p.t.size(); ++j) {
    l_ok = l_ok && std::abs(p.l[j]) <= p.t[j] + 1e-9;
  }
  CHECK(l_ok);
  // sigma is nondecreasing
  bool s_ok = true;
  for (std::size_t j = 1; j < p.sigma.size(); ++j) {
    s_ok = s_ok && p.sigma[j] >= p.sigma[j - 1];
  }
  CHECK(s_ok);
}

TEST_CASE("tilted exponential moment at a cheap scale") {
  const EnsembleStats st = exp_moment_check(1.0, 0.5, 0.5, 4000, 1e-3, 12345);
  CHECK(std::abs(st.zscore) < 4.0);
}

TEST_CASE("weight martingale at a cheap scale") {
  const EnsembleStats st = nt_martingale_check(1.0, 1.0, 0.5, 4000, 1e-3, 54321);
  CHECK(st.target == doctest::Approx(1.0));
  CHECK(std::abs(st.zscore) < 4.0);
}

TEST_CASE("stationarity report shape at a cheap scale") {
  const StationarityReport rep = diffusion_stationarity(2.0, 40, 30.0, 2e-3, 7);
  CHECK(rep.n_samples > 1000);
  CHECK(rep.ks < 0.2);
  CHECK(rep.violations == 0);
  CHECK(rep.hist_edges.size() == rep.hist_density.size() + 1);
  CHECK(rep.hist_density.size() == rep.hist_target.size());
}

TEST_CASE("envelope coverage definition") {
  const EnvelopeReport rep = envelope_check(1.0, 1.0, 0.5, 20.0, 200, 2e-3, 3);
  CHECK(rep.c_star > 0.0);
  CHECK(rep.c_sigma > 0.0);
  CHECK(rep.coverage_at_c_star >= 0.9);
  CHECK(rep.violations == 0);
}
