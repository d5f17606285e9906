#include "slelab/diffusion.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "slelab/parallel.hpp"
#include "slelab/params.hpp"
#include "slelab/rng.hpp"

namespace slelab {

namespace {

double drift_coeff(double q, double r, KRegime regime) {
  return regime == KRegime::original ? 0.5 - q - r : 0.5 - q;
}

std::size_t grid_steps(double T, double dt, const char* who) {
  if (!(dt > 0.0)) throw std::invalid_argument(std::string(who) + ": dt must be positive");
  if (!(T >= 0.0)) throw std::invalid_argument(std::string(who) + ": T must be nonnegative");
  const auto n = static_cast<std::size_t>(std::llround(T / dt));
  if (std::abs(static_cast<double>(n) * dt - T) > 1e-9 * std::max(1.0, T)) {
    throw std::invalid_argument(std::string(who) + ": T not on the dt grid");
  }
  return n;
}

inline double occupation_integrand(double k) {
  const double k2 = k * k;
  return (k2 - 1.0) / (k2 + 1.0);
}

}  // namespace

KPath simulate_K(double q, double r, double T, double dt, KRegime regime, double x0,
                 std::uint64_t seed) {
  const std::size_t n = grid_steps(T, dt, "simulate_K");
  KPath p;
  p.dt = dt;
  p.q = q;
  p.r = r;
  p.a = 0.5 * (q + r - 0.5);
  p.x0 = x0;
  p.regime = regime;
  p.t.resize(n + 1);
  p.k.resize(n + 1);
  p.l.resize(n + 1);
  p.sigma.resize(n + 1);

  NormalSampler normal(seed);
  const double b = drift_coeff(q, r, regime);
  const double sqdt = std::sqrt(dt);
  const double two_a = 2.0 * p.a;

  double k = x0, l = 0.0, sigma = 0.0;
  double occ_prev = occupation_integrand(k);
  double sig_prev = k * k + 1.0;  // e^{0} (K_0^2+1)
  p.t[0] = 0.0;
  p.k[0] = k;
  p.l[0] = 0.0;
  p.sigma[0] = 0.0;

  for (std::size_t j = 1; j <= n; ++j) {
    const double t = dt * static_cast<double>(j);
    k += b * k * dt + std::sqrt(k * k + 1.0) * sqdt * normal();
    const double occ = occupation_integrand(k);
    l += 0.5 * dt * (occ_prev + occ);
    occ_prev = occ;
    const double sig_here = std::exp(two_a * t) * (k * k + 1.0);
    sigma += 0.5 * dt * (sig_prev + sig_here);
    sig_prev = sig_here;

    p.t[j] = t;
    p.k[j] = k;
    p.l[j] = l;
    p.sigma[j] = sigma;

    if (std::abs(l) > t * (1.0 + 1e-9) + 1e-12) ++p.violations;
    const double sig_floor =
        two_a != 0.0 ? (std::exp(two_a * t) - 1.0) / two_a : t;
    if (sigma < sig_floor * (1.0 - 1e-12)) ++p.violations;
    if (sigma < p.sigma[j - 1]) ++p.violations;
  }
  return p;
}

void write_kpath_csv(const KPath& path, const std::string& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("write_kpath_csv: cannot open " + file);
  out << "t,k,l,sigma\n";
  char buf[128];
  for (std::size_t j = 0; j < path.t.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g", path.t[j], path.k[j],
                  path.l[j], path.sigma[j]);
    out << buf << '\n';
  }
}

double StationaryDensity::pdf(double x) const {
  return norm_const * std::pow(x * x + 1.0, -(q + 0.5));
}

double StationaryDensity::cdf(double x) const {
  const double hi = std::atan(std::abs(x));
  if (hi == 0.0) return 0.5;
  const double e = 2.0 * q - 1.0;
  const double half = norm_const *
      integrate_gl([e](double th) { return std::pow(std::cos(th), e); }, 0.0, hi, 48);
  return x > 0.0 ? 0.5 + half : 0.5 - half;
}

StationaryDensity invariant_density(double q) {
  if (!(q > 0.0)) throw std::domain_error("invariant_density: q must be positive");
  StationaryDensity d;
  d.q = q;
  d.norm_const = std::exp(std::lgamma(q + 0.5) - std::lgamma(0.5) - std::lgamma(q));
  return d;
}

double hitting_split(double q, double x, double y) {
  if (!(q > 0.0)) throw std::domain_error("hitting_split: q must be positive");
  if (y == 0.0 || x * x > y * y) {
    throw std::invalid_argument("hitting_split: need 0 <= x^2 <= y^2, y != 0");
  }
  // phi(x) = int_0^|x| (s^2+1)^{q-1/2} ds = int_0^{atan|x|} cos^{-(2q+1)} dtheta
  const auto phi = [q](double v) {
    const double hi = std::atan(std::abs(v));
    if (hi == 0.0) return 0.0;
    const double e = -(2.0 * q + 1.0);
    return integrate_gl([e](double th) { return std::pow(std::cos(th), e); }, 0.0, hi, 64);
  };
  return phi(x) / phi(y);
}

EnsembleStats exp_moment_check(double q, double delta, double t, std::size_t n_paths,
                               double dt, std::uint64_t seed, double x0, int jobs) {
  const std::size_t n = grid_steps(t, dt, "exp_moment_check");
  const MomentPair mp = moment_pair(q, delta);
  std::vector<double> vals(n_paths);
  parallel_for(n_paths, jobs, [&](std::size_t i) {
    NormalSampler normal(path_seed(seed, i));
    const double b = 0.5 - q;  // weighted dynamics
    const double sqdt = std::sqrt(dt);
    double k = x0, l = 0.0;
    double occ_prev = occupation_integrand(k);
    for (std::size_t j = 0; j < n; ++j) {
      k += b * k * dt + std::sqrt(k * k + 1.0) * sqdt * normal();
      const double occ = occupation_integrand(k);
      l += 0.5 * dt * (occ_prev + occ);
      occ_prev = occ;
    }
    vals[i] = std::exp(mp.p * l) * std::pow(k * k + 1.0, 0.5 * delta);
  });
  const double target =
      std::pow(x0 * x0 + 1.0, 0.5 * delta) * std::exp(t * (0.5 * delta - mp.p));
  return summarize(vals, target, dt);
}

EnsembleStats nt_martingale_check(double q, double r, double t, std::size_t n_paths,
                                  double dt, std::uint64_t seed, double x0, int jobs) {
  const std::size_t n = grid_steps(t, dt, "nt_martingale_check");
  const double theta = 0.5 * r + q * r + 0.5 * r * r;
  std::vector<double> vals(n_paths);
  parallel_for(n_paths, jobs, [&](std::size_t i) {
    NormalSampler normal(path_seed(seed, i));
    const double b = 0.5 - q - r;  // original dynamics
    const double sqdt = std::sqrt(dt);
    double k = x0, l = 0.0;
    double occ_prev = occupation_integrand(k);
    for (std::size_t j = 0; j < n; ++j) {
      k += b * k * dt + std::sqrt(k * k + 1.0) * sqdt * normal();
      const double occ = occupation_integrand(k);
      l += 0.5 * dt * (occ_prev + occ);
      occ_prev = occ;
    }
    vals[i] = std::exp(0.5 * theta * (l - t) + (theta - 0.5 * r) * t) *
              std::pow(k * k + 1.0, 0.5 * r);
  });
  const double target = std::pow(x0 * x0 + 1.0, 0.5 * r);
  return summarize(vals, target, dt);
}

StationarityReport diffusion_stationarity(double q, std::size_t n_paths, double T,
                                          double dt, std::uint64_t seed, int jobs) {
  if (!(q > 0.0)) throw std::domain_error("diffusion_stationarity: q must be positive");
  const std::size_t n = grid_steps(T, dt, "diffusion_stationarity");
  const double burn = 10.0 / q;
  if (T <= burn + 1.0) {
    throw std::invalid_argument("diffusion_stationarity: horizon below burn-in");
  }
  const double spacing = 0.5;
  const auto burn_steps = static_cast<std::size_t>(std::ceil(burn / dt));
  const auto stride = static_cast<std::size_t>(std::llround(spacing / dt));
  const std::size_t per_path = (n - burn_steps) / stride;

  std::vector<std::vector<double>> samples(n_paths);
  std::vector<double> drift(n_paths);
  std::vector<int> violations(n_paths, 0);
  parallel_for(n_paths, jobs, [&](std::size_t i) {
    NormalSampler normal(path_seed(seed, i));
    const double b = 0.5 - q;
    const double sqdt = std::sqrt(dt);
    double k = 0.0, l = 0.0, l_burn = 0.0;
    double occ_prev = occupation_integrand(k);
    samples[i].reserve(per_path);
    for (std::size_t j = 1; j <= n; ++j) {
      k += b * k * dt + std::sqrt(k * k + 1.0) * sqdt * normal();
      const double occ = occupation_integrand(k);
      l += 0.5 * dt * (occ_prev + occ);
      occ_prev = occ;
      const double t = dt * static_cast<double>(j);
      if (std::abs(l) > t * (1.0 + 1e-9) + 1e-12) ++violations[i];
      if (j == burn_steps) l_burn = l;
      if (j > burn_steps && (j - burn_steps) % stride == 0 &&
          samples[i].size() < per_path) {
        samples[i].push_back(k);
      }
    }
    drift[i] = (l - l_burn) / (T - dt * static_cast<double>(burn_steps));
  });

  StationarityReport rep;
  rep.q = q;
  rep.burn_in = burn;
  rep.sample_spacing = spacing;
  const double mu = (1.0 - 2.0 * q) / (1.0 + 2.0 * q);
  rep.l_drift = summarize(drift, mu, dt);
  std::vector<double> pooled;
  pooled.reserve(n_paths * per_path);
  for (const auto& s : samples) pooled.insert(pooled.end(), s.begin(), s.end());
  rep.n_samples = pooled.size();
  const StationaryDensity d = invariant_density(q);

  // Histogram against the target density, for the plot-ready bundle output.
  const int bins = 48;
  const double lo = -6.0, hi = 6.0;
  const double w = (hi - lo) / bins;
  rep.hist_edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) rep.hist_edges[b] = lo + w * b;
  rep.hist_density.assign(bins, 0.0);
  rep.hist_target.resize(bins);
  for (double x : pooled) {
    if (x < lo || x >= hi) continue;
    rep.hist_density[static_cast<std::size_t>((x - lo) / w)] += 1.0;
  }
  const double total = static_cast<double>(pooled.size());
  for (int b = 0; b < bins; ++b) {
    rep.hist_density[b] /= total * w;
    rep.hist_target[b] = d.pdf(lo + w * (b + 0.5));
  }

  rep.ks = ks_distance(std::move(pooled), [&d](double x) { return d.cdf(x); });
  for (int v : violations) rep.violations += v;
  return rep;
}

EnvelopeReport envelope_check(double q, double r, double u, double T,
                              std::size_t n_paths, double dt, std::uint64_t seed,
                              int jobs) {
  if (!(q > 0.0)) throw std::domain_error("envelope_check: q must be positive");
  const std::size_t n = grid_steps(T, dt, "envelope_check");
  const double mu = (1.0 - 2.0 * q) / (1.0 + 2.0 * q);
  const double a = 0.5 * (q + r - 0.5);
  const double two_a = 2.0 * a;

  std::vector<double> c_joint(n_paths), c_sig(n_paths);
  std::vector<int> violations(n_paths, 0);
  parallel_for(n_paths, jobs, [&](std::size_t i) {
    NormalSampler normal(path_seed(seed, i));
    const double b = 0.5 - q;  // envelopes are statements about the weighted flow
    const double sqdt = std::sqrt(dt);
    double k = 0.0, l = 0.0, sigma = 0.0;
    double occ_prev = occupation_integrand(k);
    double sig_prev = 1.0;
    double cl = 0.0, ck = 1.0, cs = 0.0;
    for (std::size_t j = 1; j <= n; ++j) {
      k += b * k * dt + std::sqrt(k * k + 1.0) * sqdt * normal();
      const double occ = occupation_integrand(k);
      l += 0.5 * dt * (occ_prev + occ);
      occ_prev = occ;
      const double s = dt * static_cast<double>(j);
      const double sig_here = std::exp(two_a * s) * (k * k + 1.0);
      sigma += 0.5 * dt * (sig_prev + sig_here);
      sig_prev = sig_here;
      if (std::abs(l) > s * (1.0 + 1e-9) + 1e-12) ++violations[i];

      const double env_l = std::sqrt(s + 2.0) * std::log(s + 2.0);
      cl = std::max(cl, std::abs(l - mu * s) / env_l);
      const double env_k = std::min(std::pow(s + 1.0, u), std::pow(T - s + 1.0, u));
      ck = std::max(ck, (k * k + 1.0) / env_k);
      cs = std::max(cs, sigma / (std::exp(two_a * s) * env_k));
    }
    c_joint[i] = std::max(cl, ck);
    c_sig[i] = cs;
  });

  EnvelopeReport rep;
  rep.q = q;
  rep.r = r;
  rep.u = u;
  rep.T = T;
  rep.n_paths = n_paths;
  if (n == 0) {
    rep.c_star = 1.0;
    rep.c_sigma = 0.0;
    rep.coverage_at_c_star = 1.0;
    return rep;
  }
  rep.c_star = percentile(c_joint, 0.9);
  rep.c_sigma = percentile(c_sig, 0.9);
  std::size_t covered = 0;
  for (double c : c_joint) {
    if (c <= rep.c_star) ++covered;
  }
  rep.coverage_at_c_star = static_cast<double>(covered) / static_cast<double>(n_paths);
  for (int v : violations) rep.violations += v;
  return rep;
}

}  // namespace slelab
