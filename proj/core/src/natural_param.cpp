#include "slelab/natural_param.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "slelab/parallel.hpp"
#include "slelab/params.hpp"
#include "slelab/stats.hpp"

namespace slelab {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Steps of the uniform grid per 1/n interval; throws when dt does not
// resolve the subdivision.
std::size_t steps_per_interval(double dt, std::size_t n, const char* who) {
  if (n == 0) throw std::domain_error(std::string(who) + ": n must be positive");
  if (!(dt > 0.0)) throw std::domain_error(std::string(who) + ": empty grid");
  const double ratio = 1.0 / (static_cast<double>(n) * dt);
  const auto m = static_cast<std::size_t>(std::llround(ratio));
  if (m == 0 || std::abs(ratio - static_cast<double>(m)) > 1e-9 * ratio) {
    throw std::domain_error(std::string(who) + ": grid does not resolve 1/n");
  }
  return m;
}

double pow_signed(double v, double u) {
  return v >= 0.0 ? std::pow(v, u) : -std::pow(-v, u);
}

// Uniform spatial hash over points, bucket side = eps: any point within eps
// of a query sits in one of the 3x3 neighbor buckets.
class PointHash {
 public:
  PointHash(const std::vector<cplx>& pts, double eps)
      : pts_(pts), inv_(1.0 / eps) {
    if (pts.empty()) return;
    xlo_ = pts[0].real();
    ylo_ = pts[0].imag();
    for (cplx p : pts) {
      xlo_ = std::min(xlo_, p.real());
      ylo_ = std::min(ylo_, p.imag());
    }
    nx_ = 1;
    ny_ = 1;
    for (cplx p : pts) {
      nx_ = std::max(nx_, static_cast<std::size_t>(cell(p.real() - xlo_)) + 1);
      ny_ = std::max(ny_, static_cast<std::size_t>(cell(p.imag() - ylo_)) + 1);
    }
    buckets_.resize(nx_ * ny_);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      buckets_[index(pts[i])].push_back(static_cast<std::uint32_t>(i));
    }
  }

  bool within(cplx q, double eps_sq) const {
    if (pts_.empty()) return false;
    const std::ptrdiff_t cx = cell(q.real() - xlo_);
    const std::ptrdiff_t cy = cell(q.imag() - ylo_);
    for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
      const std::ptrdiff_t y = cy + dy;
      if (y < 0 || y >= static_cast<std::ptrdiff_t>(ny_)) continue;
      for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
        const std::ptrdiff_t x = cx + dx;
        if (x < 0 || x >= static_cast<std::ptrdiff_t>(nx_)) continue;
        for (std::uint32_t i : buckets_[static_cast<std::size_t>(y) * nx_ +
                                        static_cast<std::size_t>(x)]) {
          if (std::norm(q - pts_[i]) <= eps_sq) return true;
        }
      }
    }
    return false;
  }

 private:
  std::ptrdiff_t cell(double offset) const {
    return static_cast<std::ptrdiff_t>(std::floor(offset * inv_));
  }
  std::size_t index(cplx p) const {
    return static_cast<std::size_t>(cell(p.imag() - ylo_)) * nx_ +
           static_cast<std::size_t>(cell(p.real() - xlo_));
  }

  const std::vector<cplx>& pts_;
  double inv_;
  double xlo_ = 0.0, ylo_ = 0.0;
  std::size_t nx_ = 0, ny_ = 0;
  std::vector<std::vector<std::uint32_t>> buckets_;
};

// Intersection area of two disks of radius rho at center distance s.
double lens_area(double s, double rho) {
  const double u = std::min(1.0, s / (2.0 * rho));
  return 2.0 * rho * rho * std::acos(u) -
         0.5 * s * std::sqrt(std::max(0.0, 4.0 * rho * rho - s * s));
}

// E |X - Y|^(-alpha), X and Y independent uniform on one disk of radius rho.
// Radial density of the difference is the lens area; the substitution
// s = 2 rho u^(1/(2-alpha)) absorbs the s^(1-alpha) singularity exactly.
double self_energy(double rho, double alpha) {
  const double p = 1.0 / (2.0 - alpha);
  const double pref =
      2.0 / (kPi * rho * rho * rho * rho) * std::pow(2.0 * rho, 2.0 - alpha) * p;
  const double integral = integrate_gl(
      [rho, p](double u) { return lens_area(2.0 * rho * std::pow(u, p), rho); },
      0.0, 1.0, 64);
  return pref * integral;
}

// Same moment for two disks at center distance delta <= 4 rho, by product
// quadrature of the difference density: Gauss-Legendre radially, uniform
// midpoints in angle, 32 x 32 nodes.
double pair_energy_quad(double delta, double rho, double alpha) {
  constexpr int kN = 32;
  std::vector<double> sx(kN), sw(kN);
  gauss_legendre(kN, 0.0, 2.0 * rho, sx, sw);
  double sum = 0.0;
  for (int i = 0; i < kN; ++i) {
    const double s = sx[i];
    const double ring = sw[i] * s * lens_area(s, rho);
    double angular = 0.0;
    for (int j = 0; j < kN; ++j) {
      const double phi = (j + 0.5) * (2.0 * kPi / kN);
      const double dx = delta + s * std::cos(phi);
      const double dy = s * std::sin(phi);
      angular += std::pow(dx * dx + dy * dy, -0.5 * alpha);
    }
    sum += ring * angular * (2.0 * kPi / kN);
  }
  return sum / (kPi * kPi * rho * rho * rho * rho);
}

}  // namespace

const char* tau_candidate_name(TauCandidate c) {
  switch (c) {
    case TauCandidate::minkowski:
      return "minkowski";
    case TauCandidate::conformal_minkowski:
      return "conformal_minkowski";
    case TauCandidate::d_variation:
      return "d_variation";
    case TauCandidate::derivative_sum:
      return "derivative_sum";
  }
  return "unknown";
}

void write_param_series_csv(const ParamSeries& s, const std::string& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot open " + file);
  out << "t,tau\n";
  char buf[64];
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g", s.times[k], s.taus[k]);
    out << buf << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + file);
}

ParamSeries read_param_series_csv(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file);
  std::string line;
  if (!std::getline(in, line) || line != "t,tau") {
    throw std::runtime_error("bad header in " + file);
  }
  ParamSeries s;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    double t = 0.0, tau = 0.0;
    char comma = 0;
    if (!(row >> t >> comma >> tau) || comma != ',') {
      throw std::runtime_error("bad row in " + file);
    }
    s.times.push_back(t);
    s.taus.push_back(tau);
  }
  return s;
}

ParamSeries tau_derivative_sum(const DrivingPath& driver, std::size_t n) {
  const std::size_t m = steps_per_interval(driver.dt, n, "tau_derivative_sum");
  const SlitChain chain = build_chain(driver);
  const double d = derive_exponents_from_a(driver.a).d;
  const double y = 1.0 / std::sqrt(static_cast<double>(n));
  const double pref = std::pow(static_cast<double>(n), -0.5 * d);
  const std::size_t count = driver.n_steps() / m;

  ParamSeries s;
  s.candidate = TauCandidate::derivative_sum;
  s.n = n;
  s.d = d;
  s.times.push_back(0.0);
  s.taus.push_back(0.0);
  double tau = 0.0;
  for (std::size_t k = 1; k <= count; ++k) {
    const std::size_t upto = k * m;
    const cplx w(chain.driver_at(upto), y);
    const EvalResult er = evaluate_inverse(chain, w, upto);
    tau += pref * std::pow(std::abs(er.deriv), d);
    s.times.push_back(static_cast<double>(k) / static_cast<double>(n));
    s.taus.push_back(tau);
  }
  return s;
}

ParamSeries tau_d_variation(const Trace& tr, std::size_t n, double d) {
  const std::size_t m = steps_per_interval(tr.dt, n, "tau_d_variation");
  if (tr.points.empty()) throw std::domain_error("tau_d_variation: empty trace");
  const std::size_t count = (tr.points.size() - 1) / m;

  ParamSeries s;
  s.candidate = TauCandidate::d_variation;
  s.n = n;
  s.d = d;
  s.times.push_back(0.0);
  s.taus.push_back(0.0);
  double tau = 0.0;
  for (std::size_t k = 1; k <= count; ++k) {
    tau += std::pow(std::abs(tr.points[k * m] - tr.points[(k - 1) * m]), d);
    s.times.push_back(static_cast<double>(k) / static_cast<double>(n));
    s.taus.push_back(tau);
  }
  return s;
}

double tau_minkowski(const Trace& tr, double eps, double d, BBox bbox,
                     double grid_h) {
  if (!(eps > 0.0)) throw std::invalid_argument("tau_minkowski: eps must be positive");
  if (!(grid_h > 0.0) || grid_h > 0.25 * eps) {
    throw std::invalid_argument("tau_minkowski: grid_h must be in (0, eps/4]");
  }
  if (tr.points.empty()) return 0.0;
  double xlo = tr.points[0].real(), xhi = xlo;
  double ylo = tr.points[0].imag(), yhi = ylo;
  for (cplx p : tr.points) {
    xlo = std::min(xlo, p.real());
    xhi = std::max(xhi, p.real());
    ylo = std::min(ylo, p.imag());
    yhi = std::max(yhi, p.imag());
  }
  if (xlo - eps < bbox.xlo || xhi + eps > bbox.xhi || ylo - eps < bbox.ylo ||
      yhi + eps > bbox.yhi) {
    throw std::domain_error("tau_minkowski: bbox does not contain the eps-neighborhood");
  }

  const PointHash hash(tr.points, eps);
  const double eps_sq = eps * eps;
  const auto nx = static_cast<std::size_t>(std::ceil(bbox.width() / grid_h));
  const auto ny = static_cast<std::size_t>(std::ceil(bbox.height() / grid_h));
  std::size_t count = 0;
  for (std::size_t j = 0; j < ny; ++j) {
    const double y = bbox.ylo + (static_cast<double>(j) + 0.5) * grid_h;
    for (std::size_t i = 0; i < nx; ++i) {
      const double x = bbox.xlo + (static_cast<double>(i) + 0.5) * grid_h;
      if (hash.within(cplx(x, y), eps_sq)) ++count;
    }
  }
  return std::pow(eps, d - 2.0) * static_cast<double>(count) * grid_h * grid_h;
}

double tau_conformal_minkowski(const DrivingPath& driver, BBox bbox, double grid_h,
                               double eps, double t, double d, int jobs) {
  if (!(eps > 0.0)) {
    throw std::invalid_argument("tau_conformal_minkowski: eps must be positive");
  }
  if (!(grid_h > 0.0)) {
    throw std::invalid_argument("tau_conformal_minkowski: grid_h must be positive");
  }
  if (!(t >= 0.0) || t > driver.horizon() * (1.0 + 1e-12)) {
    throw std::domain_error("tau_conformal_minkowski: t outside the driver horizon");
  }
  const SlitChain chain = build_chain(driver);
  const auto upto = static_cast<std::size_t>(std::llround(t / driver.dt));
  if (std::abs(static_cast<double>(upto) * driver.dt - t) > 1e-9 * std::max(1.0, t)) {
    throw std::domain_error("tau_conformal_minkowski: t not on the driver grid");
  }

  const auto nx = static_cast<std::size_t>(std::ceil(bbox.width() / grid_h));
  const auto ny = static_cast<std::size_t>(std::ceil(bbox.height() / grid_h));
  std::vector<std::size_t> row_counts(ny, 0);
  parallel_for(ny, jobs, [&](std::size_t j) {
    const double y = bbox.ylo + (static_cast<double>(j) + 0.5) * grid_h;
    if (y <= 0.0) return;
    std::size_t count = 0;
    for (std::size_t i = 0; i < nx; ++i) {
      const double x = bbox.xlo + (static_cast<double>(i) + 0.5) * grid_h;
      cplx Z(x, y);
      double ups = y;
      for (std::size_t k = 0; k < upto; ++k) {
        const SlitMap& mp = chain.maps[k];
        const cplx dz = Z - mp.du;
        const cplx w = slit_sqrt(dz * dz + mp.c, dz.real());
        // e'(z) = (z - du)/(e(z) - du); Upsilon picks up Im ratio over |e'|.
        ups *= (w.imag() / dz.imag()) * std::sqrt(std::norm(w) / std::norm(dz));
        Z = mp.du + w;
        if (ups <= eps || Z.imag() <= 1e-12) break;
      }
      if (ups <= eps) ++count;
    }
    row_counts[j] = count;
  });
  std::size_t count = 0;
  for (std::size_t c : row_counts) count += c;
  return std::pow(eps, d - 2.0) * static_cast<double>(count) * grid_h * grid_h;
}

double Phi0::operator()(double x) const {
  const double root = std::sqrt(std::log1p(x));
  const double ll = std::log(std::log(x + 2.0));
  return C * std::exp(root * pow_signed(ll, u));
}

GoodEventReport good_event_indicator(const FlowState& state, std::size_t n,
                                     Phi0 phi0, double a) {
  if (n == 0) throw std::domain_error("good_event_indicator: n must be positive");
  const double y0 = 1.0 / std::sqrt(static_cast<double>(n));
  if (!state.is_reverse || std::abs(state.z0 - cplx(0.0, y0)) > 1e-12 * y0) {
    throw std::domain_error(
        "good_event_indicator: state must be a reverse flow from i/sqrt(n)");
  }
  if (state.times.size() < 2) {
    throw std::domain_error("good_event_indicator: state has no steps");
  }
  const double beta = derive_exponents_from_a(a).beta;
  const double nd = static_cast<double>(n);
  const double log_hp_end = state.log_abs_deriv.back();

  GoodEventReport rep;
  rep.events.fill(true);
  rep.C = phi0.C;
  rep.u = phi0.u;
  rep.n = n;
  rep.S = state.times.back();
  for (std::size_t k = 0; k < state.times.size(); ++k) {
    const double t = state.times[k];
    if (t < 1.0 / nd - 1e-12) continue;
    const double rt = std::sqrt(t);
    const double p_inv = phi0(1.0 / t);
    const double p_nt = phi0(nd * t);
    const double yk = state.Y(k);
    const double xk = std::abs(state.z[k].real());
    const double hp = state.abs_deriv(k);
    const double scale = std::pow(nd * t, beta);
    const double ratio = std::exp(log_hp_end - state.log_abs_deriv[k]);
    const double tb = std::pow(t, -beta);
    if (yk < rt / p_inv) rep.events[0] = false;
    if (yk < rt / p_nt) rep.events[1] = false;
    if (xk > rt * p_inv) rep.events[2] = false;
    if (xk > rt * p_nt) rep.events[3] = false;
    if (hp < scale / p_nt || hp > scale * p_nt) rep.events[4] = false;
    if (ratio < tb / p_inv || ratio > tb * p_inv) rep.events[5] = false;
  }
  rep.overall = true;
  for (bool e : rep.events) rep.overall = rep.overall && e;
  return rep;
}

double frostman_weight(const FlowState& state, std::size_t n, double a,
                       const GoodEventReport& event) {
  if (event.n != n) {
    throw std::invalid_argument("frostman_weight: event evaluated for a different n");
  }
  if (!event.overall) return 0.0;
  const double d = derive_exponents_from_a(a).d;
  return std::pow(static_cast<double>(n), 1.0 - 0.5 * d) *
         std::exp(d * state.log_abs_deriv.back());
}

double EmpiricalMeasure::total_mass() const {
  double m = 0.0;
  for (const Atom& atom : atoms) m += atom.mass;
  return m;
}

FrostmanEnergy frostman_energy(const EmpiricalMeasure& mu, double alpha) {
  if (!(mu.smear_radius > 0.0)) {
    throw std::invalid_argument("frostman_energy: point masses disallowed, smear first");
  }
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("frostman_energy: alpha must be positive");
  }
  for (const auto& atom : mu.atoms) {
    if (atom.mass < 0.0) throw std::invalid_argument("frostman_energy: negative mass");
  }
  const double rho = mu.smear_radius;
  const bool divergent = alpha >= 2.0;
  FrostmanEnergy out;
  const double self = divergent ? 0.0 : self_energy(rho, alpha);

  const std::size_t n = mu.atoms.size();
  for (std::size_t j = 0; j < n; ++j) {
    const double mj = mu.atoms[j].mass;
    if (mj == 0.0) continue;
    if (divergent) {
      out.divergent_risk = true;  // self-pair always overlaps
    } else {
      out.value += mj * mj * self;
    }
    for (std::size_t k = j + 1; k < n; ++k) {
      const double mm = mj * mu.atoms[k].mass;
      if (mm == 0.0) continue;
      const double delta = std::abs(mu.atoms[j].center - mu.atoms[k].center);
      if (delta > 4.0 * rho) {
        out.value += 2.0 * mm * std::pow(delta, -alpha);
      } else if (divergent && delta < 2.0 * rho) {
        out.divergent_risk = true;  // overlapping smears, infinite integral
      } else {
        out.value += 2.0 * mm * pair_energy_quad(delta, rho, alpha);
      }
    }
  }
  return out;
}

FrostmanDiagnostic frostman_diagnostic(const DrivingPath& driver, std::size_t n,
                                       double alpha, Phi0 phi0, int jobs) {
  const std::size_t m = steps_per_interval(driver.dt, n, "frostman_diagnostic");
  const double nd = static_cast<double>(n);
  const double s_max = 2.0 - 1.0 / nd;
  if (driver.horizon() < s_max - 1e-9) {
    throw std::domain_error("frostman_diagnostic: driver must reach 2 - 1/n");
  }
  const SleParams ex = derive_exponents_from_a(driver.a);
  const double y0 = 1.0 / std::sqrt(nd);

  FrostmanDiagnostic diag;
  diag.n = n;
  diag.a = driver.a;
  diag.alpha = alpha;
  diag.xi = ex.xi;
  diag.weights.assign(n, 0.0);
  std::vector<int> passed(n, 0);
  parallel_for(n, jobs, [&](std::size_t idx) {
    const std::size_t j = idx + 1;
    const double sj = 1.0 + (static_cast<double>(j) - 1.0) / nd;
    const DrivingPath head = reverse_driver(driver, sj).head;
    const FlowState state = reverse_point(head, cplx(0.0, y0));
    const GoodEventReport ev = good_event_indicator(state, n, phi0, driver.a);
    diag.weights[idx] = frostman_weight(state, n, driver.a, ev);
    passed[idx] = ev.overall ? 1 : 0;
  });

  const Trace tr = trace(driver);
  diag.measure.smear_radius = std::pow(nd, -(1.0 - ex.xi) / alpha);
  diag.measure.atoms.reserve(n);
  double sum_w = 0.0;
  for (std::size_t idx = 0; idx < n; ++idx) {
    diag.measure.atoms.push_back({tr.points[(idx + 1) * m], diag.weights[idx] / nd});
    sum_w += diag.weights[idx];
    diag.events_passed += static_cast<std::size_t>(passed[idx]);
  }
  diag.mean_weight = sum_w / nd;
  diag.energy = frostman_energy(diag.measure, alpha);
  return diag;
}

}  // namespace slelab
