#include "slelab/loewner.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "binio.hpp"
#include "slelab/stats.hpp"

namespace slelab {

namespace {

// One explicit midpoint step of the augmented frozen-driver flow,
//   dZ/dt = s/Z,  dlog|deriv|/dt = -s Re(1/Z^2),
// in real arithmetic: the half step is Z_mid = (x(1+g), y(1-g)) with
// g = s h / (2|Z|^2), because s/Z = s conj(Z)/|Z|^2.
inline void midpoint_step(double& zr, double& zi, double& logd, double s, double h) {
  const double m0 = zr * zr + zi * zi;
  const double g = 0.5 * h * s / m0;
  const double mr = zr * (1.0 + g);
  const double mi = zi * (1.0 - g);
  const double m1 = mr * mr + mi * mi;
  const double w = h * s / m1;
  zr += w * mr;
  zi -= w * mi;
  logd -= w * (mr * mr - mi * mi) / m1;
}

}  // namespace

bool advance_frozen(cplx& Z, double& logd, double s, double h_total, double tol,
                    double swallow_y) {
  if (h_total <= 0.0) return true;
  const bool fwd = s > 0.0;
  double zr = Z.real();
  double zi = Z.imag();
  double remaining = h_total;
  double h = h_total;
  const double h_floor = h_total * 0x1p-50;
  while (remaining > 0.0) {
    if (h > remaining) h = remaining;
    if (fwd && zi <= swallow_y) {
      Z = {zr, zi};
      return false;
    }
    const double n2 = zr * zr + zi * zi;
    if (n2 == 0.0) {
      Z = {zr, zi};
      return !fwd;
    }
    const double u = std::abs(s) * h / n2;
    const double budget = tol * (h / h_total);
    bool accepted = false;
    // Midpoint local error for this flow is |Z| u^3 / 4 on Z and O(u^3) on
    // the log-derivative; skip the halving comparison when safely below
    // budget, otherwise compare one full step against two half steps.
    if (u * u * u * (0.25 * std::sqrt(n2) + 1.0) <= 0.25 * budget) {
      midpoint_step(zr, zi, logd, s, h);
      accepted = true;
    } else {
      double r1 = zr, i1 = zi, l1 = logd;
      midpoint_step(r1, i1, l1, s, h);
      double r2 = zr, i2 = zi, l2 = logd;
      midpoint_step(r2, i2, l2, s, 0.5 * h);
      midpoint_step(r2, i2, l2, s, 0.5 * h);
      const double err = std::hypot(r1 - r2, i1 - i2) + std::abs(l1 - l2);
      if (err <= budget) {  // NaN fails the test and halves
        zr = r2;
        zi = i2;
        logd = l2;
        accepted = true;
      }
    }
    if (accepted) {
      remaining -= h;
      h *= 2.0;
    } else {
      h *= 0.5;
      if (h < h_floor) {
        // Step collapse: only reachable against the singularity, which the
        // forward flow interprets as swallowing. The reverse flow cannot
        // reach it from the open half plane; escape with a plain step so the
        // caller's monotonicity counters can flag the state.
        if (fwd) {
          Z = {zr, zi};
          return false;
        }
        midpoint_step(zr, zi, logd, s, h);
        remaining -= h;
        h = h_floor;
      }
    }
  }
  Z = {zr, zi};
  if (fwd && zi <= swallow_y) return false;
  return true;
}

SlitChain build_chain(const DrivingPath& driver) {
  if (driver.values.size() < 2) {
    throw std::invalid_argument("build_chain: driver needs at least one step");
  }
  if (!(driver.a > 0.0)) throw std::invalid_argument("build_chain: a must be positive");
  SlitChain chain;
  chain.dt = driver.dt;
  chain.a = driver.a;
  const double c = 2.0 * driver.a * driver.dt;
  chain.maps.resize(driver.n_steps());
  for (std::size_t j = 0; j < chain.maps.size(); ++j) {
    chain.maps[j].du = driver.values[j + 1];
    chain.maps[j].c = c;
  }
  return chain;
}

void write_chain_binary(const SlitChain& chain, const std::string& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("write_chain_binary: cannot open " + file);
  out.write("SLECHN1\0", 8);
  binio::put_u64(out, chain.maps.size());
  binio::put_f64(out, chain.dt);
  binio::put_f64(out, chain.a);
  for (const auto& m : chain.maps) {
    binio::put_f64(out, m.du);
    binio::put_f64(out, m.c);
  }
}

SlitChain read_chain_binary(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("read_chain_binary: cannot open " + file);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "SLECHN1\0", 8) != 0) {
    throw std::runtime_error("read_chain_binary: bad magic");
  }
  SlitChain chain;
  const std::uint64_t count = binio::get_u64(in, "read_chain_binary");
  chain.dt = binio::get_f64(in, "read_chain_binary");
  chain.a = binio::get_f64(in, "read_chain_binary");
  chain.maps.resize(count);
  for (auto& m : chain.maps) {
    m.du = binio::get_f64(in, "read_chain_binary");
    m.c = binio::get_f64(in, "read_chain_binary");
  }
  return chain;
}

EvalResult evaluate_inverse(const SlitChain& chain, cplx w, std::size_t upto) {
  const std::size_t n = std::min(upto, chain.maps.size());
  EvalResult res;
  for (std::size_t j = n; j-- > 0;) {
    const SlitMap& m = chain.maps[j];
    const cplx d = w - m.du;
    const cplx rad = d * d - m.c;
    if (std::abs(rad) < 1e-12 * std::max(m.c, std::norm(d))) ++res.near_slit;
    const cplx s = slit_sqrt(rad, d.real());
    res.deriv *= d / s;
    w = m.du + s;
  }
  res.value = w;
  return res;
}

namespace {

void check_start_point(cplx z, const char* who) {
  if (!(z.imag() > 0.0)) {
    throw std::invalid_argument(std::string(who) + ": start point must have Im z > 0");
  }
}

}  // namespace

FlowState forward_point(const DrivingPath& driver, cplx z, FlowOptions opts) {
  check_start_point(z, "forward_point");
  FlowState st;
  st.dt = driver.dt;
  st.a = driver.a;
  st.z0 = z;
  st.is_reverse = false;
  const std::size_t n = driver.n_steps();
  st.times.reserve(n + 1);
  st.z.reserve(n + 1);
  st.log_abs_deriv.reserve(n + 1);

  cplx Z = z;
  double logd = 0.0;
  st.times.push_back(0.0);
  st.z.push_back(Z);
  st.log_abs_deriv.push_back(0.0);
  double prev_upsilon = z.imag();

  for (std::size_t k = 1; k <= n; ++k) {
    const double dU = driver.values[k] - driver.values[k - 1];
    Z -= dU;
    const bool ok = advance_frozen(Z, logd, +driver.a, driver.dt, opts.ode_tol,
                                   opts.swallow_y);
    if (!ok || Z.imag() <= opts.swallow_y) {
      st.swallowed = true;
      st.swallow_time = driver.time_at(k);
      break;
    }
    st.times.push_back(driver.time_at(k));
    st.z.push_back(Z);
    st.log_abs_deriv.push_back(logd);
    const double ups = Z.imag() / std::exp(logd);
    if (ups > prev_upsilon * (1.0 + 1e-9)) ++st.violations;
    prev_upsilon = ups;
  }
  return st;
}

FlowState reverse_point(const DrivingPath& driver, cplx z, FlowOptions opts) {
  check_start_point(z, "reverse_point");
  FlowState st;
  st.dt = driver.dt;
  st.a = driver.a;
  st.z0 = z;
  st.is_reverse = true;
  const std::size_t n = driver.n_steps();
  st.times.reserve(n + 1);
  st.z.reserve(n + 1);
  st.log_abs_deriv.reserve(n + 1);

  cplx Z = z;
  double logd = 0.0;
  st.times.push_back(0.0);
  st.z.push_back(Z);
  st.log_abs_deriv.push_back(0.0);
  const double y0 = z.imag();
  const double log_y0 = std::log(y0);
  double prev_y = y0;
  double prev_log_psi = -log_y0;

  for (std::size_t k = 1; k <= n; ++k) {
    advance_frozen(Z, logd, -driver.a, driver.dt, opts.ode_tol, opts.swallow_y);
    const double dU = driver.values[k] - driver.values[k - 1];
    Z -= dU;
    st.times.push_back(driver.time_at(k));
    st.z.push_back(Z);
    st.log_abs_deriv.push_back(logd);

    const double y = Z.imag();
    // Y strictly increases; equality is tolerated only as rounding underflow.
    if (y < prev_y * (1.0 - 1e-12)) ++st.violations;
    const double log_psi = logd - std::log(y);
    if (log_psi > prev_log_psi + 1e-9) ++st.violations;
    // |h'| <= Y/y0 (the psi bound against the start value)
    if (logd > std::log(y) - log_y0 + 1e-9) ++st.violations;
    prev_y = y;
    prev_log_psi = log_psi;
  }
  return st;
}

Trace trace(const DrivingPath& driver, double y0, bool with_error_bounds, int quad_nodes) {
  if (y0 < 0.0) throw std::invalid_argument("trace: y0 must be nonnegative");
  const SlitChain chain = build_chain(driver);
  const std::size_t n = chain.maps.size();
  Trace tr;
  tr.dt = driver.dt;
  tr.y0 = y0;
  tr.times.resize(n + 1);
  tr.points.resize(n + 1);
  tr.error_bound.assign(n + 1, 0.0);
  tr.times[0] = 0.0;
  tr.points[0] = {0.0, 0.0};

  for (std::size_t k = 1; k <= n; ++k) {
    tr.times[k] = driver.time_at(k);
    cplx w;
    std::size_t upto;
    if (y0 == 0.0) {
      // Exact tip of the k-th slit, then pull back through the earlier maps.
      w = cplx(chain.maps[k - 1].du, chain.maps[k - 1].tip_height());
      upto = k - 1;
    } else {
      w = cplx(chain.driver_at(k), y0);
      upto = k;
    }
    tr.points[k] = evaluate_inverse(chain, w, upto).value;
    if (with_error_bounds && y0 > 0.0) {
      tr.error_bound[k] = tip_error_bound(chain, tr.times[k], y0, quad_nodes);
    }
  }
  return tr;
}

void write_trace_csv(const Trace& tr, const std::string& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("write_trace_csv: cannot open " + file);
  out << "t,re,im,vbound\n";
  char buf[96];
  for (std::size_t k = 0; k < tr.points.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g", tr.times[k],
                  tr.points[k].real(), tr.points[k].imag(), tr.error_bound[k]);
    out << buf << '\n';
  }
}

Trace read_trace_csv(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("read_trace_csv: cannot open " + file);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_trace_csv: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,re,im,vbound") {
    throw std::runtime_error("read_trace_csv: expected header t,re,im,vbound");
  }
  Trace tr;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double t, re, im, vb;
    if (std::sscanf(line.c_str(), "%lg,%lg,%lg,%lg", &t, &re, &im, &vb) != 4) {
      throw std::runtime_error("read_trace_csv: malformed row: " + line);
    }
    tr.times.push_back(t);
    tr.points.emplace_back(re, im);
    tr.error_bound.push_back(vb);
  }
  if (tr.times.size() >= 2) tr.dt = tr.times[1] - tr.times[0];
  return tr;
}

double tip_error_bound(const SlitChain& chain, double t, double y, int quad_nodes) {
  if (!(y > 0.0)) throw std::invalid_argument("tip_error_bound: y must be positive");
  const double k_real = t / chain.dt;
  const auto k = static_cast<std::size_t>(std::llround(k_real));
  if (k > chain.maps.size() ||
      std::abs(static_cast<double>(k) * chain.dt - t) > 1e-9 * std::max(1.0, t)) {
    throw std::invalid_argument("tip_error_bound: t not on the chain grid");
  }
  if (k == 0) return y;  // identity map
  const double u_t = chain.driver_at(k);

  // Graded quadrature r = y u^3 absorbs an integrable derivative blowup at
  // the tip; a hard cap flags actual divergence instead of returning junk.
  constexpr double kDivergenceCap = 1e10;
  std::vector<double> xs, ws;
  gauss_legendre(quad_nodes, 0.0, 1.0, xs, ws);
  double v = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double u = xs[i];
    const double r = y * u * u * u;
    if (r == 0.0) continue;
    const cplx w(u_t, r);
    const double fp = std::abs(evaluate_inverse(chain, w, k).deriv);
    if (fp > kDivergenceCap) return std::numeric_limits<double>::infinity();
    v += ws[i] * fp * 3.0 * y * u * u;
  }
  return v;
}

DistortionReport rect_distortion_check(const SlitChain& chain, double r, double alpha,
                                       int grid) {
  if (!(r > 1.0)) throw std::invalid_argument("rect_distortion_check: need r > 1");
  if (grid < 2) throw std::invalid_argument("rect_distortion_check: grid too small");
  DistortionReport rep;
  rep.r = r;
  rep.alpha = alpha;
  rep.bound_log = alpha * std::log(2.0 * r);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  const double ylog0 = std::log(1.0 / r);
  const double ylog1 = std::log(r);
  for (int ix = 0; ix < grid; ++ix) {
    const double x = -r + 2.0 * r * ix / (grid - 1);
    for (int iy = 0; iy < grid; ++iy) {
      const double y = std::exp(ylog0 + (ylog1 - ylog0) * iy / (grid - 1));
      const EvalResult e = evaluate_inverse(chain, cplx(x, y));
      rep.near_slit += e.near_slit;
      const double ld = std::log(std::abs(e.deriv));
      lo = std::min(lo, ld);
      hi = std::max(hi, ld);
    }
  }
  rep.max_log_ratio = hi - lo;
  rep.within = rep.max_log_ratio <= rep.bound_log;
  return rep;
}

}  // namespace slelab
