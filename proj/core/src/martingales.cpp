#include "slelab/martingales.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "slelab/parallel.hpp"
#include "slelab/params.hpp"
#include "slelab/rng.hpp"

namespace slelab {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Per-step schedule shared read-only by all paths of one ensemble.
struct StepTable {
  std::vector<double> c;      // 2 a dt per step
  std::vector<double> sqdt;   // sqrt(dt) per step
  std::vector<double> t;      // time after each step
  std::vector<std::size_t> marks;
};

StepTable make_table(const MarkedGrid& g, double a) {
  StepTable s;
  const std::size_t n = g.dts.size();
  s.c.resize(n);
  s.sqdt.resize(n);
  s.t.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    s.c[j] = 2.0 * a * g.dts[j];
    s.sqdt[j] = std::sqrt(g.dts[j]);
    s.t[j] = g.times[j + 1];
  }
  s.marks = g.marks;
  return s;
}

// Reverse flow, exact per frozen step: Z -> sqrt(Z^2 - c) - dU with the
// derivative modulus hp = |h'| updated multiplicatively (the closed form of
// d log h' = a/Z^2 dt over the step is log|Z_before| - log|Z_after|).
// Pathwise invariants checked on every step: Y increasing, Y^2 <= y0^2 + 2at,
// hp <= Y/y0, hp/Y nonincreasing. on_mark(ordinal, Z, hp).
template <typename OnMark>
int run_reverse_path(const StepTable& s, double a, cplx z0, NormalSampler& normal,
                     OnMark&& on_mark) {
  cplx Z = z0;
  double hp = 1.0;
  int violations = 0;
  const double y0 = z0.imag();
  const double y0sq = y0 * y0;
  double psi_num = 1.0, psi_den = y0;  // hp / Y as a ratio, no logs
  std::size_t next_mark = 0;
  const std::size_t n_marks = s.marks.size();
  while (next_mark < n_marks && s.marks[next_mark] == 0) {
    on_mark(next_mark, Z, hp);
    ++next_mark;
  }
  const std::size_t n = s.c.size();
  for (std::size_t j = 0; j < n; ++j) {
    const double y_prev = Z.imag();
    const cplx w = Z * Z - s.c[j];
    const cplx Zn = slit_sqrt(w, Z.real());
    const double nb = std::norm(Z);
    const double na = std::norm(Zn);
    hp *= std::sqrt(nb / na);
    const double y = Zn.imag();
    if (y < y_prev * (1.0 - 1e-12)) ++violations;
    if (y * y > y0sq + 2.0 * a * s.t[j] + 1e-9) ++violations;
    if (hp * y0 > y * (1.0 + 1e-9)) ++violations;
    if (hp * psi_den > psi_num * y * (1.0 + 1e-9)) ++violations;
    psi_num = hp;
    psi_den = y;
    Z = cplx(Zn.real() - s.sqdt[j] * normal(), y);
    while (next_mark < n_marks && s.marks[next_mark] == j + 1) {
      on_mark(next_mark, Z, hp);
      ++next_mark;
    }
  }
  return violations;
}

// Forward flow, exact per frozen step: Z -> sqrt((Z - dU)^2 + c) with
// Upsilon = Y/|g'| updated multiplicatively; Upsilon never increases.
// on_state is called after every step with (step_index_plus_1, Z, upsilon)
// and must return true to keep the path running.
template <typename OnState>
int run_forward_path(const StepTable& s, cplx z0, NormalSampler& normal,
                     OnState&& on_state) {
  cplx Z = z0;
  double ups = z0.imag();
  int violations = 0;
  const std::size_t n = s.c.size();
  for (std::size_t j = 0; j < n; ++j) {
    Z -= s.sqdt[j] * normal();
    const cplx Zn = slit_sqrt(Z * Z + s.c[j], Z.real());
    const double nb = std::norm(Z);
    const double na = std::norm(Zn);
    const double y_prev = Z.imag();
    const double y = Zn.imag();
    // |g'| gains |Z_before|/|Z_after|; Upsilon = Y/|g'|.
    const double ups_new = ups * (y / y_prev) * std::sqrt(na / nb);
    if (ups_new > ups * (1.0 + 1e-9)) ++violations;
    ups = ups_new;
    Z = Zn;
    if (!on_state(j + 1, Z, ups)) break;
  }
  return violations;
}

std::vector<EnsembleStats> per_mark_stats(const std::vector<std::vector<double>>& vals,
                                          double target, double dt) {
  std::vector<EnsembleStats> out;
  out.reserve(vals.size());
  for (const auto& v : vals) out.push_back(summarize(v, target, dt));
  return out;
}

int sum_violations(const std::vector<int>& v) {
  int s = 0;
  for (int x : v) s += x;
  return s;
}

double require_upper_half(cplx z, const char* who) {
  if (!(z.imag() > 0.0)) {
    throw std::invalid_argument(std::string(who) + ": Im z must be positive");
  }
  return z.imag();
}

}  // namespace

MarkedGrid make_marked_grid(const std::vector<double>& t_marks, double dt0,
                            double stage_after, double stage_factor) {
  if (!(dt0 > 0.0)) throw std::invalid_argument("make_marked_grid: dt0 must be positive");
  if (t_marks.empty()) throw std::invalid_argument("make_marked_grid: no sample times");
  for (std::size_t i = 0; i < t_marks.size(); ++i) {
    if (!(t_marks[i] >= 0.0)) {
      throw std::invalid_argument("make_marked_grid: negative sample time");
    }
    if (i > 0 && !(t_marks[i] > t_marks[i - 1])) {
      throw std::invalid_argument("make_marked_grid: sample times must increase");
    }
  }
  const double T = t_marks.back();
  MarkedGrid g;
  g.dt0 = dt0;
  g.times.push_back(0.0);
  const auto fill = [&g](double from, double to, double dt) {
    const auto n = static_cast<std::size_t>(std::llround((to - from) / dt));
    if (n == 0 || std::abs(from + static_cast<double>(n) * dt - to) >
                      1e-9 * std::max(1.0, to)) {
      throw std::invalid_argument("make_marked_grid: segment not on the step grid");
    }
    for (std::size_t i = 1; i <= n; ++i) {
      g.dts.push_back(dt);
      g.times.push_back(i == n ? to : from + static_cast<double>(i) * dt);
    }
  };
  if (T > 0.0) {
    const bool staged = stage_after > 0.0 && stage_after < T && stage_factor > 1.0;
    double t = staged ? stage_after : T;
    double dt = dt0;
    fill(0.0, t, dt);
    while (t < T * (1.0 - 1e-12)) {
      const double seg_end = std::min(T, t * stage_factor);
      fill(t, seg_end, dt);
      dt *= stage_factor;
      t = seg_end;
    }
  }
  g.marks.reserve(t_marks.size());
  for (double tm : t_marks) {
    const auto it = std::lower_bound(g.times.begin(), g.times.end(),
                                     tm - 1e-9 * std::max(1.0, tm));
    if (it == g.times.end() || std::abs(*it - tm) > 1e-9 * std::max(1.0, tm)) {
      throw std::invalid_argument("make_marked_grid: sample time off the grid");
    }
    g.marks.push_back(static_cast<std::size_t>(it - g.times.begin()));
  }
  return g;
}

double reverse_martingale_value(const FlowState& state, std::size_t k, double r) {
  const double lambda = martingale_exponents(state.a, r).lambda;
  const double y = state.z[k].imag();
  const double rr = state.z[k].real() / y;
  return std::exp(lambda * state.log_abs_deriv[k]) *
         std::pow(y, r - r * r / (4.0 * state.a)) *
         std::pow(rr * rr + 1.0, 0.5 * r);
}

ConservationReport martingale_conservation_test(double a, double r, cplx z,
                                                const std::vector<double>& t_list,
                                                std::size_t n_paths, double dt,
                                                std::uint64_t seed, int jobs) {
  const double y0 = require_upper_half(z, "martingale_conservation_test");
  const MarkedGrid grid = make_marked_grid(t_list, dt);
  const StepTable table = make_table(grid, a);
  const double lambda = martingale_exponents(a, r).lambda;
  const double ey = r - r * r / (4.0 * a);
  const double x0 = z.real() / y0;
  const double m0 = std::pow(y0, ey) * std::pow(x0 * x0 + 1.0, 0.5 * r);

  std::vector<std::vector<double>> vals(t_list.size(), std::vector<double>(n_paths));
  std::vector<int> viol(n_paths, 0);
  parallel_for(n_paths, jobs, [&](std::size_t i) {
    NormalSampler normal(path_seed(seed, i));
    viol[i] = run_reverse_path(table, a, z, normal,
                               [&](std::size_t m, cplx Z, double hp) {
                                 const double y = Z.imag();
                                 const double rr = Z.real() / y;
                                 vals[m][i] = std::pow(hp, lambda) * std::pow(y, ey) *
                                              std::pow(rr * rr + 1.0, 0.5 * r);
                               });
  });

  ConservationReport rep;
  rep.a = a;
  rep.r = r;
  rep.dt = dt;
  rep.z = z;
  rep.t = t_list;
  rep.stats = per_mark_stats(vals, m0, dt);
  rep.violations = sum_violations(viol);
  return rep;
}

DerivativeMomentReport derivative_moment_estimate(double a, double lambda,
                                                  const std::vector<double>& t_list,
                                                  std::size_t n_paths, double dt,
                                                  std::uint64_t seed, int jobs,
                                                  double stage_after,
                                                  double stage_factor) {
  const MarkedGrid grid = make_marked_grid(t_list, dt, stage_after, stage_factor);
  const StepTable table = make_table(grid, a);
  const cplx z0(0.0, 1.0);

  std::vector<std::vector<double>> vals(t_list.size(), std::vector<double>(n_paths));
  std::vector<int> viol(n_paths, 0);
  parallel_for(n_paths, jobs, [&](std::size_t i) {
    NormalSampler normal(path_seed(seed, i));
    viol[i] = run_reverse_path(table, a, z0, normal,
                               [&](std::size_t m, cplx, double hp) {
                                 vals[m][i] = std::pow(hp, lambda);
                               });
  });

  DerivativeMomentReport rep;
  rep.a = a;
  rep.lambda = lambda;
  rep.dt = dt;
  rep.violations = sum_violations(viol);
  std::vector<double> xs, ys;
  for (std::size_t m = 0; m < t_list.size(); ++m) {
    const EnsembleStats st = summarize(vals[m], 0.0, dt);
    rep.points.push_back({t_list[m], st.mean, st.std_error});
    if (t_list[m] > 0.0 && st.mean > 0.0) {
      xs.push_back(std::log(t_list[m]));
      ys.push_back(std::log(st.mean));
    }
  }
  if (xs.size() >= 2) rep.fit = fit_line(xs, ys);
  return rep;
}

SupermartingaleReport supermartingale_check(double a, double theta, double delta,
                                            cplx z, double t, std::size_t n_paths,
                                            double dt, std::uint64_t seed, int jobs) {
  if (!(a > 0.25)) {
    throw std::invalid_argument("supermartingale_check: needs a > 1/4");
  }
  const double rhs = std::max(delta, delta - 4.0 * a * delta + delta * delta);
  if (2.0 * a * theta < rhs) {
    throw std::invalid_argument(
        "supermartingale_check: need 2 a theta >= max{delta, delta - 4 a delta + "
        "delta^2}");
  }
  const double y0 = require_upper_half(z, "supermartingale_check");
  const double d = derive_exponents_from_a(a).d;
  const double ey = 2.0 - d - theta;
  const double ex = 0.5 * (1.0 + delta);
  const double x0 = z.real() / y0;
  const double n0 = std::pow(y0, ey) * std::pow(x0 * x0 + 1.0, ex);
  const MarkedGrid grid = make_marked_grid({t}, dt);
  const StepTable table = make_table(grid, a);

  std::vector<double> vals(n_paths);
  std::vector<int> viol(n_paths, 0);
  parallel_for(n_paths, jobs, [&](std::size_t i) {
    NormalSampler normal(path_seed(seed, i));
    viol[i] = run_reverse_path(table, a, z, normal,
                               [&](std::size_t, cplx Z, double hp) {
                                 const double y = Z.imag();
                                 const double rr = Z.real() / y;
                                 vals[i] = std::pow(hp, d) * std::pow(y, ey) *
                                           std::pow(rr * rr + 1.0, ex);
                               });
  });

  SupermartingaleReport rep;
  rep.a = a;
  rep.theta = theta;
  rep.delta = delta;
  rep.t = t;
  rep.dt = dt;
  rep.z = z;
  rep.stats = summarize(vals, n0, dt);
  rep.pass = rep.stats.mean <= n0 + 3.0 * rep.stats.std_error;
  rep.violations = sum_violations(viol);
  return rep;
}

double green_function_value(cplx z, double a) {
  const double y = require_upper_half(z, "green_function_value");
  const double d = derive_exponents_from_a(a).d;
  const double x = z.real() / y;
  return std::pow(y, d - 2.0) * std::pow(x * x + 1.0, 0.5 - 2.0 * a);
}

double cstar(double a) {
  const double e = 4.0 * a;
  const double integral =
      integrate_gl([e](double th) { return std::pow(std::sin(th), e); }, 0.0, kPi, 96);
  return 2.0 / integral;
}

GreenMartingaleReport green_martingale_test(double a, cplx z,
                                            const std::vector<double>& t_list,
                                            std::size_t n_paths, double dt,
                                            std::uint64_t seed, double upsilon_floor,
                                            int jobs) {
  require_upper_half(z, "green_martingale_test");
  const double d = derive_exponents_from_a(a).d;
  const double se = 4.0 * a - 1.0;
  const double g0 = green_function_value(z, a);
  const MarkedGrid grid = make_marked_grid(t_list, dt);
  const StepTable table = make_table(grid, a);
  constexpr double kSinClip = 1e-6;

  std::vector<std::vector<double>> vals(t_list.size(), std::vector<double>(n_paths));
  std::vector<int> viol(n_paths, 0);
  std::vector<int> clipped(n_paths, 0);
  std::vector<int> stopped(n_paths, 0);
  parallel_for(n_paths, jobs, [&](std::size_t i) {
    NormalSampler normal(path_seed(seed, i));
    const auto value_at = [&](cplx Z, double ups, int* clip) {
      double s = Z.imag() / std::abs(Z);
      if (s < std::sin(kSinClip)) {
        s = std::sin(kSinClip);
        ++*clip;
      }
      return std::pow(ups, d - 2.0) * std::pow(s, se);
    };
    std::size_t next_mark = 0;
    int clip = 0;
    double frozen = 0.0;
    bool active = true;
    while (next_mark < table.marks.size() && table.marks[next_mark] == 0) {
      vals[next_mark][i] = value_at(z, z.imag(), &clip);
      ++next_mark;
    }
    viol[i] = run_forward_path(
        table, z, normal, [&](std::size_t j, cplx Z, double ups) {
          if (active && (ups <= upsilon_floor || Z.imag() <= 1e-12)) {
            frozen = value_at(Z, ups, &clip);
            active = false;
            stopped[i] = 1;
          }
          while (next_mark < table.marks.size() && table.marks[next_mark] == j) {
            vals[next_mark][i] = active ? value_at(Z, ups, &clip) : frozen;
            ++next_mark;
          }
          return next_mark < table.marks.size();
        });
    clipped[i] = clip;
  });

  GreenMartingaleReport rep;
  rep.a = a;
  rep.dt = dt;
  rep.upsilon_floor = upsilon_floor;
  rep.z = z;
  rep.t = t_list;
  rep.stats = per_mark_stats(vals, g0, dt);
  rep.violations = sum_violations(viol);
  for (int c : clipped) rep.clip_count += static_cast<std::size_t>(c);
  for (int s : stopped) rep.stopped_paths += static_cast<std::size_t>(s);
  return rep;
}

OnePointGreenReport one_point_green_estimate(double a, const std::vector<cplx>& z_list,
                                             const std::vector<double>& eps_list,
                                             std::size_t n_paths, double dt,
                                             const std::vector<double>& t_max,
                                             std::uint64_t seed, int jobs,
                                             double stage_after, double stage_factor) {
  if (z_list.empty() || eps_list.empty()) {
    throw std::invalid_argument("one_point_green_estimate: empty z or eps list");
  }
  if (t_max.size() != z_list.size()) {
    throw std::invalid_argument("one_point_green_estimate: one t_max per z required");
  }
  double eps_min = eps_list.front();
  for (double e : eps_list) {
    if (!(e > 0.0)) throw std::invalid_argument("one_point_green_estimate: eps <= 0");
    eps_min = std::min(eps_min, e);
  }
  OnePointGreenReport rep;
  rep.a = a;
  rep.d = derive_exponents_from_a(a).d;
  rep.c_star = cstar(a);
  rep.dt = dt;
  rep.n_paths = n_paths;

  for (std::size_t zi = 0; zi < z_list.size(); ++zi) {
    const cplx z = z_list[zi];
    require_upper_half(z, "one_point_green_estimate");
    const MarkedGrid grid = make_marked_grid({t_max[zi]}, dt, stage_after, stage_factor);
    const StepTable table = make_table(grid, a);

    std::vector<double> final_ups(n_paths);
    std::vector<int> swallowed(n_paths, 0);
    parallel_for(n_paths, jobs, [&](std::size_t i) {
      NormalSampler normal(path_seed(seed, i ^ (zi << 32)));
      double last = z.imag();
      run_forward_path(table, z, normal, [&](std::size_t, cplx Z, double ups) {
        if (Z.imag() <= 1e-12) {
          swallowed[i] = 1;  // keep the pre-swallow value: Upsilon freezes there
          return false;
        }
        last = ups;
        return ups > eps_min;
      });
      final_ups[i] = last;
    });

    OnePointGreenRow row;
    row.z = z;
    row.g = green_function_value(z, a);
    row.t_max = t_max[zi];
    for (int s : swallowed) row.swallowed += static_cast<std::size_t>(s);
    for (double eps : eps_list) {
      std::size_t hits = 0;
      for (double u : final_ups) {
        if (u <= eps) ++hits;
      }
      GreenRatioCell cell;
      cell.eps = eps;
      cell.prob = static_cast<double>(hits) / static_cast<double>(n_paths);
      cell.prob_stderr =
          std::sqrt(cell.prob * (1.0 - cell.prob) / static_cast<double>(n_paths));
      const double denom = row.g * std::pow(eps, 2.0 - rep.d);
      cell.ratio = cell.prob / denom;
      cell.ratio_stderr = cell.prob_stderr / denom;
      row.cells.push_back(cell);
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

ThetaStationarityReport theta_stationarity(double a, std::size_t n_paths, double T,
                                           double dt, std::uint64_t seed, int jobs) {
  if (!(a > 0.0)) throw std::domain_error("theta_stationarity: a must be positive");
  if (!(dt > 0.0)) throw std::domain_error("theta_stationarity: dt must be positive");
  const double burn = 5.0 / a;
  const double spacing = 0.5;
  if (T <= burn + spacing) {
    throw std::invalid_argument("theta_stationarity: horizon below burn-in");
  }
  const auto n = static_cast<std::size_t>(std::llround(T / dt));
  const auto burn_steps = static_cast<std::size_t>(std::ceil(burn / dt));
  const auto stride = static_cast<std::size_t>(std::llround(spacing / dt));
  const std::size_t per_path = (n - burn_steps) / stride;

  // CDF of c sin^(4a) on [0, pi] tabulated once (composite Simpson).
  constexpr int kCells = 4096;
  std::vector<double> cdf_table(kCells + 1, 0.0);
  {
    const double h = kPi / kCells;
    const double e = 4.0 * a;
    double acc = 0.0;
    double f_prev = 0.0;  // sin(0)^(4a)
    for (int k = 1; k <= kCells; ++k) {
      const double mid = (static_cast<double>(k) - 0.5) * h;
      const double f_mid = std::pow(std::sin(mid), e);
      const double f_here = std::pow(std::sin(static_cast<double>(k) * h), e);
      acc += h / 6.0 * (f_prev + 4.0 * f_mid + f_here);
      cdf_table[k] = acc;
      f_prev = f_here;
    }
    for (auto& v : cdf_table) v /= acc;
  }
  const auto cdf = [&cdf_table](double th) {
    if (th <= 0.0) return 0.0;
    if (th >= kPi) return 1.0;
    const double pos = th / kPi * kCells;
    const int k = std::min(kCells - 1, static_cast<int>(pos));
    const double frac = pos - k;
    return cdf_table[k] + frac * (cdf_table[k + 1] - cdf_table[k]);
  };

  std::vector<std::vector<double>> samples(n_paths);
  std::vector<int> viol(n_paths, 0);
  parallel_for(n_paths, jobs, [&](std::size_t i) {
    NormalSampler normal(path_seed(seed, i));
    const double sqdt = std::sqrt(dt);
    double th = 0.5 * kPi;
    samples[i].reserve(per_path);
    for (std::size_t j = 1; j <= n; ++j) {
      th += 2.0 * a * dt / std::tan(th) + sqdt * normal();
      if (th < 1e-9 || th > kPi - 1e-9) {
        th = std::clamp(th, 1e-9, kPi - 1e-9);
        ++viol[i];
      }
      if (j > burn_steps && (j - burn_steps) % stride == 0 &&
          samples[i].size() < per_path) {
        samples[i].push_back(th);
      }
    }
  });

  ThetaStationarityReport rep;
  rep.a = a;
  rep.burn_in = burn;
  rep.sample_spacing = spacing;
  std::vector<double> pooled;
  pooled.reserve(n_paths * per_path);
  for (const auto& s : samples) pooled.insert(pooled.end(), s.begin(), s.end());
  rep.n_samples = pooled.size();
  rep.ks = ks_distance(std::move(pooled), cdf);
  rep.violations = sum_violations(viol);
  return rep;
}

UpperBoundTrendReport upper_bound_trend(double a, double r, double x,
                                        const std::vector<double>& s_grid,
                                        std::size_t n_paths, double dt,
                                        std::uint64_t seed, int jobs) {
  if (s_grid.empty()) throw std::invalid_argument("upper_bound_trend: empty s grid");
  const double lambda = martingale_exponents(a, r).lambda;
  std::vector<double> t_marks;
  for (double s : s_grid) t_marks.push_back(s * s);
  const MarkedGrid grid = make_marked_grid(t_marks, dt, 1.0, 4.0);
  const StepTable table = make_table(grid, a);
  const cplx z0(x, 1.0);

  std::vector<std::vector<double>> vals(s_grid.size(), std::vector<double>(n_paths));
  std::vector<int> viol(n_paths, 0);
  parallel_for(n_paths, jobs, [&](std::size_t i) {
    NormalSampler normal(path_seed(seed, i));
    viol[i] = run_reverse_path(table, a, z0, normal,
                               [&](std::size_t m, cplx Z, double hp) {
                                 const double y = Z.imag();
                                 const double rr = Z.real() / y;
                                 vals[m][i] = std::pow(hp, lambda) *
                                              std::pow(rr * rr + 1.0, 0.5 * r);
                               });
  });

  UpperBoundTrendReport rep;
  rep.a = a;
  rep.r = r;
  rep.lambda = lambda;
  rep.x = x;
  rep.dt = dt;
  rep.n_paths = n_paths;
  rep.s = s_grid;
  rep.admissible = a >= 0.25 ? (r >= 0.0 && r < 6.0 * a - 2.0 * std::sqrt(5.0 * a * a - a))
                             : (r >= 0.0 && r < 2.0 * a + 0.5);
  rep.violations = sum_violations(viol);
  const double decay = r - r * r / (4.0 * a);
  std::vector<double> xs, ys;
  for (std::size_t m = 0; m < s_grid.size(); ++m) {
    const EnsembleStats st = summarize(vals[m], 0.0, dt);
    const double w = std::pow(s_grid[m] + 1.0, decay);
    rep.normalized.push_back(st.mean * w);
    rep.std_error.push_back(st.std_error * w);
    xs.push_back(std::log(s_grid[m] + 1.0));
    ys.push_back(std::log(std::max(st.mean * w, 1e-300)));
  }
  if (xs.size() >= 2) rep.slope = fit_line(xs, ys).slope;
  return rep;
}

}  // namespace slelab
