// Acceptance ladder: twelve quantitative criteria covering the exact-solution
// oracle, forward/reverse consistency, the martingale identities, diffusion
// stationarity, moment scaling, the Green's function normalization, trace
// dimension, natural-parametrization stability, pathwise invariants, and
// byte-level determinism. One verdict line per criterion; exit 0 iff all pass.
//
// Monte Carlo sizes follow the documented targets (10^4-10^5 paths); the
// whole binary is sized to finish well inside half an hour on a small box.

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "slelab/dimension.hpp"
#include "slelab/diffusion.hpp"
#include "slelab/driver.hpp"
#include "slelab/loewner.hpp"
#include "slelab/martingales.hpp"
#include "slelab/natural_param.hpp"
#include "slelab/params.hpp"
#include "slelab/parallel.hpp"
#include "slelab/rng.hpp"
#include "slelab/stats.hpp"

using namespace slelab;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20260815;

int g_criteria_failed = 0;
long g_violations = 0;  // pooled pathwise-invariant breaches, criterion 11

void detail(const char* fmt, ...) {
  std::va_list args;
  va_start(args, fmt);
  std::printf("    ");
  std::vprintf(fmt, args);
  std::printf("\n");
  va_end(args);
  std::fflush(stdout);
}

void verdict(int idx, const char* label, bool (*criterion)()) {
  bool pass = false;
  try {
    pass = criterion();
  } catch (const std::exception& e) {
    detail("exception: %s", e.what());
  }
  std::printf("criterion %2d  %-58s %s\n", idx, label, pass ? "PASS" : "FAIL");
  std::fflush(stdout);
  if (!pass) ++g_criteria_failed;
}

// ---------------------------------------------------------------------------
// 1. Zero driver, a = 1/2: chain composition and trace against the closed
//    form g_t(z) = sqrt(z^2 + 2at), gamma(t) = i sqrt(2at). Tolerance 1e-9.
bool criterion_exact_solution() {
  const double a = 0.5;
  const DrivingPath drv = constant_driver(1.0, 1e-3, a);
  const SlitChain chain = build_chain(drv);

  double max_err = 0.0;
  const std::vector<cplx> zs = {{0.0, 2.0}, {1.0, 1.0}, {-1.5, 0.5}, {0.3, 3.0}};
  for (cplx z : zs) {
    cplx g = z;
    for (const SlitMap& m : chain.maps) g = m.forward(g);
    cplx want = std::sqrt(z * z + cplx(2.0 * a, 0.0));
    if (want.imag() < 0.0) want = -want;
    max_err = std::max(max_err, std::abs(g - want));
  }
  detail("chain composition vs sqrt(z^2+2at): max err %.3e", max_err);

  const Trace tr = trace(drv);
  double max_trace_err = 0.0;
  for (std::size_t k = 0; k < tr.points.size(); ++k) {
    const cplx want(0.0, std::sqrt(2.0 * a * tr.times[k]));
    max_trace_err = std::max(max_trace_err, std::abs(tr.points[k] - want));
  }
  detail("trace vs i sqrt(2at): max err %.3e over %zu points", max_trace_err,
         tr.points.size());
  return max_err <= 1e-9 && max_trace_err <= 1e-9;
}

// ---------------------------------------------------------------------------
// 2. Slit-chain inverse f_T against reverse-flow integration at
//    w = U_T + 0.1i, 20 Brownian drivers, T = 1, dt = 1e-3, within 1e-4.
bool criterion_reverse_forward() {
  const double a = 0.75;
  double max_err = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const DrivingPath drv = sample_brownian_driver(1.0, 1e-3, a, path_seed(kSeed + 2, s));
    const SlitChain chain = build_chain(drv);
    const cplx lhs = evaluate_inverse(chain, cplx(drv.values.back(), 0.1)).value;
    const FlowState rev = reverse_point(reverse_driver(drv, 1.0).full, cplx(0.0, 0.1));
    g_violations += rev.violations;
    max_err = std::max(max_err, std::abs(lhs - rev.z.back()));
  }
  detail("max |f_T(U_T + 0.1i) - reverse flow| over 20 drivers: %.3e", max_err);
  return max_err <= 1e-4;
}

// ---------------------------------------------------------------------------
// 3. Reverse-martingale conservation, r = 1, z = i, t in {0.5, 1, 2},
//    10^4 paths: |zscore| <= 3 at dt = 1e-3 and dt = 5e-4, and the absolute
//    bias does not grow when dt is halved (up to 3 stderr of noise).
bool criterion_conservation() {
  bool ok = true;
  int kappa_idx = 0;
  for (double kappa : {2.0, 8.0 / 3.0, 4.0, 6.0}) {
    const double a = 2.0 / kappa;
    const std::vector<double> ts = {0.5, 1.0, 2.0};
    const ConservationReport full = martingale_conservation_test(
        a, 1.0, cplx(0.0, 1.0), ts, 10000, 1e-3, kSeed + 30 + kappa_idx, 0);
    const ConservationReport half = martingale_conservation_test(
        a, 1.0, cplx(0.0, 1.0), ts, 10000, 5e-4, kSeed + 40 + kappa_idx, 0);
    g_violations += full.violations + half.violations;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double z_full = std::abs(full.stats[i].zscore);
      const double z_half = std::abs(half.stats[i].zscore);
      const double bias_full = std::abs(full.stats[i].mean - 1.0);
      const double bias_half = std::abs(half.stats[i].mean - 1.0);
      const bool shrink = bias_half <= std::max(bias_full, 3.0 * half.stats[i].std_error);
      if (z_full > 3.0 || z_half > 3.0 || !shrink) ok = false;
      detail("kappa %.3f t %.1f: |z| %.2f -> %.2f, bias %.1e -> %.1e%s", kappa,
             ts[i], z_full, z_half, bias_full, bias_half, shrink ? "" : "  GREW");
    }
    ++kappa_idx;
  }
  return ok;
}

// ---------------------------------------------------------------------------
// 4. Stationarity of the weighted K-diffusion: KS < 0.02 with >= 1e5
//    post-burn-in samples and L-drift within 3 stderr of (1-2q)/(1+2q).
bool criterion_stationarity() {
  bool ok = true;
  int qi = 0;
  for (double q : {0.5, 1.0, 2.0}) {
    const StationarityReport rep =
        diffusion_stationarity(q, 520, 121.0, 1e-3, kSeed + 50 + qi, 0);
    g_violations += rep.violations;
    const bool here = rep.ks < 0.02 && rep.n_samples >= 100000 &&
                      std::abs(rep.l_drift.zscore) <= 3.0;
    detail("q %.1f: ks %.4f, samples %zu, drift z %.2f, mean %.4f vs mu %.4f",
           q, rep.ks, rep.n_samples, rep.l_drift.zscore, rep.l_drift.mean,
           rep.l_drift.target);
    if (!here) ok = false;
    ++qi;
  }
  return ok;
}

// ---------------------------------------------------------------------------
// 5. Tilted exponential moment E[e^{pL} (K^2+1)^{delta/2}] at q = 1,
//    delta = 0.5, t = 1, x0 = 0, 1e5 paths: |zscore| <= 3.
bool criterion_exp_moment() {
  const EnsembleStats st = exp_moment_check(1.0, 0.5, 1.0, 100000, 1e-3, kSeed + 60);
  detail("mean %.5f vs target %.5f, stderr %.1e, z %.2f", st.mean, st.target,
         st.std_error, st.zscore);
  return std::abs(st.zscore) <= 3.0;
}

// ---------------------------------------------------------------------------
// 6. N_t martingale under the original dynamics: mean within 3 stderr of
//    (x0^2+1)^{r/2} for (q, r) = (1, 1) and (0.5, 1.5) at t = 1.
bool criterion_nt_martingale() {
  bool ok = true;
  int i = 0;
  for (auto [q, r] : {std::pair{1.0, 1.0}, std::pair{0.5, 1.5}}) {
    const EnsembleStats st = nt_martingale_check(q, r, 1.0, 100000, 1e-3, kSeed + 70 + i);
    detail("q %.1f r %.1f: mean %.5f vs %.5f, z %.2f", q, r, st.mean, st.target,
           st.zscore);
    if (std::abs(st.zscore) > 3.0) ok = false;
    ++i;
  }
  return ok;
}

// ---------------------------------------------------------------------------
// 7. Reverse-derivative moment scaling at a = 3/4 (d = 4/3), lambda = d:
//    log-log slope over t in {1, ..., 64} within 0.05 of -1/3.
bool criterion_moment_scaling() {
  const double a = 0.75;
  const double lambda = derive_exponents(8.0 / 3.0).d;
  const DerivativeMomentReport rep = derivative_moment_estimate(
      a, lambda, {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0}, 10000, 1e-3, kSeed + 80, 0);
  g_violations += rep.violations;
  detail("slope %.4f (stderr %.4f, r2 %.5f) vs -1/3", rep.fit.slope,
         rep.fit.std_error, rep.fit.r2);
  return std::abs(rep.fit.slope + 1.0 / 3.0) <= 0.05;
}

// ---------------------------------------------------------------------------
// 8. Green's function normalization: P{Upsilon <= eps} / (G(z) eps^{2-d})
//    agrees across z in {i, 1+i, 2i} within 15% for kappa in {8/3, 4}, and
//    for kappa = 4 the common value is within 20% of c* = 4/pi.
bool criterion_green_ratio() {
  bool ok = true;
  int ki = 0;
  for (double kappa : {8.0 / 3.0, 4.0}) {
    const double a = 2.0 / kappa;
    const std::vector<cplx> zs = {{0.0, 1.0}, {1.0, 1.0}, {0.0, 2.0}};
    const OnePointGreenReport rep = one_point_green_estimate(
        a, zs, {0.05}, 100000, 1e-3, {256.0, 256.0, 256.0}, kSeed + 90 + ki, 0);
    double lo = 1e300, hi = 0.0, sum = 0.0;
    for (const OnePointGreenRow& row : rep.rows) {
      const GreenRatioCell& c = row.cells[0];
      lo = std::min(lo, c.ratio);
      hi = std::max(hi, c.ratio);
      sum += c.ratio;
      detail("kappa %.3f z (%.0f,%.0f): ratio %.4f +- %.4f, swallowed %zu",
             kappa, row.z.real(), row.z.imag(), c.ratio, c.ratio_stderr,
             row.swallowed);
    }
    const double spread = (hi - lo) / hi;
    const double mean = sum / static_cast<double>(rep.rows.size());
    detail("kappa %.3f: spread %.3f, mean ratio %.4f, c* %.4f", kappa, spread,
           mean, rep.c_star);
    if (spread > 0.15) ok = false;
    if (kappa == 4.0 && std::abs(mean - rep.c_star) > 0.2 * rep.c_star) ok = false;
    ++ki;
  }
  return ok;
}

// ---------------------------------------------------------------------------
// 9. Box-counting dimension of simulated traces: ensembles of 20 traces with
//    2e4 points per kappa in {8/3, 6}; mean slope within 0.15 of 1 + kappa/8.
bool criterion_dimension() {
  bool ok = true;
  int ki = 0;
  std::vector<double> p_grid;
  for (double p = 0.75; p <= 3.0001; p += 0.05) p_grid.push_back(p);
  for (double kappa : {8.0 / 3.0, 6.0}) {
    const double a = 2.0 / kappa;
    const std::size_t n_traces = 20;
    std::vector<double> slopes(n_traces, 0.0), vars(n_traces, 0.0);
    parallel_for(n_traces, 0, [&](std::size_t i) {
      const DrivingPath drv =
          sample_brownian_driver(1.0, 5e-5, a, path_seed(kSeed + 100 + ki, i));
      const Trace tr = trace(drv);
      double diam = 0.0;
      for (std::size_t k = 1; k < tr.points.size(); ++k) {
        diam = std::max(diam, std::abs(tr.points[k] - tr.points[0]));
      }
      // 1.5 decades ending a quarter of the diameter from the top: larger
      // boxes saturate toward covering the hull, smaller ones fall below
      // what 2e4 sample points resolve on a rough trace.
      const double s_max = diam / 4.0;
      const double s_min = s_max * std::pow(10.0, -1.5) / 1.01;
      std::vector<double> scales;
      for (int k = 0; k < 5; ++k) {
        scales.push_back(s_max * std::pow(s_min / s_max, k / 4.0));
      }
      slopes[i] = box_count_dimension(tr, scales).slope;
      vars[i] = variation_dimension(tr, p_grid);
    });
    const EnsembleStats st =
        summarize(slopes, 1.0 + kappa / 8.0, 0.0);
    const EnsembleStats vr = summarize(vars, 1.0 + kappa / 8.0, 0.0);
    detail("kappa %.3f: mean box slope %.4f +- %.4f vs %.4f "
           "(variation estimate %.4f +- %.4f)",
           kappa, st.mean, st.std_error, st.target, vr.mean, vr.std_error);
    if (std::abs(st.mean - st.target) > 0.15) ok = false;
    ++ki;
  }
  // The box-count slope reaches 1 + kappa/8 only in the vanishing-box limit.
  // At 2e4 points per trace the kappa = 6 slope is resolution-limited near
  // 1.5: the sample cannot honestly resolve boxes much below diam/128, so no
  // admissible 1.5-decade window attains the asymptote. The variation
  // estimate above, which weights large increments instead of dropping them,
  // does reach the target at this resolution.
  detail("box dimension is an asymptotic quantity; at this trace length the "
         "kappa 6.000 slope sits below its limit by construction");
  return ok;
}

// ---------------------------------------------------------------------------
// 10. Natural-parametrization stability: derivative-sum tau_n(1) ensemble
//     means within a factor 1.5 across n in {64, 128, 256, 512} at
//     kappa = 8/3; other candidates reported as ratios (no assertion).
bool criterion_natural_param() {
  const double kappa = 8.0 / 3.0;
  const double a = 2.0 / kappa;
  const double d = derive_exponents(kappa).d;
  const std::vector<std::size_t> ns = {64, 128, 256, 512};
  const std::size_t n_paths = 200;
  const double dt = 1.0 / 4096.0;

  std::vector<std::vector<double>> taus(ns.size(),
                                        std::vector<double>(n_paths, 0.0));
  parallel_for(n_paths, 0, [&](std::size_t i) {
    const DrivingPath drv =
        sample_brownian_driver(1.0, dt, a, path_seed(kSeed + 110, i));
    for (std::size_t j = 0; j < ns.size(); ++j) {
      taus[j][i] = tau_derivative_sum(drv, ns[j]).taus.back();
    }
  });

  double lo = 1e300, hi = 0.0;
  for (std::size_t j = 0; j < ns.size(); ++j) {
    const EnsembleStats st = summarize(taus[j], 1.0, dt);
    lo = std::min(lo, st.mean);
    hi = std::max(hi, st.mean);
    detail("n %4zu: mean tau_n(1) %.4f +- %.4f", ns[j], st.mean, st.std_error);
  }
  detail("stability max/min %.3f (allowed 1.5)", hi / lo);

  // Candidate comparison on one realization, constant-factor report only.
  const DrivingPath drv0 = sample_brownian_driver(1.0, dt, a, path_seed(kSeed + 110, 0));
  const Trace tr = trace(drv0);
  const std::size_t nc = 64;
  const double eps = 1.0 / static_cast<double>(nc);
  BBox bbox{tr.points[0].real(), tr.points[0].real(), 0.0, tr.points[0].imag()};
  for (cplx pt : tr.points) {
    bbox.xlo = std::min(bbox.xlo, pt.real());
    bbox.xhi = std::max(bbox.xhi, pt.real());
    bbox.yhi = std::max(bbox.yhi, pt.imag());
  }
  bbox.xlo -= 2.0 * eps;
  bbox.xhi += 2.0 * eps;
  bbox.ylo -= 2.0 * eps;
  bbox.yhi += 2.0 * eps;
  const double tau_ds = tau_derivative_sum(drv0, nc).taus.back();
  const double tau_dv = tau_d_variation(tr, nc, d).taus.back();
  const double tau_mk = tau_minkowski(tr, eps, d, bbox, eps / 4.0);
  const double tau_cf = tau_conformal_minkowski(drv0, bbox, eps / 4.0, eps, 1.0, d, 0);
  detail("one path, n %zu: derivative-sum %.4f, d-variation %.4f (x%.2f), "
         "minkowski %.4f (x%.2f), conformal %.4f (x%.2f)",
         nc, tau_ds, tau_dv, tau_dv / tau_ds, tau_mk, tau_mk / tau_ds, tau_cf,
         tau_cf / tau_ds);

  return hi / lo <= 1.5;
}

// ---------------------------------------------------------------------------
// 11. Pathwise invariants: zero violations pooled over every ensemble above,
//     plus direct checks of hcap additivity, flow monotonicity, the
//     occupation bound |L_t| <= t, and the rectangle distortion bound.
bool criterion_invariants() {
  const double a = 0.75;
  const DrivingPath drv = sample_brownian_driver(1.0, 1e-3, a, kSeed + 120);
  const SlitChain chain = build_chain(drv);
  const double hcap_err = std::abs(chain.hcap() - a * 1.0);
  detail("hcap additivity error %.2e (allowed 1e-12)", hcap_err);

  const FlowState fwd = forward_point(drv, cplx(0.0, 2.0));
  const FlowState rev = reverse_point(reverse_driver(drv, 1.0).full, cplx(0.0, 0.25));
  detail("forward/reverse flow violations %d/%d", fwd.violations, rev.violations);

  const KPath kw = simulate_K(1.0, 1.0, 4.0, 1e-3, KRegime::weighted, 0.0, kSeed + 121);
  const KPath ko = simulate_K(1.0, 1.0, 4.0, 1e-3, KRegime::original, 0.0, kSeed + 122);
  detail("K-path violations weighted/original %d/%d", kw.violations, ko.violations);

  const DistortionReport dist = rect_distortion_check(chain, 2.0, 2.0);
  detail("distortion max log ratio %.3f vs bound %.3f (within: %s)",
         dist.max_log_ratio, dist.bound_log, dist.within ? "yes" : "no");

  detail("pooled ensemble violations %ld", g_violations);
  return hcap_err <= 1e-12 && fwd.violations == 0 && rev.violations == 0 &&
         kw.violations == 0 && ko.violations == 0 && dist.within &&
         g_violations == 0;
}

// ---------------------------------------------------------------------------
// 12. Determinism through the CLI: identical seeds give byte-identical CSVs,
//     independent of --jobs; JSON reports agree up to the timestamp.
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
}

bool criterion_determinism() {
  const std::string cli = std::string("\"") + SLELAB_CLI_PATH + "\"";
  const fs::path base = fs::temp_directory_path() / "slelab_acceptance_cli";
  fs::remove_all(base);
  for (const char* sub : {"ta", "tb", "j1", "j3"}) fs::create_directories(base / sub);

  bool ok = true;

  const std::string trace_args =
      " simulate-trace --kappa 2.6667 --T 0.2 --dt 0.001 --seed 77 ";
  ok &= run(cli + trace_args + "--out " + (base / "ta/trace.csv").string() +
            " --driver-out " + (base / "ta/driver.csv").string()) == 0;
  ok &= run(cli + trace_args + "--out " + (base / "tb/trace.csv").string() +
            " --driver-out " + (base / "tb/driver.csv").string()) == 0;
  const bool trace_same = slurp(base / "ta/trace.csv") == slurp(base / "tb/trace.csv") &&
                          !slurp(base / "ta/trace.csv").empty();
  const bool driver_same = slurp(base / "ta/driver.csv") == slurp(base / "tb/driver.csv");
  detail("simulate-trace byte-identical rerun: trace %s, driver %s",
         trace_same ? "yes" : "NO", driver_same ? "yes" : "NO");
  ok &= trace_same && driver_same;

  const std::string mart_args =
      " check-martingale --kappa 4 --t 0.25 0.5 --paths 2000 --dt 0.001 --seed 9 ";
  ok &= run(cli + mart_args + "--jobs 1 --out " + (base / "j1/conservation.json").string()) == 0;
  ok &= run(cli + mart_args + "--jobs 3 --out " + (base / "j3/conservation.json").string()) == 0;
  ok &= run(cli + " report-bundle --dir " + (base / "j1").string()) == 0;
  ok &= run(cli + " report-bundle --dir " + (base / "j3").string()) == 0;

  const std::string t1 = slurp(base / "j1/conservation_table.csv");
  const std::string t3 = slurp(base / "j3/conservation_table.csv");
  const bool tables_same = !t1.empty() && t1 == t3;
  detail("jobs 1 vs 3 extracted tables byte-identical: %s", tables_same ? "yes" : "NO");
  ok &= tables_same;

  nlohmann::json r1 = nlohmann::json::parse(slurp(base / "j1/conservation.json"));
  nlohmann::json r3 = nlohmann::json::parse(slurp(base / "j3/conservation.json"));
  // The report echoes its invocation, so the knobs that differ on purpose
  // (worker count, output path) and the timestamp are masked; every
  // statistical field must match exactly.
  for (auto* r : {&r1, &r3}) {
    r->erase("timestamp");
    if (r->contains("config")) {
      (*r)["config"].erase("jobs");
      (*r)["config"].erase("out");
    }
  }
  const bool reports_same = r1 == r3;
  detail("reports identical modulo timestamp and invocation echo: %s",
         reports_same ? "yes" : "NO");
  ok &= reports_same;

  fs::remove_all(base);
  return ok;
}

}  // namespace

int main() {
  std::printf("acceptance suite: 12 criteria\n");
  std::fflush(stdout);

  verdict(1, "exact chain and trace against the closed-form solution",
          criterion_exact_solution);
  verdict(2, "slit-chain inverse matches reverse-flow integration",
          criterion_reverse_forward);
  verdict(3, "reverse martingale conserved, bias shrinks with dt",
          criterion_conservation);
  verdict(4, "weighted diffusion stationarity and occupation drift",
          criterion_stationarity);
  verdict(5, "tilted exponential-moment identity", criterion_exp_moment);
  verdict(6, "N_t martingale conservation", criterion_nt_martingale);
  verdict(7, "reverse-derivative moment scaling slope", criterion_moment_scaling);
  verdict(8, "Green's function ratio across points and kappa",
          criterion_green_ratio);
  verdict(9, "box-counting dimension of simulated traces", criterion_dimension);
  verdict(10, "natural-parametrization candidate stability",
          criterion_natural_param);
  verdict(11, "pathwise invariants, zero violations", criterion_invariants);
  verdict(12, "seeded determinism across jobs and reruns",
          criterion_determinism);

  if (g_criteria_failed == 0) {
    std::printf("all 12 criteria pass\n");
    return 0;
  }
  std::printf("%d criteria FAILED\n", g_criteria_failed);
  return 1;
}
