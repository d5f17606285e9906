// Command-line surface over the library: simulation, statistical checks, and
// report bundling. Every check writes an ordered-JSON report embedding the
// resolved configuration; exit codes are 0 (pass), 1 (statistical failure),
// 2 (usage or configuration error).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "slelab/diffusion.hpp"
#include "slelab/dimension.hpp"
#include "slelab/driver.hpp"
#include "slelab/loewner.hpp"
#include "slelab/martingales.hpp"
#include "slelab/natural_param.hpp"
#include "slelab/parallel.hpp"
#include "slelab/params.hpp"
#include "slelab/report.hpp"
#include "slelab/rng.hpp"
#include "slelab/stats.hpp"

namespace {

using slelab::cplx;
using slelab::ReportDoc;

// The one message format the exit-2 contract pins down.
int missing_key(const char* key) {
  std::fprintf(stderr, "missing required key: %s\n", key);
  return 2;
}

void attach_config(CLI::App* cmd) {
  // Parse-time handling lives in expand_config(); this option only documents
  // the flag and keeps it out of the unknown-argument path.
  cmd->add_option("--config", "key=value file; command-line flags win")
      ->type_name("FILE");
}

std::string trim(const std::string& s) {
  const std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Expands `--config FILE` into equivalent command-line tokens spliced in
// right after the subcommand name. Explicit flags stay later in the stream
// and each config key already given on the command line is dropped, so flags
// win and no option sees values from two sources. Unknown config keys then
// fail parsing exactly like unknown flags, naming the key.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> tokens(argv + 1, argv + argc);
  std::size_t sub_idx = tokens.size();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!tokens[i].empty() && tokens[i][0] != '-') {
      sub_idx = i;
      break;
    }
  }
  if (sub_idx == tokens.size()) return tokens;

  std::string config_file;
  for (std::size_t i = sub_idx + 1; i < tokens.size();) {
    if (tokens[i] == "--config" && i + 1 < tokens.size()) {
      config_file = tokens[i + 1];
      tokens.erase(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                   tokens.begin() + static_cast<std::ptrdiff_t>(i) + 2);
    } else if (tokens[i].rfind("--config=", 0) == 0) {
      config_file = tokens[i].substr(9);
      tokens.erase(tokens.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
    }
  }
  if (config_file.empty()) return tokens;

  std::ifstream in(config_file);
  if (!in) throw std::runtime_error("cannot open config file: " + config_file);

  std::set<std::string> given;
  for (std::size_t i = sub_idx + 1; i < tokens.size(); ++i) {
    if (tokens[i].rfind("--", 0) != 0) continue;
    const std::size_t eq = tokens[i].find('=');
    given.insert(eq == std::string::npos ? tokens[i].substr(2)
                                         : tokens[i].substr(2, eq - 2));
  }

  std::vector<std::string> injected;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    std::string key = trim(eq == std::string::npos ? line : line.substr(0, eq));
    while (!key.empty() && key[0] == '-') key.erase(key.begin());
    if (key.empty() || given.count(key)) continue;
    const std::string value = eq == std::string::npos ? "" : trim(line.substr(eq + 1));
    if (value.empty()) {
      injected.push_back("--" + key);
    } else if (value.find_first_of(" \t") == std::string::npos) {
      injected.push_back("--" + key + "=" + value);
    } else {
      injected.push_back("--" + key);
      std::istringstream parts(value);
      std::string piece;
      while (parts >> piece) injected.push_back(piece);
    }
  }
  tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(sub_idx) + 1,
                injected.begin(), injected.end());
  return tokens;
}

// Resolved option values, for the reproducibility block of each report.
ReportDoc config_block(const CLI::App* cmd) {
  ReportDoc cfg;
  for (const CLI::Option* opt : cmd->get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "config") continue;
    if (opt->count() > 0) {
      std::string joined;
      for (const auto& r : opt->results()) {
        if (!joined.empty()) joined += ",";
        joined += r;
      }
      cfg[name] = joined;
    } else if (!opt->get_default_str().empty()) {
      cfg[name] = opt->get_default_str();
    }
  }
  return cfg;
}

ReportDoc stats_block(const slelab::EnsembleStats& st) {
  ReportDoc doc;
  doc["n_paths"] = st.n_paths;
  doc["estimate"] = st.mean;
  doc["stderr"] = st.std_error;
  doc["target"] = st.target;
  doc["zscore"] = st.zscore;
  doc["dt"] = st.dt;
  return doc;
}

int finish_report(ReportDoc& doc, const std::string& out, bool has_verdict,
                  bool pass) {
  if (has_verdict) doc["pass"] = pass;
  slelab::write_report(doc, out);
  std::printf("%s %s -> %s\n",
              has_verdict ? (pass ? "PASS" : "FAIL") : "REPORT",
              doc["test"].get<std::string>().c_str(), out.c_str());
  return has_verdict && !pass ? 1 : 0;
}

// ----------------------------------------------------------------- simulate

struct SimulateOpts {
  double kappa = 0.0, T = 1.0, dt = 1e-3, y0 = 0.0;
  std::uint64_t seed = 1;
  std::string out = "trace.csv", driver_out, chain_out;
  bool error_bounds = false;
};

void add_simulate_trace(CLI::App& app, int& rc) {
  auto opts = std::make_shared<SimulateOpts>();
  CLI::App* cmd = app.add_subcommand("simulate-trace",
                                     "sample a Brownian driver and emit the trace");
  attach_config(cmd);
  auto* kappa = cmd->add_option("--kappa", opts->kappa, "diffusivity, must be > 0");
  cmd->add_option("--T", opts->T, "horizon")->capture_default_str();
  cmd->add_option("--dt", opts->dt, "driver step")->capture_default_str();
  cmd->add_option("--y0", opts->y0, "evaluation height; 0 composes the exact tip")
      ->capture_default_str();
  cmd->add_option("--seed", opts->seed, "RNG seed")->capture_default_str();
  cmd->add_option("--out", opts->out, "trace CSV path")->capture_default_str();
  cmd->add_option("--driver-out", opts->driver_out, "also write the driver CSV");
  cmd->add_option("--chain-out", opts->chain_out, "also write the slit chain binary");
  cmd->add_flag("--error-bounds", opts->error_bounds,
                "carry per-point tip error bounds (quadratic cost)");
  cmd->callback([opts, kappa, &rc]() {
    if (kappa->count() == 0) {
      rc = missing_key("kappa");
      return;
    }
    const slelab::SleParams p = slelab::derive_exponents(opts->kappa);
    const slelab::DrivingPath driver =
        slelab::sample_brownian_driver(opts->T, opts->dt, p.a, opts->seed);
    const slelab::Trace tr = slelab::trace(driver, opts->y0, opts->error_bounds);
    slelab::write_trace_csv(tr, opts->out);
    if (!opts->driver_out.empty()) slelab::write_driver_csv(driver, opts->driver_out);
    if (!opts->chain_out.empty()) {
      slelab::write_chain_binary(slelab::build_chain(driver), opts->chain_out);
    }
    std::printf("trace: %zu points -> %s\n", tr.points.size(), opts->out.c_str());
    rc = 0;
  });
}

// ----------------------------------------------------------- check-martingale

struct MartingaleOpts {
  double kappa = 0.0, r = 1.0, x = 0.0, y = 1.0, dt = 1e-3;
  double theta = 0.0, delta = 0.0, t_single = 1.0;
  std::vector<double> t_list{0.5, 1.0, 2.0};
  std::vector<double> s_grid{1, 2, 4, 8};
  std::size_t paths = 10000;
  std::uint64_t seed = 1;
  int jobs = 0;
  double zmax = 3.0;
  std::string check = "conservation";
  std::string out = "check_martingale.json";
};

void add_check_martingale(CLI::App& app, int& rc) {
  auto o = std::make_shared<MartingaleOpts>();
  CLI::App* cmd = app.add_subcommand(
      "check-martingale", "conservation and bound checks for the reverse flow");
  attach_config(cmd);
  auto* kappa = cmd->add_option("--kappa", o->kappa, "diffusivity");
  cmd->add_option("--r", o->r, "martingale exponent parameter")->capture_default_str();
  cmd->add_option("--x", o->x, "Re z")->capture_default_str();
  cmd->add_option("--y", o->y, "Im z")->capture_default_str();
  cmd->add_option("--t", o->t_list, "sample times")->capture_default_str();
  cmd->add_option("--paths", o->paths, "ensemble size")->capture_default_str();
  cmd->add_option("--dt", o->dt, "time step")->capture_default_str();
  cmd->add_option("--seed", o->seed, "RNG seed")->capture_default_str();
  cmd->add_option("--jobs", o->jobs, "worker threads; 0 = SLE_LAB_JOBS or cores")
      ->capture_default_str();
  cmd->add_option("--zmax", o->zmax, "|zscore| acceptance bound")
      ->capture_default_str();
  cmd->add_option("--check", o->check,
                  "conservation | supermartingale | upper-bound | theta")
      ->capture_default_str();
  cmd->add_option("--theta", o->theta, "supermartingale weight exponent")
      ->capture_default_str();
  cmd->add_option("--delta", o->delta, "supermartingale secant exponent")
      ->capture_default_str();
  cmd->add_option("--t-single", o->t_single, "horizon for single-time checks")
      ->capture_default_str();
  cmd->add_option("--s", o->s_grid, "spatial scales for the upper-bound trend")
      ->capture_default_str();
  cmd->add_option("--out", o->out, "report path")->capture_default_str();
  cmd->callback([o, kappa, cmd, &rc]() {
    if (kappa->count() == 0) {
      rc = missing_key("kappa");
      return;
    }
    const slelab::SleParams p = slelab::derive_exponents(o->kappa);
    const cplx z(o->x, o->y);
    ReportDoc doc = slelab::report_skeleton("check_martingale_" + o->check);
    doc["params"] = {{"kappa", o->kappa}, {"a", p.a}, {"d", p.d}};
    doc["config"] = config_block(cmd);

    if (o->check == "conservation") {
      const auto rep = slelab::martingale_conservation_test(
          p.a, o->r, z, o->t_list, o->paths, o->dt, o->seed, o->jobs);
      bool pass = rep.violations == 0;
      ReportDoc results = ReportDoc::array();
      std::vector<std::vector<double>> rows;
      for (std::size_t i = 0; i < rep.t.size(); ++i) {
        ReportDoc rdoc = stats_block(rep.stats[i]);
        rdoc["t"] = rep.t[i];
        results.push_back(rdoc);
        pass = pass && std::abs(rep.stats[i].zscore) <= o->zmax;
        rows.push_back({rep.t[i], rep.stats[i].mean, rep.stats[i].std_error,
                        rep.stats[i].zscore});
      }
      doc["results"] = results;
      doc["violations"] = rep.violations;
      doc["table"] = slelab::make_table({"t", "mean", "stderr", "zscore"}, rows);
      rc = finish_report(doc, o->out, true, pass);
    } else if (o->check == "supermartingale") {
      const auto rep = slelab::supermartingale_check(
          p.a, o->theta, o->delta, z, o->t_single, o->paths, o->dt, o->seed, o->jobs);
      doc["results"] = stats_block(rep.stats);
      doc["violations"] = rep.violations;
      rc = finish_report(doc, o->out, true, rep.pass && rep.violations == 0);
    } else if (o->check == "upper-bound") {
      const auto rep = slelab::upper_bound_trend(p.a, o->r, o->x, o->s_grid, o->paths,
                                                 o->dt, o->seed, o->jobs);
      std::vector<std::vector<double>> rows;
      for (std::size_t i = 0; i < rep.s.size(); ++i) {
        rows.push_back({rep.s[i], rep.normalized[i], rep.std_error[i]});
      }
      doc["results"] = {{"slope", rep.slope},
                        {"lambda", rep.lambda},
                        {"admissible", rep.admissible}};
      doc["violations"] = rep.violations;
      doc["table"] = slelab::make_table({"s", "normalized", "stderr"}, rows);
      rc = finish_report(doc, o->out, false, false);
    } else if (o->check == "theta") {
      const auto rep = slelab::theta_stationarity(p.a, o->paths, o->t_single, o->dt,
                                                  o->seed, o->jobs);
      doc["results"] = {{"ks", rep.ks},
                        {"n_samples", rep.n_samples},
                        {"burn_in", rep.burn_in}};
      doc["violations"] = rep.violations;
      rc = finish_report(doc, o->out, true, rep.ks < 0.02 && rep.violations == 0);
    } else {
      std::fprintf(stderr, "unknown check: %s\n", o->check.c_str());
      rc = 2;
    }
  });
}

// ------------------------------------------------------------ diffusion-stats

struct DiffusionOpts {
  double q = 0.0, r = 1.0, delta = 0.5, u = 0.25, T = 130.0, t = 1.0, dt = 1e-3;
  double x0 = 0.0;
  std::size_t paths = 200;
  std::uint64_t seed = 1;
  int jobs = 0;
  double ks_max = 0.02, zmax = 3.0;
  std::string check = "stationarity";
  std::string out = "diffusion_stats.json";
};

void add_diffusion_stats(CLI::App& app, int& rc) {
  auto o = std::make_shared<DiffusionOpts>();
  CLI::App* cmd = app.add_subcommand("diffusion-stats",
                                     "checks for the auxiliary K diffusion");
  attach_config(cmd);
  auto* q = cmd->add_option("--q", o->q, "weight exponent, must be > 0");
  cmd->add_option("--r", o->r, "drift parameter")->capture_default_str();
  cmd->add_option("--delta", o->delta, "moment exponent")->capture_default_str();
  cmd->add_option("--u", o->u, "envelope exponent")->capture_default_str();
  cmd->add_option("--T", o->T, "horizon for stationarity/envelope")
      ->capture_default_str();
  cmd->add_option("--t", o->t, "horizon for moment/martingale checks")
      ->capture_default_str();
  cmd->add_option("--dt", o->dt, "time step")->capture_default_str();
  cmd->add_option("--x0", o->x0, "initial point")->capture_default_str();
  cmd->add_option("--paths", o->paths, "ensemble size")->capture_default_str();
  cmd->add_option("--seed", o->seed, "RNG seed")->capture_default_str();
  cmd->add_option("--jobs", o->jobs, "worker threads")->capture_default_str();
  cmd->add_option("--ks-max", o->ks_max, "KS acceptance bound")->capture_default_str();
  cmd->add_option("--zmax", o->zmax, "|zscore| acceptance bound")
      ->capture_default_str();
  cmd->add_option("--check", o->check,
                  "stationarity | exp-moment | nt-martingale | envelope")
      ->capture_default_str();
  cmd->add_option("--out", o->out, "report path")->capture_default_str();
  cmd->callback([o, q, cmd, &rc]() {
    if (q->count() == 0) {
      rc = missing_key("q");
      return;
    }
    ReportDoc doc = slelab::report_skeleton("diffusion_" + o->check);
    doc["params"] = {{"q", o->q}, {"r", o->r}};
    doc["config"] = config_block(cmd);

    if (o->check == "stationarity") {
      const auto rep =
          slelab::diffusion_stationarity(o->q, o->paths, o->T, o->dt, o->seed, o->jobs);
      doc["results"] = {{"ks", rep.ks},
                        {"n_samples", rep.n_samples},
                        {"l_drift", stats_block(rep.l_drift)},
                        {"burn_in", rep.burn_in}};
      doc["violations"] = rep.violations;
      std::vector<std::vector<double>> rows;
      for (std::size_t b = 0; b + 1 < rep.hist_edges.size(); ++b) {
        rows.push_back({rep.hist_edges[b], rep.hist_edges[b + 1],
                        rep.hist_density[b], rep.hist_target[b]});
      }
      doc["table"] =
          slelab::make_table({"x_lo", "x_hi", "density", "target"}, rows);
      const bool pass = rep.ks < o->ks_max &&
                        std::abs(rep.l_drift.zscore) <= o->zmax &&
                        rep.violations == 0;
      rc = finish_report(doc, o->out, true, pass);
    } else if (o->check == "exp-moment") {
      const auto st = slelab::exp_moment_check(o->q, o->delta, o->t, o->paths, o->dt,
                                               o->seed, o->x0, o->jobs);
      doc["results"] = stats_block(st);
      rc = finish_report(doc, o->out, true, std::abs(st.zscore) <= o->zmax);
    } else if (o->check == "nt-martingale") {
      const auto st = slelab::nt_martingale_check(o->q, o->r, o->t, o->paths, o->dt,
                                                  o->seed, o->x0, o->jobs);
      doc["results"] = stats_block(st);
      rc = finish_report(doc, o->out, true, std::abs(st.zscore) <= o->zmax);
    } else if (o->check == "envelope") {
      const auto rep = slelab::envelope_check(o->q, o->r, o->u, o->T, o->paths, o->dt,
                                              o->seed, o->jobs);
      doc["results"] = {{"c_star", rep.c_star},
                        {"c_sigma", rep.c_sigma},
                        {"coverage_at_c_star", rep.coverage_at_c_star}};
      doc["violations"] = rep.violations;
      rc = finish_report(doc, o->out, false, false);
    } else {
      std::fprintf(stderr, "unknown check: %s\n", o->check.c_str());
      rc = 2;
    }
  });
}

// --------------------------------------------------------- derivative-moments

struct MomentOpts {
  double kappa = 0.0, lambda = 0.0, dt = 1e-3;
  std::vector<double> t_list{1, 2, 4, 8, 16, 32, 64};
  double stage_after = 1.0, stage_factor = 4.0;
  std::size_t paths = 10000;
  std::uint64_t seed = 1;
  int jobs = 0;
  double target_slope = 0.0, slope_tol = 0.0;
  std::string out = "derivative_moments.json";
};

void add_derivative_moments(CLI::App& app, int& rc) {
  auto o = std::make_shared<MomentOpts>();
  CLI::App* cmd = app.add_subcommand(
      "derivative-moments", "scaling of reverse-flow derivative moments at i");
  attach_config(cmd);
  auto* kappa = cmd->add_option("--kappa", o->kappa, "diffusivity");
  auto* lambda =
      cmd->add_option("--lambda", o->lambda, "moment exponent; defaults to d");
  cmd->add_option("--t", o->t_list, "sample times")->capture_default_str();
  cmd->add_option("--paths", o->paths, "ensemble size")->capture_default_str();
  cmd->add_option("--dt", o->dt, "base time step")->capture_default_str();
  cmd->add_option("--stage-after", o->stage_after,
                  "time after which steps grow with elapsed time")
      ->capture_default_str();
  cmd->add_option("--stage-factor", o->stage_factor, "per-stage step growth")
      ->capture_default_str();
  cmd->add_option("--seed", o->seed, "RNG seed")->capture_default_str();
  cmd->add_option("--jobs", o->jobs, "worker threads")->capture_default_str();
  auto* target = cmd->add_option("--target-slope", o->target_slope,
                                 "asserted log-log slope (omit to just report)");
  cmd->add_option("--slope-tol", o->slope_tol, "slope tolerance")
      ->capture_default_str();
  cmd->add_option("--out", o->out, "report path")->capture_default_str();
  cmd->callback([o, kappa, lambda, target, cmd, &rc]() {
    if (kappa->count() == 0) {
      rc = missing_key("kappa");
      return;
    }
    const slelab::SleParams p = slelab::derive_exponents(o->kappa);
    const double lam = lambda->count() > 0 ? o->lambda : p.d;
    const auto rep = slelab::derivative_moment_estimate(
        p.a, lam, o->t_list, o->paths, o->dt, o->seed, o->jobs, o->stage_after,
        o->stage_factor);
    ReportDoc doc = slelab::report_skeleton("derivative_moments");
    doc["params"] = {{"kappa", o->kappa}, {"a", p.a}, {"lambda", lam}};
    doc["config"] = config_block(cmd);
    std::vector<std::vector<double>> rows;
    for (const auto& pt : rep.points) {
      rows.push_back({pt.t, pt.mean, pt.std_error});
    }
    doc["results"] = {{"slope", rep.fit.slope},
                      {"slope_stderr", rep.fit.std_error},
                      {"r2", rep.fit.r2}};
    doc["violations"] = rep.violations;
    doc["table"] = slelab::make_table({"t", "mean", "stderr"}, rows);
    if (target->count() > 0) {
      const bool pass = std::abs(rep.fit.slope - o->target_slope) <= o->slope_tol &&
                        rep.violations == 0;
      rc = finish_report(doc, o->out, true, pass);
    } else {
      rc = finish_report(doc, o->out, false, false);
    }
  });
}

// -------------------------------------------------------------- green-function

struct GreenOpts {
  double kappa = 0.0, dt = 1e-3, floor = 1e-3, band = 0.0, cstar_band = 0.0;
  std::vector<double> zx{0.0, 1.0, 0.0};
  std::vector<double> zy{1.0, 1.0, 2.0};
  std::vector<double> t_list{0.0625, 0.125, 0.25};
  std::vector<double> eps_list{0.05};
  std::vector<double> t_max{64, 128, 256};
  double stage_after = 1.0, stage_factor = 4.0;
  std::size_t paths = 100000;
  std::uint64_t seed = 1;
  int jobs = 0;
  double zmax = 3.0;
  std::string check = "tail";
  std::string out = "green_function.json";
};

void add_green_function(CLI::App& app, int& rc) {
  auto o = std::make_shared<GreenOpts>();
  CLI::App* cmd = app.add_subcommand(
      "green-function", "one-point function of the forward flow");
  attach_config(cmd);
  auto* kappa = cmd->add_option("--kappa", o->kappa, "diffusivity");
  cmd->add_option("--zx", o->zx, "Re of evaluation points")->capture_default_str();
  cmd->add_option("--zy", o->zy, "Im of evaluation points")->capture_default_str();
  cmd->add_option("--t", o->t_list, "sample times (martingale check)")
      ->capture_default_str();
  cmd->add_option("--eps", o->eps_list, "tail thresholds")->capture_default_str();
  cmd->add_option("--t-max", o->t_max, "horizon per point (tail check)")
      ->capture_default_str();
  cmd->add_option("--floor", o->floor, "stopping floor for the martingale check")
      ->capture_default_str();
  cmd->add_option("--paths", o->paths, "ensemble size")->capture_default_str();
  cmd->add_option("--dt", o->dt, "base time step")->capture_default_str();
  cmd->add_option("--stage-after", o->stage_after, "staged-grid start")
      ->capture_default_str();
  cmd->add_option("--stage-factor", o->stage_factor, "staged-grid growth")
      ->capture_default_str();
  cmd->add_option("--seed", o->seed, "RNG seed")->capture_default_str();
  cmd->add_option("--jobs", o->jobs, "worker threads")->capture_default_str();
  cmd->add_option("--zmax", o->zmax, "|zscore| bound (martingale check)")
      ->capture_default_str();
  cmd->add_option("--band", o->band,
                  "assert cross-point ratio spread below this fraction");
  cmd->add_option("--cstar-band", o->cstar_band,
                  "assert mean ratio within this fraction of c*");
  cmd->add_option("--check", o->check, "tail | martingale")->capture_default_str();
  cmd->add_option("--out", o->out, "report path")->capture_default_str();
  cmd->callback([o, kappa, cmd, &rc]() {
    if (kappa->count() == 0) {
      rc = missing_key("kappa");
      return;
    }
    if (o->zx.size() != o->zy.size()) {
      std::fprintf(stderr, "zx and zy must have equal length\n");
      rc = 2;
      return;
    }
    const slelab::SleParams p = slelab::derive_exponents(o->kappa);
    ReportDoc doc = slelab::report_skeleton("green_" + o->check);
    doc["params"] = {{"kappa", o->kappa}, {"a", p.a}, {"d", p.d}};
    doc["config"] = config_block(cmd);

    if (o->check == "martingale") {
      const cplx z(o->zx.front(), o->zy.front());
      const auto rep = slelab::green_martingale_test(
          p.a, z, o->t_list, o->paths, o->dt, o->seed, o->floor, o->jobs);
      bool pass = rep.violations == 0;
      ReportDoc results = ReportDoc::array();
      for (std::size_t i = 0; i < rep.t.size(); ++i) {
        ReportDoc rdoc = stats_block(rep.stats[i]);
        rdoc["t"] = rep.t[i];
        results.push_back(rdoc);
        pass = pass && std::abs(rep.stats[i].zscore) <= o->zmax;
      }
      doc["results"] = results;
      doc["stopped_paths"] = rep.stopped_paths;
      doc["clip_count"] = rep.clip_count;
      doc["violations"] = rep.violations;
      rc = finish_report(doc, o->out, true, pass);
      return;
    }
    if (o->check != "tail") {
      std::fprintf(stderr, "unknown check: %s\n", o->check.c_str());
      rc = 2;
      return;
    }
    std::vector<cplx> zs;
    for (std::size_t i = 0; i < o->zx.size(); ++i) zs.emplace_back(o->zx[i], o->zy[i]);
    const auto rep = slelab::one_point_green_estimate(
        p.a, zs, o->eps_list, o->paths, o->dt, o->t_max, o->seed, o->jobs,
        o->stage_after, o->stage_factor);
    ReportDoc rows_doc = ReportDoc::array();
    std::vector<std::vector<double>> rows;
    double lo = 0.0, hi = 0.0, mean_ratio = 0.0;
    std::size_t cells = 0;
    for (const auto& row : rep.rows) {
      for (const auto& cell : row.cells) {
        ReportDoc rdoc;
        rdoc["zx"] = row.z.real();
        rdoc["zy"] = row.z.imag();
        rdoc["g"] = row.g;
        rdoc["eps"] = cell.eps;
        rdoc["prob"] = cell.prob;
        rdoc["prob_stderr"] = cell.prob_stderr;
        rdoc["ratio"] = cell.ratio;
        rdoc["ratio_stderr"] = cell.ratio_stderr;
        rows_doc.push_back(rdoc);
        rows.push_back({row.z.real(), row.z.imag(), cell.eps, cell.prob, cell.ratio,
                        cell.ratio_stderr});
        if (cells == 0 || cell.ratio < lo) lo = cell.ratio;
        if (cells == 0 || cell.ratio > hi) hi = cell.ratio;
        mean_ratio += cell.ratio;
        ++cells;
      }
    }
    mean_ratio /= static_cast<double>(cells ? cells : 1);
    doc["results"] = {{"c_star", rep.c_star},
                      {"ratio_min", lo},
                      {"ratio_max", hi},
                      {"ratio_mean", mean_ratio},
                      {"cells", rows_doc}};
    doc["table"] = slelab::make_table(
        {"zx", "zy", "eps", "prob", "ratio", "ratio_stderr"}, rows);
    const bool band_given = o->band > 0.0;
    const bool cstar_given = o->cstar_band > 0.0;
    if (!band_given && !cstar_given) {
      rc = finish_report(doc, o->out, false, false);
      return;
    }
    bool pass = true;
    if (band_given && cells > 0) pass = pass && (hi - lo) <= o->band * hi;
    if (cstar_given) {
      pass = pass && std::abs(mean_ratio - rep.c_star) <= o->cstar_band * rep.c_star;
    }
    rc = finish_report(doc, o->out, true, pass);
  });
}

// --------------------------------------------------------------- natural-param

struct NaturalOpts {
  double kappa = 0.0, dt = 0.0, stability_factor = 1.5;
  std::vector<std::size_t> n_list{64, 128, 256, 512};
  std::size_t compare_n = 0;
  std::size_t paths = 100;
  std::uint64_t seed = 1;
  int jobs = 0;
  std::string out = "natural_param.json";
  std::string series_out;
};

void add_natural_param(CLI::App& app, int& rc) {
  auto o = std::make_shared<NaturalOpts>();
  CLI::App* cmd = app.add_subcommand(
      "natural-param", "candidate parametrizations and their stability in n");
  attach_config(cmd);
  auto* kappa = cmd->add_option("--kappa", o->kappa, "diffusivity");
  cmd->add_option("--n", o->n_list, "subdivision counts")->capture_default_str();
  cmd->add_option("--paths", o->paths, "ensemble size for the derivative sum")
      ->capture_default_str();
  cmd->add_option("--dt", o->dt, "driver step; default resolves 8x the largest n");
  cmd->add_option("--compare-n", o->compare_n,
                  "subdivision for the cross-candidate comparison; 0 = smallest n")
      ->capture_default_str();
  cmd->add_option("--stability-factor", o->stability_factor,
                  "max/min band for mean tau_n(1) across n")
      ->capture_default_str();
  cmd->add_option("--seed", o->seed, "RNG seed")->capture_default_str();
  cmd->add_option("--jobs", o->jobs, "worker threads")->capture_default_str();
  cmd->add_option("--out", o->out, "report path")->capture_default_str();
  cmd->add_option("--series-out", o->series_out,
                  "CSV of the path-0 derivative-sum series at the largest n");
  cmd->callback([o, kappa, cmd, &rc]() {
    if (kappa->count() == 0) {
      rc = missing_key("kappa");
      return;
    }
    if (o->n_list.empty()) {
      std::fprintf(stderr, "n list must not be empty\n");
      rc = 2;
      return;
    }
    const slelab::SleParams p = slelab::derive_exponents(o->kappa);
    std::size_t n_max = 0, n_min = o->n_list.front();
    for (std::size_t n : o->n_list) {
      n_max = std::max(n_max, n);
      n_min = std::min(n_min, n);
    }
    const double dt = o->dt > 0.0 ? o->dt : 1.0 / (8.0 * static_cast<double>(n_max));

    // Ensemble of tau_n(1) per n, common drivers across n.
    std::vector<std::vector<double>> vals(o->n_list.size(),
                                          std::vector<double>(o->paths));
    slelab::parallel_for(o->paths, o->jobs, [&](std::size_t i) {
      const slelab::DrivingPath driver = slelab::sample_brownian_driver(
          1.0, dt, p.a, slelab::path_seed(o->seed, i));
      for (std::size_t ni = 0; ni < o->n_list.size(); ++ni) {
        vals[ni][i] = slelab::tau_derivative_sum(driver, o->n_list[ni]).taus.back();
      }
    });

    ReportDoc doc = slelab::report_skeleton("natural_param");
    doc["params"] = {{"kappa", o->kappa}, {"a", p.a}, {"d", p.d}};
    doc["config"] = config_block(cmd);
    ReportDoc per_n = ReportDoc::array();
    std::vector<std::vector<double>> rows;
    double mean_lo = 0.0, mean_hi = 0.0;
    for (std::size_t ni = 0; ni < o->n_list.size(); ++ni) {
      const auto st = slelab::summarize(vals[ni], 0.0, dt);
      ReportDoc e;
      e["n"] = o->n_list[ni];
      e["mean"] = st.mean;
      e["stderr"] = st.std_error;
      per_n.push_back(e);
      rows.push_back({static_cast<double>(o->n_list[ni]), st.mean, st.std_error});
      if (ni == 0 || st.mean < mean_lo) mean_lo = st.mean;
      if (ni == 0 || st.mean > mean_hi) mean_hi = st.mean;
    }
    doc["results"] = {{"derivative_sum", per_n},
                      {"stability_ratio", mean_hi / mean_lo}};
    doc["table"] = slelab::make_table({"n", "mean_tau", "stderr"}, rows);

    // Cross-candidate comparison on the path-0 driver, reported as ratios.
    const std::size_t nc = o->compare_n ? o->compare_n : n_min;
    const slelab::DrivingPath driver0 =
        slelab::sample_brownian_driver(1.0, dt, p.a, slelab::path_seed(o->seed, 0));
    const double tau_ds = slelab::tau_derivative_sum(driver0, nc).taus.back();
    const slelab::Trace tr = slelab::trace(driver0);
    const double tau_dv = slelab::tau_d_variation(tr, nc, p.d).taus.back();
    const double eps = 1.0 / static_cast<double>(nc);
    slelab::BBox bbox;
    bbox.xlo = bbox.xhi = tr.points.front().real();
    bbox.ylo = 0.0;
    bbox.yhi = tr.points.front().imag();
    for (cplx pt : tr.points) {
      bbox.xlo = std::min(bbox.xlo, pt.real());
      bbox.xhi = std::max(bbox.xhi, pt.real());
      bbox.yhi = std::max(bbox.yhi, pt.imag());
    }
    bbox.xlo -= 2.0 * eps;
    bbox.xhi += 2.0 * eps;
    bbox.ylo -= 2.0 * eps;
    bbox.yhi += 2.0 * eps;
    const double tau_mink = slelab::tau_minkowski(tr, eps, p.d, bbox, eps / 4.0);
    const double tau_conf = slelab::tau_conformal_minkowski(
        driver0, bbox, eps / 4.0, eps, 1.0, p.d, o->jobs);
    doc["comparison"] = {{"n", nc},
                         {"derivative_sum", tau_ds},
                         {"d_variation", tau_dv},
                         {"minkowski", tau_mink},
                         {"conformal_minkowski", tau_conf},
                         {"d_variation_ratio", tau_dv / tau_ds},
                         {"minkowski_ratio", tau_mink / tau_ds},
                         {"conformal_ratio", tau_conf / tau_ds}};

    if (!o->series_out.empty()) {
      slelab::write_param_series_csv(slelab::tau_derivative_sum(driver0, n_max),
                                     o->series_out);
    }
    const bool pass = mean_hi / mean_lo <= o->stability_factor;
    rc = finish_report(doc, o->out, true, pass);
  });
}

// ------------------------------------------------------------ estimate-dimension

struct DimensionOpts {
  double kappa = 0.0, T = 1.0, tol = 0.15;
  std::size_t traces = 20, points = 20000;
  std::vector<double> scales;
  std::vector<double> p_grid;
  std::uint64_t seed = 1;
  int jobs = 0;
  std::string method = "box";
  std::string out = "estimate_dimension.json";
};

void add_estimate_dimension(CLI::App& app, int& rc) {
  auto o = std::make_shared<DimensionOpts>();
  CLI::App* cmd = app.add_subcommand("estimate-dimension",
                                     "fractal dimension of sampled traces");
  attach_config(cmd);
  auto* kappa = cmd->add_option("--kappa", o->kappa, "diffusivity");
  cmd->add_option("--traces", o->traces, "ensemble size")->capture_default_str();
  cmd->add_option("--points", o->points, "points per trace")->capture_default_str();
  cmd->add_option("--T", o->T, "capacity horizon")->capture_default_str();
  cmd->add_option("--scales", o->scales,
                  "box sides; default spans 1.5 decades below diameter/8");
  cmd->add_option("--p-grid", o->p_grid,
                  "exponent grid for the variation method; default 1:2.2:0.05");
  cmd->add_option("--tol", o->tol, "acceptance band around 1 + kappa/8")
      ->capture_default_str();
  cmd->add_option("--seed", o->seed, "RNG seed")->capture_default_str();
  cmd->add_option("--jobs", o->jobs, "worker threads")->capture_default_str();
  cmd->add_option("--method", o->method, "box | variation | holder")
      ->capture_default_str();
  cmd->add_option("--out", o->out, "report path")->capture_default_str();
  cmd->callback([o, kappa, cmd, &rc]() {
    if (kappa->count() == 0) {
      rc = missing_key("kappa");
      return;
    }
    const slelab::SleParams p = slelab::derive_exponents(o->kappa);
    const double dt = o->T / static_cast<double>(o->points);
    std::vector<double> estimates(o->traces);
    slelab::ScalingFit fit0;
    std::vector<double> p_grid = o->p_grid;
    if (p_grid.empty()) {
      for (double x = 1.0; x <= 2.2001; x += 0.05) p_grid.push_back(x);
    }
    slelab::parallel_for(o->traces, o->jobs, [&](std::size_t i) {
      const slelab::DrivingPath driver = slelab::sample_brownian_driver(
          o->T, dt, p.a, slelab::path_seed(o->seed, i));
      const slelab::Trace tr = slelab::trace(driver);
      if (o->method == "variation") {
        estimates[i] = slelab::variation_dimension(tr, p_grid);
      } else if (o->method == "holder") {
        slelab::Trace cut;
        cut.dt = tr.dt;
        cut.y0 = tr.y0;
        const std::size_t first = tr.points.size() / 10;
        cut.times.assign(tr.times.begin() + first, tr.times.end());
        cut.points.assign(tr.points.begin() + first, tr.points.end());
        estimates[i] = slelab::holder_report(cut).exponent;
      } else {
        std::vector<double> scales = o->scales;
        if (scales.empty()) {
          double diam = 0.0;
          for (cplx zp : tr.points) {
            for (cplx zq : {tr.points.front(), tr.points.back()}) {
              diam = std::max(diam, std::abs(zp - zq));
            }
          }
          const double s_max = diam / 8.0;
          for (int k = 0; k < 5; ++k) {
            scales.push_back(s_max * std::pow(10.0, -1.5 * k / 4.0));
          }
        }
        const slelab::ScalingFit fit = slelab::box_count_dimension(tr, scales);
        estimates[i] = fit.slope;
        if (i == 0) fit0 = fit;
      }
    });
    const auto st = slelab::summarize(estimates, 1.0 + o->kappa / 8.0, dt);
    ReportDoc doc = slelab::report_skeleton("estimate_dimension");
    doc["params"] = {{"kappa", o->kappa}, {"d", p.d}, {"method", o->method}};
    doc["config"] = config_block(cmd);
    doc["results"] = stats_block(st);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
      rows.push_back({static_cast<double>(i), estimates[i]});
    }
    doc["table"] = slelab::make_table({"trace", "estimate"}, rows);
    if (o->method == "box" && !fit0.xs.empty()) {
      std::vector<double> sc, cnt;
      for (double x : fit0.xs) sc.push_back(std::exp(-x));
      for (double y : fit0.ys) cnt.push_back(std::exp(y));
      doc["scaling"] = {{"scales", sc},
                        {"counts", cnt},
                        {"slope", fit0.slope},
                        {"stderr", fit0.std_error},
                        {"r2", fit0.r2}};
    }
    if (o->method == "holder") {
      rc = finish_report(doc, o->out, false, false);
    } else {
      rc = finish_report(doc, o->out, true, std::abs(st.mean - st.target) <= o->tol);
    }
  });
}

// ---------------------------------------------------------------- report-bundle

void add_report_bundle(CLI::App& app, int& rc) {
  auto dir = std::make_shared<std::string>();
  CLI::App* cmd = app.add_subcommand("report-bundle",
                                     "aggregate a directory of JSON reports");
  auto* dopt = cmd->add_option("--dir", *dir, "directory of reports");
  cmd->callback([dir, dopt, &rc]() {
    if (dopt->count() == 0) {
      rc = missing_key("dir");
      return;
    }
    const slelab::BundleResult res = slelab::bundle_reports(*dir);
    std::printf("bundle: %zu pass, %zu fail, %zu informational, %zu unreadable\n",
                res.pass, res.fail, res.informational, res.unreadable.size());
    for (const auto& f : res.unreadable) std::printf("unreadable: %s\n", f.c_str());
    rc = res.exit_code();
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for chordal Loewner evolution"};
  app.require_subcommand(1);
  int rc = 0;
  add_simulate_trace(app, rc);
  add_check_martingale(app, rc);
  add_diffusion_stats(app, rc);
  add_derivative_moments(app, rc);
  add_green_function(app, rc);
  add_natural_param(app, rc);
  add_estimate_dimension(app, rc);
  add_report_bundle(app, rc);

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return rc;
}
