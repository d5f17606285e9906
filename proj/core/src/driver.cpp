#include "slelab/driver.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "binio.hpp"
#include "slelab/rng.hpp"

namespace slelab {

namespace {

std::size_t steps_on_grid(double T, double dt, const char* who) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument(std::string(who) + ": dt must be positive");
  }
  if (!(T >= 0.0) || !std::isfinite(T)) {
    throw std::invalid_argument(std::string(who) + ": horizon must be nonnegative");
  }
  const double n_real = T / dt;
  const auto n = static_cast<std::size_t>(std::llround(n_real));
  if (std::abs(static_cast<double>(n) * dt - T) > 1e-9 * std::max(1.0, std::abs(T))) {
    throw std::invalid_argument(std::string(who) + ": horizon not on the dt grid");
  }
  return n;
}

void check_positive_a(double a, const char* who) {
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw std::invalid_argument(std::string(who) + ": a must be positive");
  }
}

void validate_shape(const DrivingPath& p, const char* who) {
  if (p.values.empty()) throw std::runtime_error(std::string(who) + ": empty driver");
  if (p.values.front() != 0.0) {
    throw std::runtime_error(std::string(who) + ": driver must start at 0");
  }
  if (!(p.dt > 0.0) || !std::isfinite(p.dt)) {
    throw std::runtime_error(std::string(who) + ": bad dt");
  }
  for (double v : p.values) {
    if (!std::isfinite(v)) throw std::runtime_error(std::string(who) + ": non-finite sample");
  }
}

}  // namespace

DrivingPath sample_brownian_driver(double T, double dt, double a, std::uint64_t seed) {
  check_positive_a(a, "sample_brownian_driver");
  const std::size_t n = steps_on_grid(T, dt, "sample_brownian_driver");
  DrivingPath p;
  p.dt = dt;
  p.a = a;
  p.seed = seed;
  p.values.resize(n + 1);
  p.values[0] = 0.0;
  NormalSampler normal(seed);
  const double sd = std::sqrt(dt);
  for (std::size_t k = 0; k < n; ++k) {
    p.values[k + 1] = p.values[k] + sd * normal();
  }
  return p;
}

DrivingPath constant_driver(double T, double dt, double a, double value) {
  check_positive_a(a, "constant_driver");
  if (value != 0.0) {
    throw std::invalid_argument("constant_driver: only the zero driver is admissible");
  }
  const std::size_t n = steps_on_grid(T, dt, "constant_driver");
  DrivingPath p;
  p.dt = dt;
  p.a = a;
  p.values.assign(n + 1, 0.0);
  return p;
}

DrivingPath refine_driver(const DrivingPath& path, std::uint64_t seed) {
  validate_shape(path, "refine_driver");
  DrivingPath r;
  r.dt = 0.5 * path.dt;
  r.a = path.a;
  r.seed = seed;
  const std::size_t n = path.n_steps();
  r.values.resize(2 * n + 1);
  NormalSampler normal(seed);
  const double bridge_sd = 0.5 * std::sqrt(path.dt);  // Var = dt/4
  for (std::size_t k = 0; k < n; ++k) {
    r.values[2 * k] = path.values[k];
    r.values[2 * k + 1] =
        0.5 * (path.values[k] + path.values[k + 1]) + bridge_sd * normal();
  }
  r.values[2 * n] = path.values[n];
  return r;
}

DrivingPath dilate_driver(const DrivingPath& path, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("dilate_driver: r must be positive");
  DrivingPath out = path;
  out.dt = r * r * path.dt;
  for (double& v : out.values) v *= r;
  return out;
}

ReversedDriver reverse_driver(const DrivingPath& path, double split) {
  validate_shape(path, "reverse_driver");
  const std::size_t n = path.n_steps();
  const std::size_t s = steps_on_grid(split, path.dt, "reverse_driver");
  if (s > n) throw std::invalid_argument("reverse_driver: split beyond horizon");

  ReversedDriver out;
  out.full.dt = path.dt;
  out.full.a = path.a;
  out.full.seed = path.seed;
  out.full.values.resize(n + 1);
  const double vn = path.values[n];
  for (std::size_t j = 0; j <= n; ++j) {
    out.full.values[j] = path.values[n - j] - vn;
  }
  out.full.values[0] = 0.0;

  // Segment identity: the head is the reversal of the initial [0, split] leg.
  out.head.dt = path.dt;
  out.head.a = path.a;
  out.head.seed = path.seed;
  out.head.values.resize(s + 1);
  const double vs = path.values[s];
  for (std::size_t j = 0; j <= s; ++j) {
    out.head.values[j] = path.values[s - j] - vs;
  }
  out.head.values[0] = 0.0;
  return out;
}

void write_driver_csv(const DrivingPath& path, const std::string& file) {
  validate_shape(path, "write_driver_csv");
  std::ofstream out(file);
  if (!out) throw std::runtime_error("write_driver_csv: cannot open " + file);
  out << "t,u\n";
  char buf[64];
  for (std::size_t k = 0; k < path.values.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", path.time_at(k));
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", path.values[k]);
    out << buf << '\n';
  }
}

DrivingPath read_driver_csv(const std::string& file, double a) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("read_driver_csv: cannot open " + file);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_driver_csv: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,u") throw std::runtime_error("read_driver_csv: expected header t,u");
  DrivingPath p;
  p.a = a;
  std::vector<double> ts;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::runtime_error("read_driver_csv: malformed row: " + line);
    }
    ts.push_back(std::stod(line.substr(0, comma)));
    p.values.push_back(std::stod(line.substr(comma + 1)));
  }
  if (p.values.size() < 2) throw std::runtime_error("read_driver_csv: need two samples");
  p.dt = ts[1] - ts[0];
  for (std::size_t k = 0; k < ts.size(); ++k) {
    if (std::abs(ts[k] - p.dt * static_cast<double>(k)) >
        1e-9 * std::max(1.0, std::abs(ts[k]))) {
      throw std::runtime_error("read_driver_csv: grid is not uniform from 0");
    }
  }
  validate_shape(p, "read_driver_csv");
  return p;
}

void write_driver_binary(const DrivingPath& path, const std::string& file) {
  validate_shape(path, "write_driver_binary");
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("write_driver_binary: cannot open " + file);
  out.write("SLEDRV1\0", 8);
  binio::put_u64(out, path.values.size());
  binio::put_u64(out, path.seed);
  binio::put_f64(out, path.dt);
  binio::put_f64(out, path.a);
  for (double v : path.values) binio::put_f64(out, v);
}

DrivingPath read_driver_binary(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("read_driver_binary: cannot open " + file);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "SLEDRV1\0", 8) != 0) {
    throw std::runtime_error("read_driver_binary: bad magic");
  }
  const std::uint64_t count = binio::get_u64(in, "read_driver_binary");
  DrivingPath p;
  p.seed = binio::get_u64(in, "read_driver_binary");
  p.dt = binio::get_f64(in, "read_driver_binary");
  p.a = binio::get_f64(in, "read_driver_binary");
  p.values.resize(count);
  for (auto& v : p.values) v = binio::get_f64(in, "read_driver_binary");
  validate_shape(p, "read_driver_binary");
  return p;
}

}  // namespace slelab
