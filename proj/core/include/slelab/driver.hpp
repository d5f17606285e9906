#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace slelab {

/**
 * Uniformly sampled driving function.
 *
 * values[k] is the driver at time k*dt with values[0] = 0 always. `a` tags
 * the capacity normalization the samples are meant to drive; it travels with
 * the binary container so downstream consumers cannot pair a path with the
 * wrong normalization silently. For Brownian drivers increments are
 * N(0, dt): the variance normalization lives in `a`, not in the samples.
 */
struct DrivingPath {
  double dt = 0.0;
  double a = 0.5;
  std::uint64_t seed = 0;
  std::vector<double> values;

  std::size_t n_steps() const { return values.empty() ? 0 : values.size() - 1; }
  double horizon() const { return dt * static_cast<double>(n_steps()); }
  double time_at(std::size_t k) const { return dt * static_cast<double>(k); }
};

/// Brownian driver on [0, T]. T must sit on the dt grid.
DrivingPath sample_brownian_driver(double T, double dt, double a, std::uint64_t seed);

/// Zero driver. Only value 0 is admissible: a nonzero constant is not a
/// normalized driving function (values[0] = 0 is part of the contract).
DrivingPath constant_driver(double T, double dt, double a, double value = 0.0);

/// One midpoint refinement level: dt halves, existing samples are kept and
/// the new midpoints are Brownian-bridge draws with variance dt/4.
DrivingPath refine_driver(const DrivingPath& path, std::uint64_t seed);

/// Brownian-scaling dilation: values r*V_k on the grid r^2 dt. Capacity time
/// scales by r^2 and the slit chain commutes with z -> r z exactly, so
/// chain-derived quantities satisfy their scaling identities per realization.
DrivingPath dilate_driver(const DrivingPath& path, double r);

/// Time reversal of a driver V on [0, S+T] about its endpoint, split at S.
/// full:  U_t = V_{S+T-t} - V_{S+T} on [0, S+T]
/// head:  the segment identity U~_t = U_{T+t} - U_T = V_{S-t} - V_S on [0, S]
struct ReversedDriver {
  DrivingPath full;
  DrivingPath head;
};

ReversedDriver reverse_driver(const DrivingPath& path, double split);

/// CSV with header "t,u"; samples round trip bit exactly through %.17g.
void write_driver_csv(const DrivingPath& path, const std::string& file);
DrivingPath read_driver_csv(const std::string& file, double a = 0.5);

/// Binary container: magic "SLEDRV1\0", then little-endian u64 count and
/// seed, f64 dt and a, then count f64 samples.
void write_driver_binary(const DrivingPath& path, const std::string& file);
DrivingPath read_driver_binary(const std::string& file);

}  // namespace slelab
