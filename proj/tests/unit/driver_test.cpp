#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "doctest.h"
#include "slelab/driver.hpp"
#include "slelab/rng.hpp"

using namespace slelab;

namespace {

DrivingPath make_path(std::vector<double> values, double dt, double a = 0.5) {
  DrivingPath p;
  p.dt = dt;
  p.a = a;
  p.values = std::move(values);
  return p;
}

std::string tmp_file(const char* stem) {
  return std::string("driver_test_") + stem;
}

}  // namespace

TEST_CASE("time-reversal oracle") {
  // V = (0, 1, 3) on dt = 1: full reversal about the endpoint gives
  // (0, -2, -3); the head split at S = 1 gives (0, -1).
  const DrivingPath v = make_path({0.0, 1.0, 3.0}, 1.0);
  const ReversedDriver rev = reverse_driver(v, 1.0);
  REQUIRE(rev.full.values.size() == 3);
  CHECK(rev.full.values[0] == doctest::Approx(0.0));
  CHECK(rev.full.values[1] == doctest::Approx(-2.0));
  CHECK(rev.full.values[2] == doctest::Approx(-3.0));
  REQUIRE(rev.head.values.size() == 2);
  CHECK(rev.head.values[0] == doctest::Approx(0.0));
  CHECK(rev.head.values[1] == doctest::Approx(-1.0));
  CHECK(rev.head.horizon() == doctest::Approx(1.0));
}

TEST_CASE("brownian driver: grid shape and increment variance") {
  const DrivingPath p = sample_brownian_driver(2.0, 0.01, 0.75, 5);
  CHECK(p.n_steps() == 200);
  CHECK(p.horizon() == doctest::Approx(2.0));
  CHECK(p.values.front() == 0.0);
  CHECK(p.time_at(100) == doctest::Approx(1.0));

  // pooled increment variance over many paths: relative error ~ sqrt(2/n)
  double s2 = 0.0;
  std::size_t n = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const DrivingPath q = sample_brownian_driver(1.0, 0.01, 0.75, path_seed(3, seed));
    for (std::size_t k = 1; k < q.values.size(); ++k) {
      const double du = q.values[k] - q.values[k - 1];
      s2 += du * du;
      ++n;
    }
  }
  CHECK(s2 / (0.01 * static_cast<double>(n)) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("dilation scales values and time exactly") {
  const DrivingPath p = make_path({0.0, 0.5, -0.25, 1.0}, 0.25, 0.75);
  const DrivingPath q = dilate_driver(p, 2.0);
  CHECK(q.dt == doctest::Approx(1.0));
  CHECK(q.a == doctest::Approx(0.75));
  REQUIRE(q.values.size() == 4);
  CHECK(q.values[1] == doctest::Approx(1.0));
  CHECK(q.values[2] == doctest::Approx(-0.5));
  CHECK(q.values[3] == doctest::Approx(2.0));
  CHECK_THROWS(dilate_driver(p, 0.0));
}

TEST_CASE("refinement halves dt and preserves coarse values") {
  const DrivingPath p = sample_brownian_driver(1.0, 0.05, 0.5, 11);
  const DrivingPath fine = refine_driver(p, 99);
  CHECK(fine.n_steps() == 2 * p.n_steps());
  CHECK(fine.dt == doctest::Approx(p.dt / 2.0));
  bool match = true;
  for (std::size_t k = 0; k < p.values.size(); ++k) {
    match = match && std::abs(fine.values[2 * k] - p.values[k]) < 1e-12;
  }
  CHECK(match);

  // midpoint deviations from the linear interpolant have variance dt/4
  double s2 = 0.0;
  std::size_t n = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const DrivingPath f = refine_driver(p, path_seed(17, seed));
    for (std::size_t k = 0; k < p.n_steps(); ++k) {
      const double mid = 0.5 * (p.values[k] + p.values[k + 1]);
      const double dev = f.values[2 * k + 1] - mid;
      s2 += dev * dev;
      ++n;
    }
  }
  CHECK(s2 / static_cast<double>(n) ==
        doctest::Approx(p.dt / 4.0).epsilon(0.08));
}

TEST_CASE("csv and binary round trips") {
  const DrivingPath p = sample_brownian_driver(0.5, 0.01, 0.75, 21);
  const std::string csv = tmp_file("d.csv");
  const std::string bin = tmp_file("d.bin");
  write_driver_csv(p, csv);
  const DrivingPath pc = read_driver_csv(csv, 0.75);
  REQUIRE(pc.values.size() == p.values.size());
  bool eq = pc.dt == p.dt;
  for (std::size_t k = 0; k < p.values.size(); ++k) {
    eq = eq && pc.values[k] == p.values[k];
  }
  CHECK(eq);

  write_driver_binary(p, bin);
  const DrivingPath pb = read_driver_binary(bin);
  REQUIRE(pb.values.size() == p.values.size());
  CHECK(pb.a == p.a);
  CHECK(pb.values == p.values);
  std::remove(csv.c_str());
  std::remove(bin.c_str());
}
