#include <atomic>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "slelab/parallel.hpp"
#include "slelab/rng.hpp"

using namespace slelab;

TEST_CASE("normal sampler is deterministic per seed") {
  NormalSampler a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 64; ++i) {
    const double x = a();
    all_equal = all_equal && x == b();
    any_diff = any_diff || x != c();
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("normal sampler moments") {
  NormalSampler normal(7);
  const std::size_t n = 400000;
  double s1 = 0.0, s2 = 0.0, s4 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = normal();
    s1 += x;
    s2 += x * x;
    s4 += x * x * x * x;
  }
  const double nn = static_cast<double>(n);
  CHECK(std::abs(s1 / nn) < 5.0 / std::sqrt(nn));
  CHECK(s2 / nn == doctest::Approx(1.0).epsilon(0.01));
  CHECK(s4 / nn == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("path seeds are distinct and order independent") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 4096; ++i) seen.insert(path_seed(1234, i));
  CHECK(seen.size() == 4096);
  CHECK(path_seed(1234, 7) != path_seed(1235, 7));
}

TEST_CASE("parallel_for covers every index exactly once") {
  const std::size_t n = 1000;
  std::vector<std::atomic<int>> hits(n);
  for (auto& h : hits) h = 0;
  parallel_for(n, 4, [&](std::size_t i) { ++hits[i]; });
  bool ok = true;
  for (const auto& h : hits) ok = ok && h == 1;
  CHECK(ok);
}

TEST_CASE("parallel_for results do not depend on the job count") {
  const std::size_t n = 257;
  std::vector<double> one(n), four(n);
  parallel_for(n, 1, [&](std::size_t i) {
    NormalSampler normal(path_seed(9, i));
    one[i] = normal() + normal();
  });
  parallel_for(n, 4, [&](std::size_t i) {
    NormalSampler normal(path_seed(9, i));
    four[i] = normal() + normal();
  });
  CHECK(one == four);
}

TEST_CASE("parallel_for rethrows worker exceptions") {
  CHECK_THROWS_AS(
      parallel_for(16, 4,
                   [](std::size_t i) {
                     if (i == 11) throw std::runtime_error("boom");
                   }),
      std::runtime_error);
}

TEST_CASE("resolve_jobs prefers the explicit request") {
  CHECK(resolve_jobs(3) == 3);
  CHECK(resolve_jobs(0) >= 1);
}
