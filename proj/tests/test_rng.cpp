#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "otl/rng.hpp"

using namespace otl;

TEST_CASE("philox4x32-10 known-answer vectors") {
  const auto zeros = detail::philox4x32_10({0, 0, 0, 0}, {0, 0});
  CHECK(zeros[0] == 0x6627e8d5u);
  CHECK(zeros[1] == 0xe169c58du);
  CHECK(zeros[2] == 0xbc57ac4cu);
  CHECK(zeros[3] == 0x9b00dbd8u);

  const uint32_t m = 0xffffffffu;
  const auto ones = detail::philox4x32_10({m, m, m, m}, {m, m});
  CHECK(ones[0] == 0x408f276du);
  CHECK(ones[1] == 0x41c83b0eu);
  CHECK(ones[2] == 0xa20bc7c6u);
  CHECK(ones[3] == 0x6d5451fdu);
}

TEST_CASE("streams are deterministic and independent") {
  RngStream a(42, 0), b(42, 0), c(42, 1), d(43, 0);
  for (int i = 0; i < 100; ++i) {
    const uint32_t va = a.next_u32();
    CHECK(va == b.next_u32());
  }
  std::set<uint32_t> seen;
  RngStream a2(42, 0);
  for (int i = 0; i < 16; ++i) seen.insert(a2.next_u32());
  int hits_c = 0, hits_d = 0;
  for (int i = 0; i < 16; ++i) {
    if (seen.count(c.next_u32())) ++hits_c;
    if (seen.count(d.next_u32())) ++hits_d;
  }
  CHECK(hits_c == 0);
  CHECK(hits_d == 0);
}

TEST_CASE("uniform01 lies in [0,1) and has the right mean") {
  RngStream rng(7, 0);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::fabs(sum / n - 0.5) < 0.005);
}

TEST_CASE("normal has mean 0, variance 1, finite fourth moment") {
  RngStream rng(11, 3);
  const int n = 400000;
  double s1 = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s1 += x;
    s2 += x * x;
    s4 += x * x * x * x;
  }
  CHECK(std::fabs(s1 / n) < 0.01);
  CHECK(std::fabs(s2 / n - 1.0) < 0.02);
  CHECK(std::fabs(s4 / n - 3.0) < 0.1);
}

TEST_CASE("sphere_point is unit norm") {
  RngStream rng(5, 9);
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd x = rng.sphere_point(17);
    CHECK(std::fabs(x.norm() - 1.0) < 1e-14);
  }
}
