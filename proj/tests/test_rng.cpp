#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <vector>

#include "doctest.h"
#include "lspsim/rng.hpp"

using namespace lspsim;

namespace {
constexpr int kDraws = 1'000'000;
}

TEST_CASE("exponential sample mean matches the configured mean") {
  RngStream s(99, 1);
  double sum = 0;
  for (int i = 0; i < kDraws; ++i) sum += s.exponential(1.2);
  CHECK(sum / kDraws == doctest::Approx(1.2).epsilon(0.01));
}

TEST_CASE("uniform(0,1) stays in range with mean one half") {
  RngStream s(99, 2);
  double sum = 0;
  for (int i = 0; i < kDraws; ++i) {
    double u = s.uniform(0.0, 1.0);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / kDraws == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("uniform(a,b) respects its half-open interval") {
  RngStream s(5, 3);
  for (int i = 0; i < 10000; ++i) {
    double u = s.uniform(-2.5, 7.25);
    REQUIRE(u >= -2.5);
    REQUIRE(u < 7.25);
  }
}

TEST_CASE("pareto sample mean matches shape*scale/(shape-1)") {
  RngStream s(99, 4);
  double sum = 0;
  for (int i = 0; i < kDraws; ++i) {
    double v = s.pareto(2.5, 1.0);
    REQUIRE(v >= 1.0);
    sum += v;
  }
  // alpha * xm / (alpha - 1) = 2.5 / 1.5
  CHECK(sum / kDraws == doctest::Approx(2.5 / 1.5).epsilon(0.02));
}

TEST_CASE("identical (seed, stream) replays the identical sequence") {
  RngStream a(42, 17), b(42, 17);
  for (int i = 0; i < 1000; ++i) CHECK(a.bits() == b.bits());
}

TEST_CASE("different stream ids decorrelate") {
  RngStream a(42, 1), b(42, 2);
  int same = 0;
  for (int i = 0; i < 1000; ++i)
    if (a.bits() == b.bits()) same++;
  CHECK(same == 0);
}

TEST_CASE("invalid parameters fault at the generator") {
  RngStream s(1, 1);
  CHECK_THROWS_AS(s.exponential(0.0), SimError);
  CHECK_THROWS_AS(s.exponential(-1.0), SimError);
  CHECK_THROWS_AS(s.uniform(2.0, 2.0), SimError);
  CHECK_THROWS_AS(s.pareto(1.0, 1.0), SimError);   // mean undefined
  CHECK_THROWS_AS(s.pareto(2.0, 0.0), SimError);
}
