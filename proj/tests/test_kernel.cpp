#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "lspsim/kernel.hpp"
#include "lspsim/rng.hpp"

using namespace lspsim;

namespace {
constexpr int kArrival = 100;  // test-local event kind
}

TEST_CASE("schedule and cause honor time order") {
  Kernel k;
  EventId a = k.schedule(kArrival, 5.0, kNoToken, 1);
  EventId b = k.schedule(kArrival, 3.0, kNoToken, 2);
  CHECK(a != b);
  auto e1 = k.cause();
  REQUIRE(e1.has_value());
  CHECK(e1->a == 2);
  CHECK(k.now() == 3.0);
  auto e2 = k.cause();
  REQUIRE(e2.has_value());
  CHECK(e2->a == 1);
  CHECK(k.now() == 5.0);
}

TEST_CASE("simultaneous events fire in insertion order") {
  Kernel k;
  k.schedule(kArrival, 3.0, kNoToken, 1);
  k.schedule(kArrival, 3.0, kNoToken, 2);
  CHECK(k.cause()->a == 1);
  CHECK(k.cause()->a == 2);
}

TEST_CASE("zero-delay events fire after events already scheduled at now") {
  Kernel k;
  k.schedule(kArrival, 7.0, kNoToken, 1);
  k.cause();
  CHECK(k.now() == 7.0);
  k.schedule(kArrival, 0.0, kNoToken, 2);
  k.schedule(kArrival, 0.0, kNoToken, 3);
  CHECK(k.cause()->a == 2);
  CHECK(k.cause()->a == 3);
  CHECK(k.now() == 7.0);
}

TEST_CASE("empty chain signals end of simulation") {
  Kernel k;
  CHECK_FALSE(k.cause().has_value());
}

TEST_CASE("ten schedules then ten causes empty the chain at the max time") {
  // Hand-traced script: max delay 9.0 is the final clock value.
  Kernel k;
  const double delays[] = {5, 3, 8, 1, 9, 2, 7, 4, 6, 0};
  for (double d : delays) k.schedule(kArrival, d, kNoToken);
  double last = -1;
  int n = 0;
  while (auto ev = k.cause()) {
    CHECK(ev->fire_time >= last);
    last = ev->fire_time;
    n++;
  }
  CHECK(n == 10);
  CHECK(k.now() == 9.0);
  CHECK_FALSE(k.hasPendingEvents());
}

TEST_CASE("schedule rejects bad delays") {
  Kernel k;
  CHECK_THROWS_AS(k.schedule(kArrival, -1.0, kNoToken), SimError);
  CHECK_THROWS_AS(
      k.schedule(kArrival, std::numeric_limits<double>::infinity(), kNoToken),
      SimError);
  CHECK_THROWS_AS(k.schedule(kArrival, std::nan(""), kNoToken), SimError);
}

TEST_CASE("cancel removes an event so it never fires") {
  Kernel k;
  EventId a = k.schedule(kArrival, 2.0, kNoToken, 1);
  k.schedule(kArrival, 2.0, kNoToken, 2);
  CHECK(k.cancel(a));
  auto e = k.cause();
  CHECK(e->a == 2);
  CHECK_FALSE(k.cause().has_value());
}

TEST_CASE("cancel of an unknown or fired event returns false") {
  Kernel k;
  EventId a = k.schedule(kArrival, 1.0, kNoToken);
  CHECK_FALSE(k.cancel(a + 99));
  k.cause();
  CHECK_FALSE(k.cancel(a));
}

TEST_CASE("defineFacility starts free with zeroed stats") {
  Kernel k;
  FacilityId f = k.defineFacility("link-1-2", 1);
  CHECK_FALSE(k.facilityBusy(f));
  CHECK(k.freeServerCount(f) == 1);
  CHECK(k.stats(f).completions == 0);
  CHECK(k.stats(f).busy_time == 0.0);
  CHECK_THROWS_AS(k.defineFacility("bad", 0), SimError);
}

TEST_CASE("request serves a free facility and schedules the release") {
  Kernel k;
  FacilityId f = k.defineFacility("f", 1);
  TokenId t = k.createToken(0);
  auto out = k.request(f, t, 0, 2.0);
  CHECK(out.served);
  auto ev = k.cause();
  REQUIRE(ev.has_value());
  CHECK(ev->kind == kServiceReleaseKind);
  CHECK(ev->fire_time == 2.0);
  auto rel =
      k.release(static_cast<FacilityId>(ev->a), static_cast<int>(ev->b));
  CHECK(rel.completed == t);
  CHECK_FALSE(rel.started.has_value());
  CHECK(k.stats(f).completions == 1);
}

TEST_CASE("queued requests dequeue by priority then FIFO") {
  Kernel k;
  FacilityId f = k.defineFacility("f", 1);
  TokenId busy = k.createToken(0);
  k.request(f, busy, 0, 10.0);
  TokenId lo = k.createToken(1);
  TokenId hi = k.createToken(5);
  TokenId lo2 = k.createToken(1);
  CHECK_FALSE(k.request(f, lo, 1, 1.0).served);
  CHECK_FALSE(k.request(f, hi, 5, 1.0).served);
  CHECK_FALSE(k.request(f, lo2, 1, 1.0).served);
  CHECK(k.queueLength(f) == 3);

  std::vector<TokenId> order;
  while (auto ev = k.cause()) {
    auto rel =
        k.release(static_cast<FacilityId>(ev->a), static_cast<int>(ev->b));
    if (rel.started) order.push_back(rel.started->token);
  }
  REQUIRE(order.size() == 3);
  CHECK(order[0] == hi);
  CHECK(order[1] == lo);  // FIFO among equal priorities
  CHECK(order[2] == lo2);
}

TEST_CASE("preemption slices the victim's service and conserves it") {
  // Victim starts a 3 s service at t=0; a priority-5 request with 1 s of
  // service preempts at t=0.5. The victim accumulates exactly 3 s over its
  // two slices and finishes at 4.5.
  Kernel k;
  FacilityId f = k.defineFacility("f", 1);
  TokenId victim = k.createToken(1);
  k.request(f, victim, 1, 3.0);

  k.schedule(kArrival, 0.5, kNoToken);
  k.cause();
  TokenId urgent = k.createToken(5);
  auto out = k.preempt(f, urgent, 5, 1.0);
  CHECK(out.served);
  CHECK(k.stats(f).preemptions == 1);
  REQUIRE(k.token(victim).service_remaining.has_value());
  CHECK(k.token(victim).service_remaining.value() == doctest::Approx(2.5));

  std::map<TokenId, double> finish;
  while (auto ev = k.cause()) {
    if (ev->kind != kServiceReleaseKind) continue;
    auto rel =
        k.release(static_cast<FacilityId>(ev->a), static_cast<int>(ev->b));
    finish[rel.completed] = k.now();
  }
  CHECK(finish[urgent] == doctest::Approx(1.5));
  CHECK(finish[victim] == doctest::Approx(4.0));  // 0.5 served + 1.0 wait + 2.5
  CHECK(std::fabs(k.token(victim).total_served - 3.0) < 1e-12);
  CHECK(std::fabs(k.token(urgent).total_served - 1.0) < 1e-12);
}

TEST_CASE("equal priority does not preempt") {
  Kernel k;
  FacilityId f = k.defineFacility("f", 1);
  TokenId a = k.createToken(5);
  k.request(f, a, 5, 3.0);
  TokenId b = k.createToken(5);
  auto out = k.preempt(f, b, 5, 1.0);
  CHECK_FALSE(out.served);
  CHECK(k.stats(f).preemptions == 0);
  CHECK(k.queueLength(f) == 1);
}

TEST_CASE("preempt on an empty facility serves immediately") {
  Kernel k;
  FacilityId f = k.defineFacility("f", 1);
  TokenId t = k.createToken(5);
  CHECK(k.preempt(f, t, 5, 1.0).served);
  CHECK(k.stats(f).preemptions == 0);
}

TEST_CASE("a preempted token re-enters ahead of equal-priority waiters") {
  Kernel k;
  FacilityId f = k.defineFacility("f", 1);
  TokenId victim = k.createToken(1);
  k.request(f, victim, 1, 5.0);
  TokenId waiter = k.createToken(1);
  k.request(f, waiter, 1, 1.0);
  TokenId urgent = k.createToken(2);
  CHECK(k.preempt(f, urgent, 2, 1.0).served);

  std::vector<TokenId> starts;
  while (auto ev = k.cause()) {
    auto rel =
        k.release(static_cast<FacilityId>(ev->a), static_cast<int>(ev->b));
    if (rel.started) starts.push_back(rel.started->token);
  }
  REQUIRE(starts.size() == 2);
  CHECK(starts[0] == victim);
  CHECK(starts[1] == waiter);
}

TEST_CASE("victim choice is lowest priority, earliest start; victims FIFO") {
  Kernel k;
  FacilityId f = k.defineFacility("f", 2);
  TokenId a1 = k.createToken(1);
  k.request(f, a1, 1, 10.0);
  k.schedule(kArrival, 0.25, kNoToken);
  k.cause();
  TokenId a2 = k.createToken(1);
  k.request(f, a2, 1, 10.0);

  TokenId c1 = k.createToken(2);
  CHECK(k.preempt(f, c1, 2, 1.0).served);  // victim must be a1 (earlier start)
  CHECK(k.token(a1).service_remaining.has_value());
  CHECK_FALSE(k.token(a2).service_remaining.has_value());

  TokenId c2 = k.createToken(2);
  CHECK(k.preempt(f, c2, 2, 1.0).served);  // now a2
  CHECK(k.token(a2).service_remaining.has_value());

  std::vector<TokenId> starts;
  while (auto ev = k.cause()) {
    auto rel =
        k.release(static_cast<FacilityId>(ev->a), static_cast<int>(ev->b));
    if (rel.started) starts.push_back(rel.started->token);
  }
  // Preempted victims resume in FIFO order.
  REQUIRE(starts.size() == 2);
  CHECK(starts[0] == a1);
  CHECK(starts[1] == a2);
}

TEST_CASE("release on a free server is a fault") {
  Kernel k;
  FacilityId f = k.defineFacility("f", 1);
  CHECK_THROWS_AS(k.release(f, 0), SimError);
}

TEST_CASE("release pulls the queue head with its recorded service time") {
  Kernel k;
  FacilityId f = k.defineFacility("f", 1);
  TokenId a = k.createToken(0);
  k.request(f, a, 0, 1.0);
  TokenId x = k.createToken(0);
  k.request(f, x, 0, 2.0);
  auto ev = k.cause();
  auto rel =
      k.release(static_cast<FacilityId>(ev->a), static_cast<int>(ev->b));
  REQUIRE(rel.started.has_value());
  CHECK(rel.started->token == x);
  auto ev2 = k.cause();
  CHECK(ev2->fire_time == doctest::Approx(3.0));  // 1.0 + recorded 2.0
}

TEST_CASE("a preempted victim resumes for exactly its remaining time") {
  Kernel k;
  FacilityId f = k.defineFacility("f", 1);
  TokenId victim = k.createToken(0);
  k.request(f, victim, 0, 1.0);
  k.schedule(kArrival, 0.3, kNoToken);
  k.cause();
  TokenId urgent = k.createToken(9);
  k.preempt(f, urgent, 9, 0.2);
  CHECK(k.token(victim).service_remaining.value() == doctest::Approx(0.7));
  auto ev = k.cause();  // urgent completes at 0.5
  auto rel =
      k.release(static_cast<FacilityId>(ev->a), static_cast<int>(ev->b));
  REQUIRE(rel.started.has_value());
  CHECK(rel.started->token == victim);
  auto ev2 = k.cause();
  CHECK(ev2->fire_time == doctest::Approx(1.2));  // 0.5 + remaining 0.7
}

TEST_CASE("a down facility enqueues and resumes when brought up") {
  Kernel k;
  FacilityId f = k.defineFacility("f", 1);
  k.setFacilityUp(f, false);
  TokenId t = k.createToken(0);
  CHECK_FALSE(k.request(f, t, 0, 1.0).served);
  CHECK(k.queueLength(f) == 1);
  k.setFacilityUp(f, false);  // down -> down is a no-op
  CHECK(k.queueLength(f) == 1);

  std::vector<StartedService> started;
  k.setFacilityUp(f, true, &started);
  REQUIRE(started.size() == 1);
  CHECK(started[0].token == t);
  CHECK(k.facilityBusy(f));

  std::vector<StartedService> none;
  k.setFacilityUp(f, true, &none);  // up -> up is a no-op
  CHECK(none.empty());
}

TEST_CASE("facility stats views") {
  Kernel k;
  FacilityId f = k.defineFacility("f", 1);
  CHECK(k.utilization(f, 0.0) == 0.0);

  TokenId t = k.createToken(0);
  k.request(f, t, 0, 2.0);
  auto ev = k.cause();
  k.release(static_cast<FacilityId>(ev->a), static_cast<int>(ev->b));
  k.schedule(kArrival, 2.0, kNoToken);
  k.cause();  // clock = 4
  CHECK(k.utilization(f, 4.0) == doctest::Approx(0.5));
  CHECK(k.meanWait(f) == 0.0);
  CHECK(k.stats(f).busy_time <= 4.0 * 1);
}

TEST_CASE("work conservation: free up server plus queued token never rests") {
  Kernel k;
  FacilityId f = k.defineFacility("f", 2);
  RngStream rng(42, 0);
  for (int i = 0; i < 300; ++i) {
    TokenId t = k.createToken(static_cast<int>(rng.uniformInt(0, 3)));
    k.schedule(kArrival, rng.exponential(0.5), t);
  }
  while (auto ev = k.cause()) {
    if (ev->kind == kArrival) {
      k.request(f, ev->token, k.token(ev->token).priority,
                rng.exponential(1.0));
    } else {
      k.release(static_cast<FacilityId>(ev->a), static_cast<int>(ev->b));
    }
    if (k.queueLength(f) > 0) CHECK(k.freeServerCount(f) == 0);
  }
}

TEST_CASE("randomized preemption conserves every token's service time") {
  Kernel k;
  FacilityId f = k.defineFacility("f", 1);
  RngStream rng(7, 1);
  std::map<TokenId, double> requested;
  double at = 0;
  for (int i = 0; i < 500; ++i) {
    at += rng.exponential(0.8);
    TokenId t = k.createToken(static_cast<int>(rng.uniformInt(1, 5)));
    k.schedule(kArrival, at, t);
  }
  int completed = 0;
  while (auto ev = k.cause()) {
    if (ev->kind == kArrival) {
      double svc = rng.uniform(0.1, 2.0);
      requested[ev->token] = svc;
      k.preempt(f, ev->token, k.token(ev->token).priority, svc);
    } else {
      auto rel =
          k.release(static_cast<FacilityId>(ev->a), static_cast<int>(ev->b));
      CHECK(std::fabs(k.token(rel.completed).total_served -
                      requested[rel.completed]) < 1e-12);
      completed++;
    }
  }
  CHECK(completed == 500);
}

TEST_CASE("clock never decreases and replays are identical") {
  auto runScript = [](std::vector<double>* fire_times) {
    Kernel k;
    FacilityId f = k.defineFacility("f", 1);
    RngStream rng(123, 9);
    for (int i = 0; i < 200; ++i) {
      TokenId t = k.createToken(static_cast<int>(rng.uniformInt(1, 4)));
      k.schedule(kArrival, rng.exponential(1.0), t);
    }
    double last = 0;
    while (auto ev = k.cause()) {
      CHECK(ev->fire_time >= last);
      last = ev->fire_time;
      fire_times->push_back(ev->fire_time);
      if (ev->kind == kArrival)
        k.preempt(f, ev->token, k.token(ev->token).priority,
                  rng.uniform(0.05, 0.5));
      else
        k.release(static_cast<FacilityId>(ev->a), static_cast<int>(ev->b));
    }
  };
  std::vector<double> a, b;
  runScript(&a);
  runScript(&b);
  CHECK(a == b);
}

TEST_CASE("M/M/1 smoke: utilization and wait near theory") {
  // rho = 0.5: utilization 0.5, mean queue wait rho/(mu-lambda) = 1.0.
  // The full 1e6-completion check runs in the acceptance suite.
  Kernel k;
  FacilityId f = k.defineFacility("mm1", 1);
  RngStream arrivals(2024, 1), services(2024, 2);
  const double lambda = 0.5, mu = 1.0;
  int completions = 0;
  const int target = 50000;
  k.schedule(kArrival, arrivals.exponential(1 / lambda), k.createToken(0));
  while (completions < target) {
    auto ev = k.cause();
    REQUIRE(ev.has_value());
    if (ev->kind == kArrival) {
      k.request(f, ev->token, 0, services.exponential(1 / mu));
      k.schedule(kArrival, arrivals.exponential(1 / lambda), k.createToken(0));
    } else {
      auto rel =
          k.release(static_cast<FacilityId>(ev->a), static_cast<int>(ev->b));
      k.destroyToken(rel.completed);
      completions++;
    }
  }
  CHECK(k.utilization(f, k.now()) == doctest::Approx(0.5).epsilon(0.05));
  CHECK(k.meanWait(f) == doctest::Approx(1.0).epsilon(0.10));
}

TEST_CASE("infinite-capacity guard faults on queue use") {
  Kernel k;
  FacilityId f = k.defineFacility("medium", 2, true);
  k.request(f, k.createToken(0), 0, 1.0);
  k.request(f, k.createToken(0), 0, 1.0);
  CHECK_THROWS_AS(k.request(f, k.createToken(0), 0, 1.0), SimError);
}
