// Acceptance suite: drives the bundled case study and the kernel validation
// workloads, printing one pass/fail line per criterion.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lspsim/events.hpp"
#include "lspsim/simulation.hpp"

using namespace lspsim;
using namespace lspsim::scenario;

namespace {

constexpr double kFailAt = 10.029;
constexpr double kPreDelay = 0.052048;    // 5 x (0.010 + 512*8/1e7)
constexpr double kPostDelay = 0.0728672;  // 7 hops on the detour
constexpr double kJitterStep = kPostDelay - kPreDelay;  // 0.0208192
constexpr double kTol = 1e-9;

int g_failures = 0;

void report(int idx, const std::string& name, bool pass,
            const std::string& detail) {
  std::printf("[%s] criterion %2d: %s%s%s\n", pass ? "PASS" : "FAIL", idx,
              name.c_str(), detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!pass) g_failures++;
}

void criterion(int idx, const std::string& name,
               const std::function<std::pair<bool, std::string>()>& fn) {
  try {
    auto [pass, detail] = fn();
    report(idx, name, pass, detail);
  } catch (const std::exception& e) {
    report(idx, name, false, std::string("exception: ") + e.what());
  }
}

std::string caseStudyText() {
  std::string path = std::string(LSPSIM_SCENARIO_DIR) + "/case_study.scn";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SimError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ScenarioConfig loadCaseStudy() {
  auto res = parseScenario(caseStudyText());
  if (!res.ok()) {
    std::string msg = "case_study.scn does not parse:";
    for (const auto& e : res.errors) msg += " [" + e.message + "]";
    throw SimError(msg);
  }
  return *res.config;
}

bool near(double x, double want, double tol = kTol) {
  return std::fabs(x - want) <= tol;
}

double detectionAtNode2(const RunReport& rep) {
  for (const auto& d : rep.detections)
    if (d.node == 2 && d.went_down && d.time > kFailAt) return d.time;
  return -1.0;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  return buf;
}

}  // namespace

int main() {
  ScenarioConfig cfg = loadCaseStudy();
  RunReport base = runSimulation(cfg);
  if (base.signaling_failed) {
    std::printf("[FAIL] case study run aborted: %s\n",
                base.signaling_error.c_str());
    return 1;
  }
  const auto& recs = base.packets;

  criterion(1, "pre-failure steady-state delay 0.052048 s (1e-9)", [&] {
    std::size_t n = 0;
    bool ok = true;
    for (const auto& r : recs) {
      if (r.arrived_at >= kFailAt) continue;
      n++;
      if (!near(r.delay, kPreDelay)) ok = false;
    }
    return std::make_pair(ok && n > 0,
                          std::to_string(n) + " packets before failure");
  });

  criterion(2, "post-recovery steady-state delay 0.0728672 s (1e-9)", [&] {
    // Every delivery sits on one of the two regimes, and once the detour
    // carries a packet the short path never reappears.
    std::size_t post = 0;
    bool seen_post = false, ok = true;
    for (const auto& r : recs) {
      bool pre = near(r.delay, kPreDelay);
      bool det = near(r.delay, kPostDelay);
      if (!pre && !det) ok = false;
      if (det) {
        seen_post = true;
        post++;
      } else if (seen_post) {
        ok = false;
      }
    }
    return std::make_pair(ok && post > 0,
                          std::to_string(post) + " packets via the detour");
  });

  criterion(3, "exactly one nonzero jitter sample, 0.0208192 s (1e-9)", [&] {
    std::size_t nonzero = 0;
    bool value_ok = true;
    for (const auto& r : recs) {
      if (r.jitter > kTol) {
        nonzero++;
        if (!near(r.jitter, kJitterStep)) value_ok = false;
      }
    }
    return std::make_pair(nonzero == 1 && value_ok,
                          std::to_string(nonzero) + " nonzero sample(s)");
  });

  criterion(4, "intra-burst interarrival at node 6 is 0.064 s", [&] {
    std::size_t checked = 0;
    bool ok = true;
    for (std::size_t i = 1; i < recs.size(); ++i) {
      const auto &a = recs[i - 1], &b = recs[i];
      if (!near(b.created_at - a.created_at, 0.064)) continue;  // off gap/loss
      if (!near(a.delay, b.delay, kTol)) continue;  // the recovery step
      checked++;
      if (!near(b.arrived_at - a.arrived_at, 0.064)) ok = false;
    }
    return std::make_pair(ok && checked > 50,
                          std::to_string(checked) + " intra-burst gaps");
  });

  criterion(5, "recovery gap is 0.064 + [0.010, 0.100] s", [&] {
    double t_pre = -1, t_post = -1;
    for (const auto& r : recs) {
      if (near(r.delay, kPreDelay) && r.arrived_at < kFailAt + 0.1)
        t_pre = std::max(t_pre, r.arrived_at);
      if (near(r.delay, kPostDelay) && t_post < 0) t_post = r.arrived_at;
    }
    if (t_pre < 0 || t_post < 0)
      return std::make_pair(false, std::string("missing regime packets"));
    double extra = (t_post - t_pre) - 0.064;
    bool ok = extra >= 0.010 && extra <= 0.100;
    // Interarrivals return to 0.064 within the burst after recovery.
    int settled = 0;
    for (std::size_t i = 1; i < recs.size(); ++i) {
      if (recs[i - 1].arrived_at < t_post) continue;
      if (!near(recs[i].created_at - recs[i - 1].created_at, 0.064)) break;
      if (!near(recs[i].arrived_at - recs[i - 1].arrived_at, 0.064)) ok = false;
      settled++;
    }
    return std::make_pair(ok && settled > 0,
                          "extra delay " + fmt(extra) + " s, " +
                              std::to_string(settled) + " settled gaps");
  });

  criterion(6, "drops on the 2-3 link in [failure, detection] within 1..15",
            [&] {
    bool ok = true;
    std::string detail;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      RunOptions opt;
      opt.seed_override = seed;
      RunReport rep = runSimulation(cfg, opt);
      double detect = detectionAtNode2(rep);
      if (detect < 0) {
        ok = false;
        detail += " s" + std::to_string(seed) + ":no-detection";
        continue;
      }
      std::uint64_t cut = 0;
      for (const auto& d : rep.drops) {
        if (d.cause != net::DropCause::FailureCut) continue;
        if (d.time < kFailAt || d.time > detect) continue;
        cut++;
      }
      if (cut < 1 || cut > 15) ok = false;
      detail += (seed == 1 ? "per-seed: " : " ") + std::to_string(cut);
    }
    return std::make_pair(ok, detail);
  });

  criterion(7, "local repair emits no PATH/RESV signaling", [&] {
    double detect = detectionAtNode2(base);
    if (detect < 0) return std::make_pair(false, std::string("no detection"));
    std::size_t bad = 0;
    for (const auto& c : base.control_creations) {
      if (c.time <= detect || c.time >= 15.0) continue;
      switch (c.kind) {
        case net::MsgKind::PathLabelRequest:
        case net::MsgKind::PathDetour:
        case net::MsgKind::ResvLabelMapping:
        case net::MsgKind::Resv:
          bad++;
          break;
        default:
          break;  // HELLO and scheduled refreshes are excluded
      }
    }
    return std::make_pair(bad == 0,
                          std::to_string(bad) + " signaling messages in (" +
                              fmt(detect) + ", 15)");
  });

  criterion(8, "M/M/1: utilization +-0.01, mean wait +-5% at rho 0.3/0.5/0.8",
            [&] {
    constexpr int kArrive = 100;
    bool ok = true;
    std::string detail;
    for (double rho : {0.3, 0.5, 0.8}) {
      Kernel k;
      FacilityId f = k.defineFacility("mm1", 1);
      RngStream arrivals(4242, 1), services(4242, 2);
      const double mu = 1.0, lambda = rho;
      const std::uint64_t warm = 10'000, target = 1'000'000;
      std::uint64_t completions = 0;
      double busy0 = 0, wait0 = 0, t0 = 0;
      std::uint64_t exits0 = 0;
      k.schedule(kArrive, arrivals.exponential(1 / lambda), k.createToken(0));
      while (completions < warm + target) {
        auto ev = k.cause();
        if (!ev) throw SimError("mm1: drained");
        if (ev->kind == kArrive) {
          k.request(f, ev->token, 0, services.exponential(1 / mu));
          k.schedule(kArrive, arrivals.exponential(1 / lambda),
                     k.createToken(0));
        } else {
          auto rel = k.release(static_cast<FacilityId>(ev->a),
                               static_cast<int>(ev->b));
          k.destroyToken(rel.completed);
          completions++;
          if (completions == warm) {
            busy0 = k.stats(f).busy_time;
            wait0 = k.stats(f).cumulative_wait;
            exits0 = k.stats(f).queue_exits;
            t0 = k.now();
          }
        }
      }
      double span = k.now() - t0;
      double util = (k.stats(f).busy_time - busy0) / span;
      double wait = (k.stats(f).cumulative_wait - wait0) /
                    static_cast<double>(k.stats(f).queue_exits - exits0);
      double want_wait = rho / (mu - lambda);
      bool u_ok = std::fabs(util - rho) <= 0.01;
      bool w_ok = std::fabs(wait - want_wait) <= 0.05 * want_wait;
      if (!u_ok || !w_ok) ok = false;
      char buf[128];
      std::snprintf(buf, sizeof buf, " rho=%.1f util=%.4f wait=%.4f", rho,
                    util, wait);
      detail += buf;
    }
    return std::make_pair(ok, detail);
  });

  criterion(9, "preemption conserves service over 1e4 random tokens (1e-9)",
            [&] {
    constexpr int kArrive = 100;
    Kernel k;
    FacilityId f = k.defineFacility("stress", 1);
    RngStream rng(777, 3);
    std::map<TokenId, double> requested;
    double at = 0;
    for (int i = 0; i < 10'000; ++i) {
      at += rng.exponential(0.6);
      TokenId t = k.createToken(static_cast<int>(rng.uniformInt(1, 8)));
      k.schedule(kArrive, at, t);
    }
    std::uint64_t completed = 0;
    double worst = 0;
    while (auto ev = k.cause()) {
      if (ev->kind == kArrive) {
        double svc = rng.uniform(0.05, 1.5);
        requested[ev->token] = svc;
        k.preempt(f, ev->token, k.token(ev->token).priority, svc);
      } else {
        auto rel = k.release(static_cast<FacilityId>(ev->a),
                             static_cast<int>(ev->b));
        worst = std::max(worst, std::fabs(k.token(rel.completed).total_served -
                                          requested[rel.completed]));
        completed++;
      }
    }
    bool ok = completed == 10'000 && worst <= 1e-9 &&
              k.stats(f).preemptions > 1000;
    return std::make_pair(
        ok, "worst error " + fmt(worst) + " s over " +
                std::to_string(completed) + " tokens, " +
                std::to_string(k.stats(f).preemptions) + " preemptions");
  });

  criterion(10, "same seed reproduces byte-identical csv, summary and trace",
            [&] {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "lspsim_acceptance";
    fs::create_directories(dir);
    auto emitAll = [&](const std::string& tag) {
      RunOptions opt;
      opt.collect_trace = true;
      RunReport rep = runSimulation(cfg, opt);
      emitPacketsCsv(rep, (dir / (tag + ".csv")).string());
      emitSummary(rep, (dir / (tag + ".summary")).string());
      emitTrace(rep, (dir / (tag + ".trace")).string());
    };
    emitAll("a");
    emitAll("b");
    auto same = [&](const std::string& ext) {
      std::ifstream a(dir / ("a" + ext), std::ios::binary);
      std::ifstream b(dir / ("b" + ext), std::ios::binary);
      std::ostringstream sa, sb;
      sa << a.rdbuf();
      sb << b.rdbuf();
      return sa.str() == sb.str() && sa.str().size() > 0;
    };
    bool ok = same(".csv") && same(".summary") && same(".trace");
    fs::remove_all(dir);
    return std::make_pair(ok, std::string(ok ? "identical" : "diverged"));
  });

  criterion(11, "on/off duty cycle 0.60 +- 0.02 over 1e4 cycles", [&] {
    Kernel k;
    net::Network net(k, 2026);
    net.createNode();
    net.createNode();
    net.createDuplexLink(1, 2, 10e6, 0.001);
    net.setStaticRoute(1, 2, 2);
    net::GeneratorSpec g;
    g.id = 1;
    g.kind = net::GenKind::ExpOnOff;
    g.node = 1;
    g.dst = 2;
    g.size_bytes = 512;
    g.rate_bps = 64000;
    g.p1 = 1.2;
    g.p2 = 0.8;
    g.start = 0.0;
    net.addGenerator(g);
    net.scheduleGeneratorStart(1);
    while (net.generator(1).cycles < 10'000) {
      auto ev = k.cause();
      if (!ev) throw SimError("duty: drained");
      switch (ev->kind) {
        case kEvServiceRelease:
          net.handleServiceRelease(static_cast<FacilityId>(ev->a),
                                   static_cast<int>(ev->b));
          break;
        case kEvSourceArrival:
          net.onSourceArrival(static_cast<int>(ev->a));
          break;
        case kEvTransmitRequest:
          net.transmitRequest(ev->token, static_cast<int>(ev->a), ev->b != 0);
          break;
        case kEvPropagate:
          net.propagate(ev->token, static_cast<int>(ev->a));
          break;
        case kEvNodeArrival:
          net.nodeArrival(ev->token, static_cast<int>(ev->a),
                          static_cast<int>(ev->b));
          break;
        case kEvGeneratorStart:
          net.onGeneratorStart(static_cast<int>(ev->a));
          break;
        default:
          throw SimError("duty: unexpected event");
      }
    }
    const auto& gen = net.generator(1);
    double frac = gen.total_on / (gen.total_on + gen.total_off);
    bool ok = std::fabs(frac - 0.60) <= 0.02;
    return std::make_pair(ok, "on fraction " + fmt(frac) + " over " +
                                  std::to_string(gen.cycles) + " cycles");
  });

  std::printf("%d of 11 criteria passed\n", 11 - g_failures);
  return g_failures;
}
