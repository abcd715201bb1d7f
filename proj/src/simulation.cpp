#include "lspsim/simulation.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "lspsim/events.hpp"

namespace lspsim {

const char* eventKindName(int kind) {
  switch (kind) {
    case kEvServiceRelease: return "service_release";
    case kEvSourceArrival: return "source_arrival";
    case kEvTransmitRequest: return "transmit_request";
    case kEvPropagate: return "propagate";
    case kEvNodeArrival: return "node_arrival";
    case kEvControlArrival: return "control_arrival";
    case kEvLspRefresh: return "refresh_lsp_states";
    case kEvHelloTimer: return "generate_hello";
    case kEvTimeoutSweep: return "timeout_trigger";
    case kEvGeneratorStart: return "start_generator";
    case kEvEndOfRun: return "end_simulation";
    case kEvLinkFail: return "link_fail";
    case kEvLinkRestore: return "link_restore";
  }
  return nullptr;
}

}  // namespace lspsim

namespace lspsim::scenario {

namespace {

std::string fixed9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  return buf;
}

// Owns one run: topology build, initial event schedule, and the dispatch
// loop over the event taxonomy.
class Simulation {
 public:
  Simulation(const ScenarioConfig& cfg, const RunOptions& opt)
      : cfg_(cfg),
        opt_(opt),
        seed_(opt.seed_override.value_or(cfg.seed)),
        net_(kernel_, seed_),
        mpls_(kernel_, net_, cfg.timers, seed_) {}

  RunReport run() {
    auto t0 = std::chrono::steady_clock::now();
    build();
    loop();
    RunReport rep = collect();
    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return rep;
  }

 private:
  void build() {
    for (int i = 0; i < cfg_.node_count; ++i) net_.createNode();
    for (const LinkSpec& l : cfg_.links)
      net_.createDuplexLink(l.a, l.b, l.bandwidth_bps, l.prop_delay_s);
    for (const RouteSpec& r : cfg_.routes)
      net_.setStaticRoute(r.node, r.dst, r.next_hop);
    for (const net::GeneratorSpec& g : cfg_.generators) {
      net_.addGenerator(g);
      net_.scheduleGeneratorStart(g.id);
    }

    net_.label_resolver = [this](net::Packet& p, int node) {
      return mpls_.resolveLabel(p, node);
    };
    net_.control_sink = [this](TokenId t, int node) {
      mpls_.processControlMessage(t, node, true);
    };
    mpls_.on_lsp_up = [this](int lsp_id) { onLspUp(lsp_id); };
    mpls_.on_lsp_failed = [this](int lsp_id, const std::string& reason) {
      onLspFailed(lsp_id, reason);
    };

    kernel_.schedule(kEvEndOfRun, cfg_.sim_end, kNoToken);
    for (const FailureSpec& f : cfg_.failures) {
      kernel_.schedule(kEvLinkFail, f.fail_at, kNoToken, f.a, f.b);
      if (f.restore_at)
        kernel_.schedule(kEvLinkRestore, *f.restore_at, kNoToken, f.a, f.b);
    }
    mpls_.startTimers();
    // Primary LSPs signal at t = 0; each backup signals once its protected
    // LSP comes up.
    for (const LspSpec& s : cfg_.lsps) {
      mpls_.setLsp(s.id, s.ingress, s.egress, s.route, s.bandwidth_req,
                   s.optional_ok);
    }
  }

  void onLspUp(int lsp_id) {
    const mpls::Lsp& l = mpls_.lsp(lsp_id);
    if (l.kind == mpls::LspKind::Primary) {
      for (const BackupSpec& b : cfg_.backups)
        if (b.protects == lsp_id)
          mpls_.setBackupLsp(b.id, b.protects, b.merge_start, b.merge_end,
                             b.route);
    }
  }

  void onLspFailed(int lsp_id, const std::string& reason) {
    const mpls::Lsp& l = mpls_.lsp(lsp_id);
    if (l.kind == mpls::LspKind::Backup || l.optional_ok) return;
    aborted_ = true;
    abort_reason_ =
        "lsp " + std::to_string(lsp_id) + " failed to establish: " + reason;
  }

  void loop() {
    while (auto ev = kernel_.cause()) {
      if (opt_.collect_trace) {
        std::ostringstream line;
        line << ev->seq << " " << fixed9(ev->fire_time) << " "
             << eventKindName(ev->kind) << " token=" << ev->token
             << " a=" << ev->a << " b=" << ev->b;
        trace_.push_back(line.str());
      }
      dispatch(*ev);
      if (stop_ || aborted_) break;
    }
  }

  void dispatch(const Event& ev) {
    switch (ev.kind) {
      case kEvServiceRelease:
        net_.handleServiceRelease(static_cast<FacilityId>(ev.a),
                                  static_cast<int>(ev.b));
        break;
      case kEvSourceArrival:
        net_.onSourceArrival(static_cast<int>(ev.a));
        break;
      case kEvTransmitRequest:
        net_.transmitRequest(ev.token, static_cast<int>(ev.a), ev.b != 0);
        break;
      case kEvPropagate:
        net_.propagate(ev.token, static_cast<int>(ev.a));
        break;
      case kEvNodeArrival:
        net_.nodeArrival(ev.token, static_cast<int>(ev.a),
                         static_cast<int>(ev.b));
        break;
      case kEvControlArrival:
        mpls_.processControlMessage(ev.token, static_cast<int>(ev.a), false);
        break;
      case kEvLspRefresh:
        mpls_.onRefreshEvent(static_cast<int>(ev.a));
        break;
      case kEvHelloTimer:
        mpls_.onHelloEvent(static_cast<int>(ev.a));
        break;
      case kEvTimeoutSweep:
        mpls_.onSweep();
        break;
      case kEvGeneratorStart:
        net_.onGeneratorStart(static_cast<int>(ev.a));
        break;
      case kEvEndOfRun:
        stop_ = true;
        break;
      case kEvLinkFail:
        net_.failLink(static_cast<int>(ev.a), static_cast<int>(ev.b));
        break;
      case kEvLinkRestore:
        net_.restoreLink(static_cast<int>(ev.a), static_cast<int>(ev.b));
        break;
      default:
        throw SimError("dispatch: unknown event kind " +
                       std::to_string(ev.kind));
    }
  }

  RunReport collect() {
    RunReport rep;
    rep.seed = seed_;
    rep.sim_end = cfg_.sim_end;
    rep.signaling_failed = aborted_;
    rep.signaling_error = abort_reason_;
    for (const auto& [id, m] : net_.flows()) {
      FlowSummary fs;
      fs.flow_id = id;
      fs.sent = m.sent;
      fs.received = m.received;
      fs.dropped = m.dropped;
      if (m.received > 0) {
        fs.mean_delay = m.delay_sum / static_cast<double>(m.received);
        fs.mean_jitter = m.jitter_sum / static_cast<double>(m.received);
      }
      fs.max_delay = m.delay_max;
      fs.max_jitter = m.jitter_max;
      rep.flows.push_back(fs);
    }
    rep.packets = net_.packetRecords();
    rep.drops = net_.dropRecords();
    for (const net::Link& l : net_.links()) {
      LinkDropSummary ls;
      ls.from = l.from;
      ls.to = l.to;
      ls.total = l.drop_total;
      ls.at_failure = l.drop_at_failure;
      ls.down_send = l.drop_down_send;
      rep.link_drops.push_back(ls);
    }
    for (const mpls::ControlCreation& c : mpls_.controlCreations())
      rep.control_created[c.kind]++;
    rep.control_creations = mpls_.controlCreations();
    rep.detections = mpls_.detections();
    rep.splices = mpls_.splices();
    for (const auto& [id, l] : mpls_.lsps()) {
      LspFinal lf;
      lf.lsp_id = id;
      lf.kind = l.kind == mpls::LspKind::Primary ? "primary" : "backup";
      lf.state = mpls::lspStateName(l.state);
      lf.spliced_via = l.spliced_via;
      rep.lsps.push_back(lf);
    }
    rep.no_route_drops = net_.noRouteDrops();
    rep.in_flight_at_end = net_.inFlightCount();
    rep.trace = std::move(trace_);
    return rep;
  }

  const ScenarioConfig& cfg_;
  RunOptions opt_;
  std::uint64_t seed_;
  Kernel kernel_;
  net::Network net_;
  mpls::Control mpls_;
  bool stop_ = false;
  bool aborted_ = false;
  std::string abort_reason_;
  std::vector<std::string> trace_;
};

template <typename Fn>
void toFile(const std::string& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SimError("cannot write '" + path + "'");
  fn(out);
  out.flush();
  if (!out) throw SimError("write failed for '" + path + "'");
}

}  // namespace

RunReport runSimulation(const ScenarioConfig& cfg, const RunOptions& opt) {
  Simulation sim(cfg, opt);
  return sim.run();
}

void emitPacketsCsv(const RunReport& report, std::ostream& out) {
  out << "flow_id,packet_id,created_at,arrived_at,delay,jitter\n";
  for (const net::PacketRecord& r : report.packets) {
    out << r.flow_id << "," << r.packet_id << "," << fixed9(r.created_at)
        << "," << fixed9(r.arrived_at) << "," << fixed9(r.delay) << ","
        << fixed9(r.jitter) << "\n";
  }
}

void emitSummary(const RunReport& report, std::ostream& out) {
  out << "seed " << report.seed << "\n";
  out << "sim_end " << fixed9(report.sim_end) << "\n";
  out << "signaling_failed " << (report.signaling_failed ? 1 : 0) << "\n";
  if (report.signaling_failed)
    out << "signaling_error " << report.signaling_error << "\n";
  for (const FlowSummary& f : report.flows) {
    std::string p = "flow." + std::to_string(f.flow_id) + ".";
    out << p << "sent " << f.sent << "\n";
    out << p << "received " << f.received << "\n";
    out << p << "dropped " << f.dropped << "\n";
    out << p << "mean_delay " << fixed9(f.mean_delay) << "\n";
    out << p << "max_delay " << fixed9(f.max_delay) << "\n";
    out << p << "mean_jitter " << fixed9(f.mean_jitter) << "\n";
    out << p << "max_jitter " << fixed9(f.max_jitter) << "\n";
  }
  for (const LinkDropSummary& l : report.link_drops) {
    std::string p =
        "link." + std::to_string(l.from) + "-" + std::to_string(l.to) + ".";
    out << p << "drops " << l.total << "\n";
    out << p << "drops_at_failure " << l.at_failure << "\n";
    out << p << "drops_down_send " << l.down_send << "\n";
  }
  for (net::MsgKind k : net::kAllMsgKinds) {
    if (k == net::MsgKind::Data) continue;
    auto it = report.control_created.find(k);
    out << "control.created." << net::msgKindName(k) << " "
        << (it == report.control_created.end() ? 0 : it->second) << "\n";
  }
  for (const LspFinal& l : report.lsps) {
    std::string p = "lsp." + std::to_string(l.lsp_id) + ".";
    out << p << "kind " << l.kind << "\n";
    out << p << "state " << l.state << "\n";
    if (l.spliced_via >= 0) out << p << "spliced_via " << l.spliced_via << "\n";
  }
  out << "detections " << report.detections.size() << "\n";
  for (std::size_t i = 0; i < report.detections.size(); ++i) {
    const mpls::DetectionRecord& d = report.detections[i];
    out << "detection." << i + 1 << " time " << fixed9(d.time) << " node "
        << d.node << " " << (d.went_down ? "down" : "up") << "\n";
  }
  out << "splices " << report.splices.size() << "\n";
  for (std::size_t i = 0; i < report.splices.size(); ++i) {
    const mpls::SpliceRecord& s = report.splices[i];
    out << "splice." << i + 1 << " time " << fixed9(s.time) << " node "
        << s.node << " lsp " << s.lsp_id << " via " << s.backup_id << "\n";
  }
  out << "no_route_drops " << report.no_route_drops << "\n";
  out << "in_flight_at_end " << report.in_flight_at_end << "\n";
}

void emitTrace(const RunReport& report, std::ostream& out) {
  for (const std::string& line : report.trace) out << line << "\n";
}

void emitPacketsCsv(const RunReport& report, const std::string& path) {
  toFile(path, [&](std::ostream& out) { emitPacketsCsv(report, out); });
}

void emitSummary(const RunReport& report, const std::string& path) {
  toFile(path, [&](std::ostream& out) { emitSummary(report, out); });
}

void emitTrace(const RunReport& report, const std::string& path) {
  toFile(path, [&](std::ostream& out) { emitTrace(report, out); });
}

}  // namespace lspsim::scenario
