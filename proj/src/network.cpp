#include "lspsim/network.hpp"

#include <algorithm>
#include <cmath>

namespace lspsim::net {

const char* msgKindName(MsgKind k) {
  switch (k) {
    case MsgKind::Data: return "DATA";
    case MsgKind::PathLabelRequest: return "PATH_LABEL_REQUEST";
    case MsgKind::ResvLabelMapping: return "RESV_LABEL_MAPPING";
    case MsgKind::PathDetour: return "PATH_DETOUR";
    case MsgKind::PathRefresh: return "PATH_REFRESH";
    case MsgKind::ResvRefresh: return "RESV_REFRESH";
    case MsgKind::Hello: return "HELLO";
    case MsgKind::HelloAck: return "HELLO_ACK";
    case MsgKind::Resv: return "RESV";
  }
  return "?";
}

const char* genKindName(GenKind k) {
  switch (k) {
    case GenKind::Cbr: return "cbr";
    case GenKind::Exponential: return "exponential";
    case GenKind::ExpOnOff: return "exp_on_off";
    case GenKind::Pareto: return "pareto";
  }
  return "?";
}

const char* dropCauseName(DropCause c) {
  switch (c) {
    case DropCause::FailureCut: return "failure_cut";
    case DropCause::DownLinkSend: return "down_link_send";
    case DropCause::NoRoute: return "no_route";
    case DropCause::Policer: return "policer";
  }
  return "?";
}

PacketRecord recordDelivery(FlowMetrics& metrics, const Packet& p,
                            double now) {
  PacketRecord rec;
  rec.flow_id = p.flow_id;
  rec.packet_id = p.id;
  rec.created_at = p.created_at;
  rec.arrived_at = now;
  rec.delay = now - p.created_at;
  rec.jitter =
      metrics.last_delay ? std::fabs(rec.delay - *metrics.last_delay) : 0.0;
  metrics.last_delay = rec.delay;
  metrics.received++;
  metrics.delay_sum += rec.delay;
  metrics.delay_max = std::max(metrics.delay_max, rec.delay);
  metrics.jitter_sum += rec.jitter;
  metrics.jitter_max = std::max(metrics.jitter_max, rec.jitter);
  return rec;
}

bool police(Policer& p, int size_bytes, double now) {
  double elapsed = now - p.last_update;
  if (elapsed > 0) {
    p.tokens = std::min(p.bucket_bytes, p.tokens + p.rate_bps * elapsed / 8.0);
    p.last_update = now;
  }
  if (p.tokens >= static_cast<double>(size_bytes)) {
    p.tokens -= static_cast<double>(size_bytes);
    return true;
  }
  return false;
}

Network::Network(Kernel& k, std::uint64_t seed) : k_(k), seed_(seed) {
  counters_.push_back({});        // node ids are 1-based
  static_routes_.push_back({});
}

int Network::createNode() {
  node_count_++;
  counters_.push_back({});
  static_routes_.push_back({});
  return node_count_;
}

void Network::requireNode(int node, const char* op) const {
  if (node < 1 || node > node_count_)
    throw SimError(std::string(op) + ": unknown node " + std::to_string(node));
}

std::pair<int, int> Network::createDuplexLink(int a, int b,
                                              double bandwidth_bps,
                                              double prop_delay_s) {
  requireNode(a, "createDuplexLink");
  requireNode(b, "createDuplexLink");
  if (a == b) throw SimError("createDuplexLink: endpoints must differ");
  if (!(bandwidth_bps > 0))
    throw SimError("createDuplexLink: bandwidth must be > 0");
  if (!(prop_delay_s >= 0))
    throw SimError("createDuplexLink: propagation delay must be >= 0");

  auto makeSimplex = [&](int from, int to) {
    Link l;
    l.id = static_cast<int>(links_.size());
    l.from = from;
    l.to = to;
    l.bandwidth_bps = bandwidth_bps;
    l.prop_delay_s = prop_delay_s;
    std::string tag = std::to_string(from) + "-" + std::to_string(to);
    l.tx = k_.defineFacility("link-" + tag, 1);
    l.medium = k_.defineFacility("medium-" + tag, kMaxMediumServers, true);
    tx_role_[l.tx] = l.id;
    medium_role_[l.medium] = l.id;
    link_index_[{from, to}] = l.id;
    links_.push_back(l);
    return l.id;
  };

  int fwd = makeSimplex(a, b);
  int rev = makeSimplex(b, a);
  links_[fwd].peer = rev;
  links_[rev].peer = fwd;
  return {fwd, rev};
}

void Network::setStaticRoute(int node, int dst, int next_hop) {
  requireNode(node, "setStaticRoute");
  requireNode(dst, "setStaticRoute");
  requireNode(next_hop, "setStaticRoute");
  static_routes_[node][dst] = next_hop;
}

const Link& Network::link(int id) const {
  if (id < 0 || id >= static_cast<int>(links_.size()))
    throw SimError("link: unknown id");
  return links_[id];
}

int Network::linkBetween(int from, int to) const {
  auto it = link_index_.find({from, to});
  return it == link_index_.end() ? -1 : it->second;
}

double Network::txTime(const Link& l, int size_bytes) const {
  return static_cast<double>(size_bytes) * 8.0 / l.bandwidth_bps;
}

int Network::addGenerator(const GeneratorSpec& spec) {
  requireNode(spec.node, "addGenerator");
  requireNode(spec.dst, "addGenerator");
  if (spec.size_bytes <= 0) throw SimError("addGenerator: size must be > 0");
  if (!(spec.rate_bps > 0)) throw SimError("addGenerator: rate must be > 0");
  if (spec.kind == GenKind::ExpOnOff && !(spec.p1 > 0 && spec.p2 > 0))
    throw SimError("addGenerator: on/off means must be > 0");
  if (spec.kind == GenKind::Pareto && !(spec.p1 > 1 && spec.p2 > 0))
    throw SimError("addGenerator: pareto needs shape > 1, scale > 0");
  Generator g;
  g.spec = spec;
  g.interval_rng = RngStream(
      seed_, streams::kGeneratorInterval | static_cast<std::uint64_t>(spec.id));
  g.phase_rng = RngStream(
      seed_, streams::kGeneratorPhase | static_cast<std::uint64_t>(spec.id));
  generator_index_[spec.id] = static_cast<int>(generators_.size());
  generators_.push_back(std::move(g));
  metrics_.try_emplace(spec.id).first->second.flow_id = spec.id;
  return spec.id;
}

Generator& Network::gen(int gen_id) {
  auto it = generator_index_.find(gen_id);
  if (it == generator_index_.end())
    throw SimError("generator: unknown id");
  return generators_[it->second];
}

const Generator& Network::generator(int gen_id) const {
  return const_cast<Network*>(this)->gen(gen_id);
}

void Network::scheduleGeneratorStart(int gen_id) {
  Generator& g = gen(gen_id);
  double delay = g.spec.start - k_.now();
  if (delay < 0) throw SimError("scheduleGeneratorStart: start in the past");
  k_.schedule(kEvGeneratorStart, delay, kNoToken, gen_id);
}

void Network::onGeneratorStart(int gen_id) {
  Generator& g = gen(gen_id);
  if (g.phase == Generator::Phase::Off) {
    g.total_off += k_.now() - g.burst_end;
    g.cycles++;
  }
  if (g.spec.kind == GenKind::ExpOnOff) {
    double on = g.phase_rng.exponential(g.spec.p1);
    g.phase = Generator::Phase::On;
    g.burst_end = k_.now() + on;
    g.total_on += on;
  } else {
    g.phase = Generator::Phase::On;
    g.burst_end = std::numeric_limits<double>::infinity();
  }
  emitPacket(g);
  scheduleNextEmission(g);
}

void Network::emitPacket(Generator& g) {
  Packet p;
  p.size_bytes = g.spec.size_bytes;
  p.src = g.spec.node;
  p.dst = g.spec.dst;
  p.kind = MsgKind::Data;
  p.priority = kPriorityData;
  p.created_at = k_.now();
  p.flow_id = g.spec.id;
  TokenId t = createPacket(std::move(p));
  metrics_[g.spec.id].sent++;
  k_.schedule(kEvTransmitRequest, 0.0, t, g.spec.node, 0);
}

void Network::scheduleNextEmission(Generator& g) {
  double interval = 0;
  switch (g.spec.kind) {
    case GenKind::Cbr:
    case GenKind::ExpOnOff:
      interval = static_cast<double>(g.spec.size_bytes) * 8.0 / g.spec.rate_bps;
      break;
    case GenKind::Exponential:
      interval = g.interval_rng.exponential(
          static_cast<double>(g.spec.size_bytes) * 8.0 / g.spec.rate_bps);
      break;
    case GenKind::Pareto:
      interval = g.interval_rng.pareto(g.spec.p1, g.spec.p2);
      break;
  }
  double next = k_.now() + interval;
  if (next < g.burst_end) {
    k_.schedule(kEvSourceArrival, interval, kNoToken, g.spec.id);
    return;
  }
  // Burst over: go silent and resume with a fresh burst after the off phase.
  double off = g.phase_rng.exponential(g.spec.p2);
  g.phase = Generator::Phase::Off;
  k_.schedule(kEvGeneratorStart, g.burst_end + off - k_.now(), kNoToken,
              g.spec.id);
}

void Network::onSourceArrival(int gen_id) {
  Generator& g = gen(gen_id);
  emitPacket(g);
  scheduleNextEmission(g);
}

void Network::attachFlowPolicer(int flow_id, double rate_bps,
                                double bucket_bytes) {
  Policer p;
  p.rate_bps = rate_bps;
  p.bucket_bytes = bucket_bytes;
  p.tokens = bucket_bytes;  // bucket starts full
  p.last_update = k_.now();
  flow_policers_[flow_id] = p;
}

TokenId Network::createPacket(Packet p) {
  p.id = next_packet_id_++;
  int prio = p.priority;
  return k_.createToken(prio, std::move(p));
}

Packet& Network::packet(TokenId t) {
  return std::any_cast<Packet&>(k_.token(t).payload);
}

const Packet& Network::packet(TokenId t) const {
  return std::any_cast<const Packet&>(k_.token(t).payload);
}

void Network::dropPacket(TokenId t, int node, int link_id, DropCause cause,
                         bool count_at_node) {
  Packet& p = packet(t);
  DropRecord rec;
  rec.time = k_.now();
  rec.link_id = link_id;
  rec.node = node;
  rec.cause = cause;
  rec.kind = p.kind;
  rec.flow_id = p.flow_id;
  rec.packet_id = p.id;
  drops_.push_back(rec);
  metrics_.try_emplace(p.flow_id).first->second.dropped++;
  if (link_id >= 0) {
    Link& l = links_[link_id];
    l.drop_total++;
    if (cause == DropCause::FailureCut) l.drop_at_failure++;
    if (cause == DropCause::DownLinkSend) l.drop_down_send++;
  }
  if (cause == DropCause::NoRoute) no_route_drops_++;
  if (count_at_node) counters_[node].dropped++;
  transit_.erase(t);
  k_.destroyToken(t);
}

void Network::transmitRequest(TokenId t, int node, bool count_at_node) {
  requireNode(node, "transmitRequest");
  Packet& p = packet(t);

  // Entry policing for flows with an attached token bucket.
  if (p.src == node && p.kind == MsgKind::Data) {
    auto pol = flow_policers_.find(p.flow_id);
    if (pol != flow_policers_.end() &&
        !police(pol->second, p.size_bytes, k_.now())) {
      dropPacket(t, node, -1, DropCause::Policer, count_at_node);
      return;
    }
  }

  // Next hop: explicit route, then label switching, then static routes.
  int next_node = -1;
  if (!p.explicit_route.empty()) {
    if (p.route_pos + 1 < static_cast<int>(p.explicit_route.size()) &&
        p.explicit_route[p.route_pos] == node) {
      next_node = p.explicit_route[p.route_pos + 1];
    }
  } else if (label_resolver) {
    if (auto hop = label_resolver(p, node)) {
      next_node = hop->first;
      p.label = hop->second;
    }
  }
  if (next_node < 0) {
    const auto& table = static_routes_[node];
    auto it = table.find(p.dst);
    if (it != table.end()) next_node = it->second;
  }
  int link_id = next_node < 0 ? -1 : linkBetween(node, next_node);
  if (link_id < 0) {
    dropPacket(t, node, -1, DropCause::NoRoute, count_at_node);
    return;
  }

  Link& l = links_[link_id];
  if (!l.up) {
    dropPacket(t, node, link_id, DropCause::DownLinkSend, count_at_node);
    return;
  }
  if (count_at_node) counters_[node].forwarded++;
  if (!p.explicit_route.empty()) p.route_pos++;

  auto out = k_.preempt(l.tx, t, p.priority, txTime(l, p.size_bytes));
  Transit tr;
  tr.link_id = link_id;
  if (out.served) {
    tr.stage = Transit::Stage::Tx;
    tr.server = out.server;
    tr.pending_event = out.release_event;
  } else {
    tr.stage = Transit::Stage::TxQueue;
  }
  transit_[t] = tr;
}

void Network::handleServiceRelease(FacilityId f, int server) {
  if (auto it = tx_role_.find(f); it != tx_role_.end()) {
    int link_id = it->second;
    ReleaseOutcome out = k_.release(f, server);
    if (out.started) {
      Transit& tr = transit_.at(out.started->token);
      tr.stage = Transit::Stage::Tx;
      tr.server = out.started->server;
      tr.pending_event = out.started->release_event;
    }
    Transit& tr = transit_.at(out.completed);
    tr.stage = Transit::Stage::PrePropagate;
    tr.server = -1;
    tr.pending_event =
        k_.schedule(kEvPropagate, 0.0, out.completed, link_id);
    return;
  }
  if (auto it = medium_role_.find(f); it != medium_role_.end()) {
    int link_id = it->second;
    ReleaseOutcome out = k_.release(f, server);
    Transit& tr = transit_.at(out.completed);
    tr.stage = Transit::Stage::PreArrival;
    tr.server = -1;
    tr.pending_event = k_.schedule(kEvNodeArrival, 0.0, out.completed,
                                   links_[link_id].to, link_id);
    return;
  }
  throw SimError("handleServiceRelease: facility has no link role");
}

void Network::propagate(TokenId t, int link_id) {
  Link& l = links_[link_id];
  Packet& p = packet(t);
  auto out = k_.request(l.medium, t, p.priority, l.prop_delay_s);
  Transit& tr = transit_.at(t);
  tr.stage = Transit::Stage::Medium;
  tr.server = out.server;
  tr.pending_event = out.release_event;
}

void Network::nodeArrival(TokenId t, int node, int link_id) {
  requireNode(node, "nodeArrival");
  transit_.erase(t);
  counters_[node].received++;
  Packet& p = packet(t);
  p.route_pos = 0;  // recomputed below for explicit routes
  if (!p.explicit_route.empty()) {
    for (int i = 0; i < static_cast<int>(p.explicit_route.size()); ++i) {
      if (p.explicit_route[i] == node) {
        p.route_pos = i;
        break;
      }
    }
  }
  if (isControl(p.kind)) {
    if (!control_sink) throw SimError("nodeArrival: no control sink");
    control_sink(t, node);
    return;
  }
  if (p.dst == node) {
    counters_[node].delivered++;
    FlowMetrics& m = metrics_.try_emplace(p.flow_id).first->second;
    m.flow_id = p.flow_id;
    records_.push_back(recordDelivery(m, p, k_.now()));
    k_.destroyToken(t);
    return;
  }
  k_.schedule(kEvTransmitRequest, 0.0, t, node, 1);
  (void)link_id;
}

void Network::forwardControl(TokenId t, int node, bool count_at_node) {
  k_.schedule(kEvTransmitRequest, 0.0, t, node, count_at_node ? 1 : 0);
}

void Network::finishControl(TokenId t, int node) {
  requireNode(node, "finishControl");
  counters_[node].delivered++;
  Packet& p = packet(t);
  metrics_.try_emplace(p.flow_id).first->second.received++;
  transit_.erase(t);
  k_.destroyToken(t);
}

void Network::discardControl(TokenId t, int node) {
  requireNode(node, "discardControl");
  Packet& p = packet(t);
  metrics_.try_emplace(p.flow_id).first->second.dropped++;
  counters_[node].dropped++;
  transit_.erase(t);
  k_.destroyToken(t);
}

void Network::failSimplex(int link_id) {
  Link& l = links_[link_id];
  if (!l.up) return;  // failing an already-down link is a no-op
  l.up = false;
  k_.setFacilityUp(l.tx, false);
  k_.setFacilityUp(l.medium, false);
  // Packets in transmission or in the medium are cut at failure time.
  // Queued-but-untransmitted packets are left queued.
  std::vector<TokenId> cut;
  for (const auto& [tok, tr] : transit_) {
    if (tr.link_id != link_id) continue;
    if (tr.stage == Transit::Stage::TxQueue) continue;
    cut.push_back(tok);
  }
  std::sort(cut.begin(), cut.end());
  for (TokenId tok : cut) {
    const Transit tr = transit_.at(tok);
    switch (tr.stage) {
      case Transit::Stage::Tx:
        k_.abortService(l.tx, tr.server);
        break;
      case Transit::Stage::Medium:
        k_.abortService(l.medium, tr.server);
        break;
      case Transit::Stage::PrePropagate:
      case Transit::Stage::PreArrival:
        k_.cancel(tr.pending_event);
        break;
      case Transit::Stage::TxQueue:
        break;
    }
    dropPacket(tok, l.from, link_id, DropCause::FailureCut, false);
  }
}

void Network::restoreSimplex(int link_id) {
  Link& l = links_[link_id];
  if (l.up) return;
  l.up = true;
  k_.setFacilityUp(l.medium, true);
  std::vector<StartedService> started;
  k_.setFacilityUp(l.tx, true, &started);
  for (const auto& st : started) {
    Transit& tr = transit_.at(st.token);
    tr.stage = Transit::Stage::Tx;
    tr.server = st.server;
    tr.pending_event = st.release_event;
  }
}

void Network::failLink(int a, int b) {
  int fwd = linkBetween(a, b);
  if (fwd < 0) throw SimError("failLink: no such link");
  failSimplex(fwd);
  failSimplex(links_[fwd].peer);
}

void Network::restoreLink(int a, int b) {
  int fwd = linkBetween(a, b);
  if (fwd < 0) throw SimError("restoreLink: no such link");
  restoreSimplex(fwd);
  restoreSimplex(links_[fwd].peer);
}

const NodeCounters& Network::counters(int node) const {
  requireNode(node, "counters");
  return counters_[node];
}

FlowMetrics& Network::flow(int flow_id) {
  auto& m = metrics_.try_emplace(flow_id).first->second;
  m.flow_id = flow_id;
  return m;
}

}  // namespace lspsim::net
