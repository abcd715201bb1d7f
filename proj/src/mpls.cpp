#include "lspsim/mpls.hpp"

#include <algorithm>

namespace lspsim::mpls {

namespace {

int routePosition(const std::vector<int>& route, int node) {
  for (int i = 0; i < static_cast<int>(route.size()); ++i)
    if (route[i] == node) return i;
  return -1;
}

bool simpleRoute(const std::vector<int>& route) {
  std::vector<int> sorted = route;
  std::sort(sorted.begin(), sorted.end());
  return std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
}

}  // namespace

const char* lspStateName(LspState s) {
  switch (s) {
    case LspState::Signaling: return "SIGNALING";
    case LspState::Up: return "UP";
    case LspState::TimedOut: return "TIMED_OUT";
    case LspState::TornDown: return "TORN_DOWN";
  }
  return "?";
}

Control::Control(Kernel& k, net::Network& net, Timers timers,
                 std::uint64_t seed)
    : k_(k), net_(net), timers_(timers), seed_(seed) {}

std::uint32_t Control::allocateLabel(int node) {
  auto [it, fresh] = next_label_.try_emplace(node, 16u);
  return it->second++;
}

Lsp& Control::lspMut(int id) {
  auto it = lsps_.find(id);
  if (it == lsps_.end()) throw SimError("lsp: unknown id");
  return it->second;
}

const Lsp& Control::lsp(int id) const {
  auto it = lsps_.find(id);
  if (it == lsps_.end()) throw SimError("lsp: unknown id");
  return it->second;
}

TokenId Control::makeControl(net::MsgKind kind, int size_bytes, int src,
                             std::vector<int> route, int lsp_id,
                             std::optional<std::uint32_t> label) {
  net::Packet p;
  p.size_bytes = size_bytes;
  p.src = src;
  p.dst = route.back();
  p.kind = kind;
  p.msg_id = next_msg_id_++;
  p.explicit_route = std::move(route);
  p.label = label;
  if (lsp_id >= 0) p.lsp_id = lsp_id;
  p.priority = net::kPriorityControl;
  p.created_at = k_.now();
  p.flow_id = net::kControlFlow;
  creations_.push_back({k_.now(), kind, lsp_id});
  net_.flow(net::kControlFlow).sent++;
  return net_.createPacket(std::move(p));
}

void Control::inject(TokenId t, int node) {
  k_.schedule(kEvControlArrival, 0.0, t, node);
}

int Control::setLsp(int lsp_id, int ingress, int egress,
                    std::vector<int> route, double bandwidth_req,
                    bool optional_ok) {
  if (route.size() < 2 || route.front() != ingress || route.back() != egress)
    throw SimError("setLsp: route must run from ingress to egress");
  if (!simpleRoute(route)) throw SimError("setLsp: route repeats a node");
  if (bandwidth_req < 0) throw SimError("setLsp: negative bandwidth");
  for (std::size_t i = 0; i + 1 < route.size(); ++i)
    if (net_.linkBetween(route[i], route[i + 1]) < 0)
      throw SimError("setLsp: route hop " + std::to_string(route[i]) + "->" +
                     std::to_string(route[i + 1]) + " has no link");
  if (lsps_.count(lsp_id)) throw SimError("setLsp: duplicate lsp id");

  Lsp l;
  l.lsp_id = lsp_id;
  l.kind = LspKind::Primary;
  l.ingress = ingress;
  l.egress = egress;
  l.route = route;
  l.bandwidth_req = bandwidth_req;
  l.optional_ok = optional_ok;
  lsps_.emplace(lsp_id, std::move(l));
  refresh_rngs_.emplace(
      lsp_id, RngStream(seed_, streams::kRefreshJitter |
                                   static_cast<std::uint64_t>(lsp_id)));
  TokenId t = makeControl(net::MsgKind::PathLabelRequest,
                          timers_.path_msg_size, ingress, route, lsp_id,
                          std::nullopt);
  inject(t, ingress);
  return lsp_id;
}

int Control::setBackupLsp(int lsp_id, int protects, int merge_start,
                          int merge_end, std::vector<int> route) {
  const Lsp& prim = lsp(protects);
  if (prim.kind != LspKind::Primary)
    throw SimError("setBackupLsp: protected LSP is not primary");
  if (prim.state != LspState::Up)
    throw SimError("setBackupLsp: protected LSP is not up");
  if (routePosition(prim.route, merge_start) < 0 ||
      routePosition(prim.route, merge_end) < 0)
    throw SimError("setBackupLsp: merge points must lie on the primary route");
  if (route.size() < 2 || route.front() != merge_start ||
      route.back() != merge_end)
    throw SimError("setBackupLsp: route must run merge_start to merge_end");
  if (!simpleRoute(route)) throw SimError("setBackupLsp: route repeats a node");
  for (std::size_t i = 0; i + 1 < route.size(); ++i)
    if (net_.linkBetween(route[i], route[i + 1]) < 0)
      throw SimError("setBackupLsp: route hop " + std::to_string(route[i]) +
                     "->" + std::to_string(route[i + 1]) + " has no link");
  if (lsps_.count(lsp_id)) throw SimError("setBackupLsp: duplicate lsp id");

  Lsp l;
  l.lsp_id = lsp_id;
  l.kind = LspKind::Backup;
  l.ingress = merge_start;
  l.egress = merge_end;
  l.route = route;
  l.bandwidth_req = prim.bandwidth_req;
  l.protects = protects;
  l.merge_start = merge_start;
  l.merge_end = merge_end;
  lsps_.emplace(lsp_id, std::move(l));
  refresh_rngs_.emplace(
      lsp_id, RngStream(seed_, streams::kRefreshJitter |
                                   static_cast<std::uint64_t>(lsp_id)));
  TokenId t = makeControl(net::MsgKind::PathDetour, timers_.path_msg_size,
                          merge_start, route, lsp_id, std::nullopt);
  inject(t, merge_start);
  return lsp_id;
}

void Control::startTimers() {
  for (const net::Link& l : net_.links()) {
    HelloAdjacency adj;
    adj.local = l.from;
    adj.neighbor = l.to;
    adj.link_id = l.id;
    adj.phase = RngStream(seed_, streams::kHelloPhase |
                                     static_cast<std::uint64_t>(l.id))
                    .uniform(0.0, timers_.hello_interval);
    adj_index_[{adj.local, adj.neighbor}] =
        static_cast<int>(adjacencies_.size());
    k_.schedule(kEvHelloTimer, adj.phase, kNoToken,
                static_cast<std::int64_t>(adjacencies_.size()));
    adjacencies_.push_back(adj);
  }
  k_.schedule(kEvTimeoutSweep, timers_.sweep_interval, kNoToken);
}

void Control::processControlMessage(TokenId t, int node, bool entered) {
  net::Packet& p = net_.packet(t);
  switch (p.kind) {
    case net::MsgKind::Hello: {
      if (!entered) {
        net_.forwardControl(t, node, false);
        return;
      }
      TokenId ack = makeControl(net::MsgKind::HelloAck, timers_.hello_msg_size,
                                node, {node, p.src}, -1, std::nullopt);
      inject(ack, node);
      net_.finishControl(t, node);
      return;
    }
    case net::MsgKind::HelloAck: {
      if (!entered) {
        net_.forwardControl(t, node, false);
        return;
      }
      auto it = adj_index_.find({node, p.src});
      if (it != adj_index_.end()) {
        HelloAdjacency& adj = adjacencies_[it->second];
        adj.last_ack_at = k_.now();
        adj.pending_since.reset();
      }
      net_.finishControl(t, node);
      return;
    }
    case net::MsgKind::PathLabelRequest:
    case net::MsgKind::PathDetour:
      handlePathMessage(t, node, p);
      return;
    case net::MsgKind::ResvLabelMapping:
    case net::MsgKind::Resv:
      if (!entered) {
        net_.forwardControl(t, node, false);
        return;
      }
      handleResvMessage(t, node, p);
      return;
    case net::MsgKind::PathRefresh:
    case net::MsgKind::ResvRefresh:
      handleRefreshMessage(t, node, p, entered);
      return;
    case net::MsgKind::Data:
      throw SimError("processControlMessage: data packet");
  }
}

void Control::rejectLsp(Lsp& l, int upto_route_pos, const std::string& reason,
                        TokenId t, int node) {
  const std::vector<int>& route = l.route;
  for (int i = 0; i < upto_route_pos; ++i) {
    int link = net_.linkBetween(route[i], route[i + 1]);
    if (link >= 0) ledgers_[link].by_lsp.erase(l.lsp_id);
  }
  l.state = LspState::TornDown;
  if (on_lsp_failed) on_lsp_failed(l.lsp_id, reason);
  net_.discardControl(t, node);
}

void Control::handlePathMessage(TokenId t, int node, net::Packet& p) {
  auto it = p.lsp_id ? lsps_.find(*p.lsp_id) : lsps_.end();
  if (it == lsps_.end()) {
    stale_msgs_++;
    net_.discardControl(t, node);
    return;
  }
  Lsp& l = it->second;
  const std::vector<int>& route = p.explicit_route;
  int pos = routePosition(route, node);
  if (pos < 0) throw SimError("path message off its route");

  if (pos + 1 == static_cast<int>(route.size())) {
    // Route end: install the terminal mapping and send the confirm back.
    std::uint32_t in = allocateLabel(node);
    LibEntry e;
    e.node = node;
    e.in_label = in;
    e.prev_node = route[pos - 1];
    e.lsp_id = l.lsp_id;
    bool merges_mid_route =
        l.kind == LspKind::Backup && node != lsp(l.protects).egress;
    if (merges_mid_route) {
      // Map the detour onto the protected LSP's forwarding at the merge point.
      const LibEntry* prim = nullptr;
      auto lo = lib_.lower_bound({node, 0});
      for (; lo != lib_.end() && lo->first.first == node; ++lo)
        if (lo->second.lsp_id == l.protects) prim = &lo->second;
      if (!prim) throw SimError("detour merge: protected LSP has no entry");
      e.out_label = prim->out_label;
      e.next_node = prim->next_node;
    } else {
      e.out_label = std::nullopt;  // egress pop
      e.next_node = node;
    }
    lib_.emplace(std::make_pair(node, in), e);
    net::MsgKind confirm = l.kind == LspKind::Primary
                               ? net::MsgKind::ResvLabelMapping
                               : net::MsgKind::Resv;
    std::vector<int> back(route.rbegin(), route.rend());
    TokenId r = makeControl(confirm, timers_.path_msg_size, node,
                            std::move(back), l.lsp_id, in);
    inject(r, node);
    net_.finishControl(t, node);
    return;
  }

  // Transit (or origin) hop: admission check and tentative reservation on
  // the downstream link, then keep going.
  int next = route[pos + 1];
  int link = net_.linkBetween(node, next);
  if (link < 0) throw SimError("path message: missing link");
  LinkLedger& led = ledgers_[link];
  bool shared = l.kind == LspKind::Backup && led.by_lsp.count(l.protects) > 0;
  double need = shared ? 0.0 : l.bandwidth_req;
  if (need > 0 &&
      led.totalReserved() + need > net_.link(link).bandwidth_bps) {
    rejectLsp(l, pos,
              "admission failed on link " + std::to_string(node) + "->" +
                  std::to_string(next),
              t, node);
    return;
  }
  Reservation r;
  r.bits = need;
  r.tentative = true;
  r.shared_with_primary = shared;
  r.made_at = k_.now();
  led.by_lsp[l.lsp_id] = r;
  net_.forwardControl(t, node, pos != 0);
}

void Control::handleResvMessage(TokenId t, int node, net::Packet& p) {
  auto it = p.lsp_id ? lsps_.find(*p.lsp_id) : lsps_.end();
  if (it == lsps_.end()) {
    stale_msgs_++;
    net_.discardControl(t, node);
    return;
  }
  Lsp& l = it->second;
  if (!p.label) throw SimError("confirm message without a label mapping");
  int pos = routePosition(l.route, node);
  if (pos < 0 || pos + 1 >= static_cast<int>(l.route.size()))
    throw SimError("confirm message off its route");

  // Confirm the reservation on this node's downstream link.
  int link = net_.linkBetween(node, l.route[pos + 1]);
  auto res = ledgers_[link].by_lsp.find(l.lsp_id);
  if (res != ledgers_[link].by_lsp.end()) res->second.tentative = false;

  if (pos > 0) {
    std::uint32_t in = allocateLabel(node);
    LibEntry e;
    e.node = node;
    e.in_label = in;
    e.prev_node = l.route[pos - 1];
    e.out_label = p.label;
    e.next_node = l.route[pos + 1];
    e.lsp_id = l.lsp_id;
    lib_.emplace(std::make_pair(node, in), e);
    p.label = in;
    net_.forwardControl(t, node, true);
    return;
  }

  // Mapping reached the ingress (primary) or merge start (backup).
  if (l.kind == LspKind::Primary) {
    LibEntry e;
    e.node = node;
    e.out_label = p.label;
    e.next_node = l.route[1];
    e.lsp_id = l.lsp_id;
    push_entries_[{node, l.lsp_id}] = e;
  } else {
    l.head_out_label = p.label;
    l.head_next = l.route[1];
  }
  l.state = LspState::Up;
  for (int n : l.route) l.last_refresh_at[n] = k_.now();
  double first = refresh_rngs_.at(l.lsp_id).uniform(0.5, 1.5) *
                 timers_.refresh_period;
  k_.schedule(kEvLspRefresh, first, kNoToken, l.lsp_id);
  if (on_lsp_up) on_lsp_up(l.lsp_id);
  net_.finishControl(t, node);
}

void Control::handleRefreshMessage(TokenId t, int node, net::Packet& p,
                                   bool entered) {
  auto it = p.lsp_id ? lsps_.find(*p.lsp_id) : lsps_.end();
  if (it == lsps_.end()) {
    stale_msgs_++;
    net_.discardControl(t, node);
    return;
  }
  Lsp& l = it->second;
  l.last_refresh_at[node] = k_.now();
  const std::vector<int>& route = p.explicit_route;
  int pos = routePosition(route, node);
  if (pos + 1 < static_cast<int>(route.size())) {
    net_.forwardControl(t, node, entered);
    return;
  }
  if (p.kind == net::MsgKind::PathRefresh) {
    std::vector<int> back(route.rbegin(), route.rend());
    TokenId r = makeControl(net::MsgKind::ResvRefresh, timers_.path_msg_size,
                            node, std::move(back), l.lsp_id, std::nullopt);
    inject(r, node);
  }
  net_.finishControl(t, node);
}

void Control::onRefreshEvent(int lsp_id) {
  auto it = lsps_.find(lsp_id);
  if (it == lsps_.end()) return;
  Lsp& l = it->second;
  if (l.state != LspState::Up) return;
  TokenId t = makeControl(net::MsgKind::PathRefresh, timers_.path_msg_size,
                          l.route.front(), l.route, lsp_id, std::nullopt);
  inject(t, l.route.front());
  double gap =
      refresh_rngs_.at(lsp_id).uniform(0.5, 1.5) * timers_.refresh_period;
  k_.schedule(kEvLspRefresh, gap, kNoToken, lsp_id);
}

void Control::onHelloEvent(int adjacency_index) {
  HelloAdjacency& adj = adjacencies_.at(adjacency_index);
  k_.schedule(kEvHelloTimer, timers_.hello_interval, kNoToken,
              adjacency_index);
  if (!adj.pending_since) adj.pending_since = k_.now();
  TokenId t = makeControl(net::MsgKind::Hello, timers_.hello_msg_size,
                          adj.local, {adj.local, adj.neighbor}, -1,
                          std::nullopt);
  inject(t, adj.local);
}

void Control::onSweep() {
  double now = k_.now();
  k_.schedule(kEvTimeoutSweep, timers_.sweep_interval, kNoToken);

  for (HelloAdjacency& adj : adjacencies_) {
    // Detection needs an established exchange: with a 10 ms medium the first
    // ACK lands ~20 ms after startup, past the 17.5 ms timeout, so an
    // un-acked adjacency must not count as failed yet.
    if (!adj.last_ack_at) continue;
    bool stale = now - *adj.last_ack_at > timers_.hello_ack_timeout;
    if (adj.alive && stale && adj.pending_since) {
      adj.alive = false;
      detections_.push_back({now, adj.local, adj.link_id, true});
      fastReroute(adj.local, adj.link_id);
    } else if (!adj.alive && !stale) {
      adj.alive = true;
      detections_.push_back({now, adj.local, adj.link_id, false});
    }
  }

  for (auto& [id, l] : lsps_) {
    if (l.state != LspState::Up) continue;
    for (const auto& [n, at] : l.last_refresh_at) {
      if (now - at > timers_.state_timeout) {
        l.state = LspState::TimedOut;
        releaseReservations(id);
        break;
      }
    }
  }

  // Tentative reservations that were never confirmed expire with the state
  // timeout.
  for (auto& [link, led] : ledgers_) {
    for (auto it = led.by_lsp.begin(); it != led.by_lsp.end();) {
      if (it->second.tentative &&
          now - it->second.made_at > timers_.state_timeout) {
        int lsp_id = it->first;
        it = led.by_lsp.erase(it);
        auto lt = lsps_.find(lsp_id);
        if (lt != lsps_.end() && lt->second.state == LspState::Signaling) {
          lt->second.state = LspState::TornDown;
          if (on_lsp_failed)
            on_lsp_failed(lsp_id, "signaling timed out");
        }
      } else {
        ++it;
      }
    }
  }
}

int Control::fastReroute(int node, int link_id) {
  int spliced = 0;
  int to = net_.link(link_id).to;
  for (auto& [id, l] : lsps_) {
    if (l.kind != LspKind::Primary || l.state != LspState::Up) continue;
    LibEntry* entry = nullptr;
    if (auto pe = push_entries_.find({node, id}); pe != push_entries_.end()) {
      entry = &pe->second;
    } else {
      auto lo = lib_.lower_bound({node, 0});
      for (; lo != lib_.end() && lo->first.first == node; ++lo)
        if (lo->second.lsp_id == id) entry = &lo->second;
    }
    if (!entry || entry->next_node != to ||
        net_.linkBetween(node, entry->next_node) != link_id)
      continue;
    const Lsp* backup = nullptr;
    for (const auto& [bid, b] : lsps_) {
      if (b.kind == LspKind::Backup && b.protects == id &&
          b.merge_start == node && b.state == LspState::Up) {
        backup = &b;
        break;
      }
    }
    if (!backup) {
      unprotected_++;
      continue;
    }
    entry->out_label = backup->head_out_label;
    entry->next_node = backup->head_next;
    l.spliced_via = backup->lsp_id;
    splices_.push_back({k_.now(), node, id, backup->lsp_id});
    spliced++;
  }
  return spliced;
}

std::optional<std::pair<int, std::optional<std::uint32_t>>>
Control::resolveLabel(net::Packet& p, int node) {
  if (p.label) {
    auto it = lib_.find({node, *p.label});
    if (it == lib_.end()) {
      lib_misses_++;
      return std::nullopt;  // fall back to static routing
    }
    const LibEntry& e = it->second;
    p.lsp_id = e.lsp_id;
    if (!e.out_label && e.next_node == node) {
      // Tunnel egress short of the packet's destination: pop and continue
      // by static routing.
      p.label.reset();
      return std::nullopt;
    }
    return std::make_pair(e.next_node, e.out_label);
  }
  if (p.kind != net::MsgKind::Data) return std::nullopt;
  for (const auto& [key, e] : push_entries_) {
    if (key.first != node) continue;
    const Lsp& l = lsp(e.lsp_id);
    if (l.state != LspState::Up || l.egress != p.dst) continue;
    p.lsp_id = e.lsp_id;
    return std::make_pair(e.next_node, e.out_label);
  }
  return std::nullopt;
}

void Control::releaseReservations(int lsp_id) {
  for (auto& [link, led] : ledgers_) led.by_lsp.erase(lsp_id);
}

double Control::sumWithout(const LinkLedger& led, int lsp_id) const {
  double sum = 0;
  for (const auto& [id, r] : led.by_lsp)
    if (id != lsp_id) sum += r.bits;
  return sum;
}

const LibEntry* Control::findEntry(int node, std::uint32_t in_label) const {
  auto it = lib_.find({node, in_label});
  return it == lib_.end() ? nullptr : &it->second;
}

const LibEntry* Control::findPushEntry(int node, int lsp_id) const {
  auto it = push_entries_.find({node, lsp_id});
  return it == push_entries_.end() ? nullptr : &it->second;
}

std::size_t Control::labeledEntryCount(int lsp_id) const {
  std::size_t n = 0;
  for (const auto& [key, e] : lib_)
    if (e.lsp_id == lsp_id) n++;
  return n;
}

const LinkLedger& Control::ledger(int link_id) const {
  static const LinkLedger kEmpty;
  auto it = ledgers_.find(link_id);
  return it == ledgers_.end() ? kEmpty : it->second;
}

}  // namespace lspsim::mpls
