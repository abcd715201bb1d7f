#include "lspsim/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lspsim {

int Facility::takeFreeServer() {
  if (!free_indices.empty()) {
    int idx = *free_indices.begin();
    free_indices.erase(free_indices.begin());
    return idx;
  }
  if (high_water < server_count) return high_water++;
  return -1;
}

EventId Kernel::schedule(int kind, double delay, TokenId token, std::int64_t a,
                         std::int64_t b) {
  if (!(delay >= 0.0) || !std::isfinite(delay))
    throw SimError("schedule: delay must be finite and >= 0");
  Event ev;
  ev.id = next_event_id_++;
  ev.kind = kind;
  ev.fire_time = clock_ + delay;
  ev.token = token;
  ev.seq = next_seq_++;
  ev.a = a;
  ev.b = b;
  EventKey key{ev.fire_time, ev.seq};
  chain_.emplace(key, ev);
  chain_index_.emplace(ev.id, key);
  return ev.id;
}

std::optional<Event> Kernel::cause() {
  if (chain_.empty()) return std::nullopt;
  auto it = chain_.begin();
  Event ev = it->second;
  chain_index_.erase(ev.id);
  chain_.erase(it);
  clock_ = ev.fire_time;  // keys are >= clock_ by construction
  return ev;
}

bool Kernel::cancel(EventId id) {
  auto it = chain_index_.find(id);
  if (it == chain_index_.end()) return false;
  chain_.erase(it->second);
  chain_index_.erase(it);
  return true;
}

TokenId Kernel::createToken(int priority, std::any payload) {
  TokenId id = next_token_id_++;
  Token tok;
  tok.id = id;
  tok.priority = priority;
  tok.payload = std::move(payload);
  tokens_.emplace(id, std::move(tok));
  return id;
}

Token& Kernel::token(TokenId id) {
  auto it = tokens_.find(id);
  if (it == tokens_.end()) throw SimError("token: unknown id");
  return it->second;
}

const Token& Kernel::token(TokenId id) const {
  auto it = tokens_.find(id);
  if (it == tokens_.end()) throw SimError("token: unknown id");
  return it->second;
}

void Kernel::destroyToken(TokenId id) {
  if (tokens_.erase(id) == 0) throw SimError("destroyToken: unknown id");
}

FacilityId Kernel::defineFacility(std::string name, int servers,
                                  bool expect_no_queue) {
  if (servers < 1) throw SimError("defineFacility: servers must be >= 1");
  Facility fa;
  fa.name = std::move(name);
  fa.server_count = servers;
  fa.expect_no_queue = expect_no_queue;
  facilities_.push_back(std::move(fa));
  return static_cast<FacilityId>(facilities_.size() - 1);
}

Facility& Kernel::fac(FacilityId f) {
  if (f >= facilities_.size()) throw SimError("facility: unknown id");
  return facilities_[f];
}

const Facility& Kernel::fac(FacilityId f) const {
  if (f >= facilities_.size()) throw SimError("facility: unknown id");
  return facilities_[f];
}

const Facility& Kernel::facility(FacilityId f) const { return fac(f); }

RequestOutcome Kernel::startService(Facility& fa, FacilityId fid, TokenId t,
                                    int priority, double service_time,
                                    bool from_queue, double enqueue_time) {
  int server = fa.takeFreeServer();
  Facility::Server srv;
  srv.token = t;
  srv.service_start = clock_;
  srv.scheduled_end = clock_ + service_time;
  srv.request_priority = priority;
  srv.release_event =
      schedule(kServiceReleaseKind, service_time, t,
               static_cast<std::int64_t>(fid), server);
  fa.busy.emplace(server, srv);
  fa.stats.queue_exits++;
  fa.stats.cumulative_wait += from_queue ? (clock_ - enqueue_time) : 0.0;
  token(t).service_remaining.reset();
  RequestOutcome out;
  out.served = true;
  out.server = server;
  out.release_event = srv.release_event;
  return out;
}

void Kernel::enqueue(Facility& fa, TokenId t, int priority,
                     double service_time, bool preempted) {
  if (fa.expect_no_queue)
    throw SimError("facility '" + fa.name +
                   "': queue use on a facility modeled as infinite-capacity");
  Facility::QueueEntry e;
  e.priority = priority;
  e.cls = preempted ? 0 : 1;
  e.order = next_queue_order_++;
  e.token = t;
  e.enqueue_time = clock_;
  e.service_time = service_time;
  fa.queue.insert(e);
  fa.stats.max_queue_len = std::max(fa.stats.max_queue_len, fa.queue.size());
  token(t).service_remaining = service_time;
}

RequestOutcome Kernel::request(FacilityId f, TokenId t, int priority,
                               double service_time) {
  if (!(service_time >= 0.0) || !std::isfinite(service_time))
    throw SimError("request: service_time must be finite and >= 0");
  Facility& fa = fac(f);
  if (fa.up && fa.hasFreeServer())
    return startService(fa, f, t, priority, service_time, false, 0.0);
  enqueue(fa, t, priority, service_time, false);
  return RequestOutcome{};
}

RequestOutcome Kernel::preempt(FacilityId f, TokenId t, int priority,
                               double service_time) {
  if (!(service_time >= 0.0) || !std::isfinite(service_time))
    throw SimError("preempt: service_time must be finite and >= 0");
  Facility& fa = fac(f);
  if (fa.up && fa.hasFreeServer())
    return startService(fa, f, t, priority, service_time, false, 0.0);
  if (fa.up) {
    // Victim: strictly lower priority, lowest first; ties by earliest start,
    // then smallest server index (map order).
    int victim_server = -1;
    for (const auto& [idx, srv] : fa.busy) {
      if (srv.request_priority >= priority) continue;
      if (victim_server < 0) {
        victim_server = idx;
        continue;
      }
      const auto& best = fa.busy.at(victim_server);
      if (srv.request_priority < best.request_priority ||
          (srv.request_priority == best.request_priority &&
           srv.service_start < best.service_start))
        victim_server = idx;
    }
    if (victim_server >= 0) {
      Facility::Server srv = fa.busy.at(victim_server);
      if (!cancel(srv.release_event))
        throw SimError("preempt: missing release event");
      double slice = clock_ - srv.service_start;
      double remaining = srv.scheduled_end - clock_;
      Token& victim = token(srv.token);
      victim.total_served += slice;
      fa.stats.busy_time += slice;
      fa.stats.preemptions++;
      fa.busy.erase(victim_server);
      fa.free_indices.insert(victim_server);
      enqueue(fa, srv.token, srv.request_priority, remaining, true);
      return startService(fa, f, t, priority, service_time, false, 0.0);
    }
  }
  // No lower-priority token in service (or facility down): plain request.
  enqueue(fa, t, priority, service_time, false);
  return RequestOutcome{};
}

std::optional<StartedService> Kernel::pullQueue(Facility& fa, FacilityId fid) {
  if (!fa.up || fa.queue.empty() || !fa.hasFreeServer()) return std::nullopt;
  Facility::QueueEntry head = *fa.queue.begin();
  fa.queue.erase(fa.queue.begin());
  RequestOutcome out = startService(fa, fid, head.token, head.priority,
                                    head.service_time, true,
                                    head.enqueue_time);
  StartedService st;
  st.token = head.token;
  st.server = out.server;
  st.release_event = out.release_event;
  return st;
}

ReleaseOutcome Kernel::release(FacilityId f, int server) {
  Facility& fa = fac(f);
  auto it = fa.busy.find(server);
  if (it == fa.busy.end())
    throw SimError("release: server is not busy (engine bug)");
  Facility::Server srv = it->second;
  double slice = clock_ - srv.service_start;
  Token& tok = token(srv.token);
  tok.total_served += slice;
  fa.stats.busy_time += slice;
  fa.stats.completions++;
  fa.busy.erase(it);
  fa.free_indices.insert(server);
  ReleaseOutcome out;
  out.completed = srv.token;
  out.started = pullQueue(fa, f);
  return out;
}

TokenId Kernel::abortService(FacilityId f, int server) {
  Facility& fa = fac(f);
  auto it = fa.busy.find(server);
  if (it == fa.busy.end())
    throw SimError("abortService: server is not busy");
  Facility::Server srv = it->second;
  cancel(srv.release_event);
  double slice = clock_ - srv.service_start;
  token(srv.token).total_served += slice;
  fa.stats.busy_time += slice;
  fa.busy.erase(it);
  fa.free_indices.insert(server);
  return srv.token;
}

std::vector<TokenId> Kernel::abortAllServices(FacilityId f) {
  Facility& fa = fac(f);
  std::vector<int> servers;
  servers.reserve(fa.busy.size());
  for (const auto& [idx, srv] : fa.busy) servers.push_back(idx);
  std::vector<TokenId> out;
  out.reserve(servers.size());
  for (int idx : servers) out.push_back(abortService(f, idx));
  return out;
}

void Kernel::setFacilityUp(FacilityId f, bool upflag,
                           std::vector<StartedService>* started) {
  Facility& fa = fac(f);
  fa.up = upflag;
  if (!upflag) return;
  while (auto st = pullQueue(fa, f)) {
    if (started) started->push_back(*st);
  }
}

bool Kernel::facilityBusy(FacilityId f) const { return !fac(f).busy.empty(); }

int Kernel::freeServerCount(FacilityId f) const {
  const Facility& fa = fac(f);
  return fa.server_count - static_cast<int>(fa.busy.size());
}

std::size_t Kernel::queueLength(FacilityId f) const {
  return fac(f).queue.size();
}

const FacilityStats& Kernel::stats(FacilityId f) const {
  return fac(f).stats;
}

double Kernel::utilization(FacilityId f, double now_time) const {
  const Facility& fa = fac(f);
  if (now_time <= 0.0) return 0.0;
  double busy = fa.stats.busy_time;
  for (const auto& [idx, srv] : fa.busy) busy += now_time - srv.service_start;
  return busy / (now_time * fa.server_count);
}

double Kernel::meanWait(FacilityId f) const {
  const Facility& fa = fac(f);
  if (fa.stats.queue_exits == 0) return 0.0;
  return fa.stats.cumulative_wait / static_cast<double>(fa.stats.queue_exits);
}

}  // namespace lspsim
