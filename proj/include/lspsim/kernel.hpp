#pragma once

#include <any>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "lspsim/error.hpp"

namespace lspsim {

using TokenId = std::uint64_t;
using EventId = std::uint64_t;
using FacilityId = std::uint32_t;

inline constexpr TokenId kNoToken = 0;

// Event kind used by kernel-scheduled service completions. Domain kinds
// start at 1 (see events.hpp).
inline constexpr int kServiceReleaseKind = 0;

struct Event {
  EventId id = 0;
  int kind = 0;
  double fire_time = 0.0;
  TokenId token = kNoToken;
  std::uint64_t seq = 0;  // insertion counter; breaks fire_time ties FIFO
  std::int64_t a = 0;     // kind-specific payload (facility id, node id, ...)
  std::int64_t b = 0;
};

// Active entity flowing through facilities. The payload is opaque to the
// kernel; the network layer stores a Packet in it.
struct Token {
  TokenId id = 0;
  int priority = 0;
  std::optional<double> service_remaining;  // set only while preempted/queued
  double total_served = 0.0;                // sum of service slices received
  std::any payload;
};

struct FacilityStats {
  std::uint64_t completions = 0;
  double busy_time = 0.0;  // integrated over servers, event-boundary basis
  std::uint64_t queue_exits = 0;  // service starts; zero-wait starts included
  double cumulative_wait = 0.0;
  std::size_t max_queue_len = 0;
  std::uint64_t preemptions = 0;
};

struct RequestOutcome {
  bool served = false;  // false -> enqueued
  int server = -1;
  EventId release_event = 0;
};

struct StartedService {
  TokenId token = kNoToken;
  int server = -1;
  EventId release_event = 0;
};

struct ReleaseOutcome {
  TokenId completed = kNoToken;
  std::optional<StartedService> started;  // queue head pulled into service
};

// A multi-server resource with a preemptive priority queue. Queue discipline:
// descending priority; FIFO within equal priority, except preempted tokens
// re-enter ahead of equal-priority waiters.
class Facility {
 public:
  struct Server {
    TokenId token = kNoToken;
    EventId release_event = 0;
    double service_start = 0.0;
    double scheduled_end = 0.0;
    int request_priority = 0;
  };

  struct QueueEntry {
    int priority = 0;
    int cls = 1;  // 0 = preempted re-entry, 1 = normal
    std::int64_t order = 0;
    TokenId token = kNoToken;
    double enqueue_time = 0.0;
    double service_time = 0.0;
  };

  struct QueueCmp {
    bool operator()(const QueueEntry& x, const QueueEntry& y) const {
      if (x.priority != y.priority) return x.priority > y.priority;
      if (x.cls != y.cls) return x.cls < y.cls;
      return x.order < y.order;
    }
  };

  std::string name;
  int server_count = 1;
  bool up = true;
  bool expect_no_queue = false;  // guards "infinite server" approximations
  std::map<int, Server> busy;   // server index -> state; ordered for replay
  std::set<int> free_indices;   // below high_water, currently free
  int high_water = 0;           // next never-used server index
  std::set<QueueEntry, QueueCmp> queue;
  FacilityStats stats;

  bool hasFreeServer() const {
    return !free_indices.empty() || high_water < server_count;
  }
  int takeFreeServer();
};

// Single-threaded discrete-event engine: event chain, token registry and
// facilities. Instances share no global state; independent simulations may
// run concurrently in separate instances.
class Kernel {
 public:
  double now() const { return clock_; }

  // -- event chain ---------------------------------------------------------
  EventId schedule(int kind, double delay, TokenId token, std::int64_t a = 0,
                   std::int64_t b = 0);
  // Removes and returns the minimum-(fire_time, seq) event, advancing the
  // clock. Empty chain -> nullopt (end of simulation, not a fault).
  std::optional<Event> cause();
  bool cancel(EventId id);
  bool hasPendingEvents() const { return !chain_.empty(); }
  std::size_t pendingEventCount() const { return chain_.size(); }

  // -- tokens --------------------------------------------------------------
  TokenId createToken(int priority, std::any payload = {});
  Token& token(TokenId id);
  const Token& token(TokenId id) const;
  bool hasToken(TokenId id) const { return tokens_.count(id) != 0; }
  void destroyToken(TokenId id);
  std::size_t liveTokenCount() const { return tokens_.size(); }

  // -- facilities ----------------------------------------------------------
  FacilityId defineFacility(std::string name, int servers,
                            bool expect_no_queue = false);
  // Serve now if an up server is free, else enqueue recording service_time.
  RequestOutcome request(FacilityId f, TokenId t, int priority,
                         double service_time);
  // As request, but a strictly-lower-priority token in service is interrupted,
  // its remaining service time stored, and re-queued ahead of equals.
  RequestOutcome preempt(FacilityId f, TokenId t, int priority,
                         double service_time);
  // Completes the service on a busy server (fault if free) and pulls the
  // queue head into service when the facility is up.
  ReleaseOutcome release(FacilityId f, int server);
  // Frees a busy server without counting a completion (failure handling).
  TokenId abortService(FacilityId f, int server);
  std::vector<TokenId> abortAllServices(FacilityId f);
  // When brought up, drains the queue into free servers (work conservation).
  void setFacilityUp(FacilityId f, bool upflag,
                     std::vector<StartedService>* started = nullptr);

  const Facility& facility(FacilityId f) const;
  bool facilityBusy(FacilityId f) const;
  int freeServerCount(FacilityId f) const;
  std::size_t queueLength(FacilityId f) const;
  const FacilityStats& stats(FacilityId f) const;
  // Utilization including service in progress at `now`.
  double utilization(FacilityId f, double now_time) const;
  // Mean wait over all service starts (immediate starts wait 0).
  double meanWait(FacilityId f) const;

 private:
  struct EventKey {
    double fire_time;
    std::uint64_t seq;
    bool operator<(const EventKey& o) const {
      if (fire_time != o.fire_time) return fire_time < o.fire_time;
      return seq < o.seq;
    }
  };

  Facility& fac(FacilityId f);
  const Facility& fac(FacilityId f) const;
  RequestOutcome startService(Facility& fa, FacilityId fid, TokenId t,
                              int priority, double service_time,
                              bool from_queue, double enqueue_time);
  void enqueue(Facility& fa, TokenId t, int priority, double service_time,
               bool preempted);
  std::optional<StartedService> pullQueue(Facility& fa, FacilityId fid);

  double clock_ = 0.0;
  std::uint64_t next_event_id_ = 1;
  std::uint64_t next_seq_ = 0;
  std::int64_t next_queue_order_ = 0;
  TokenId next_token_id_ = 1;
  std::map<EventKey, Event> chain_;
  std::unordered_map<EventId, EventKey> chain_index_;
  std::unordered_map<TokenId, Token> tokens_;
  std::vector<Facility> facilities_;
};

}  // namespace lspsim
