#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lspsim/events.hpp"
#include "lspsim/kernel.hpp"
#include "lspsim/packet.hpp"
#include "lspsim/rng.hpp"

namespace lspsim::net {

// Link media are "infinite capacity": one facility with a large server pool
// and a guard that its queue is never used.
inline constexpr int kMaxMediumServers = 65536;

// Simplex link: a 1-server transmit facility with a priority queue chained to
// the medium facility. A duplex link is exactly two of these.
struct Link {
  int id = -1;
  int from = 0;
  int to = 0;
  int peer = -1;  // reverse simplex of the same duplex pair
  double bandwidth_bps = 0.0;
  double prop_delay_s = 0.0;
  FacilityId tx = 0;
  FacilityId medium = 0;
  bool up = true;
  std::uint64_t drop_total = 0;
  std::uint64_t drop_at_failure = 0;  // cut while transmitting/propagating
  std::uint64_t drop_down_send = 0;   // refused at transmit, link down
};

struct NodeCounters {
  std::uint64_t received = 0;
  std::uint64_t delivered = 0;
  std::uint64_t forwarded = 0;
  std::uint64_t dropped = 0;
};

enum class GenKind { Cbr, Exponential, ExpOnOff, Pareto };
const char* genKindName(GenKind k);

struct GeneratorSpec {
  int id = 0;
  GenKind kind = GenKind::Cbr;
  int node = 0;
  int dst = 0;
  int size_bytes = 0;
  double rate_bps = 0.0;
  // Meaning depends on kind: ExpOnOff -> on/off phase means (s);
  // Pareto -> shape/scale of the interarrival distribution.
  double p1 = 0.0;
  double p2 = 0.0;
  double start = 0.0;
};

struct Generator {
  GeneratorSpec spec;
  enum class Phase { Stopped, On, Off } phase = Phase::Stopped;
  double burst_end = 0.0;
  RngStream interval_rng;
  RngStream phase_rng;
  // Duty-cycle bookkeeping over drawn phase durations.
  double total_on = 0.0;
  double total_off = 0.0;
  std::uint64_t cycles = 0;  // completed on+off pairs
};

struct PacketRecord {
  int flow_id = 0;
  std::uint64_t packet_id = 0;
  double created_at = 0.0;
  double arrived_at = 0.0;
  double delay = 0.0;
  double jitter = 0.0;
};

struct FlowMetrics {
  int flow_id = 0;
  std::uint64_t sent = 0;
  std::uint64_t received = 0;
  std::uint64_t dropped = 0;
  std::optional<double> last_delay;
  double delay_sum = 0.0;
  double delay_max = 0.0;
  double jitter_sum = 0.0;
  double jitter_max = 0.0;
};

// Appends the delivery record: delay = now - created_at, jitter = absolute
// difference of consecutive delays, 0 for the flow's first packet.
PacketRecord recordDelivery(FlowMetrics& metrics, const Packet& p, double now);

enum class DropCause { FailureCut, DownLinkSend, NoRoute, Policer };
const char* dropCauseName(DropCause c);

struct DropRecord {
  double time = 0.0;
  int link_id = -1;  // -1 when not attributable to a link
  int node = 0;
  DropCause cause = DropCause::NoRoute;
  MsgKind kind = MsgKind::Data;
  int flow_id = 0;
  std::uint64_t packet_id = 0;
};

// Token bucket. tokens is the current fill in bytes.
struct Policer {
  double rate_bps = 0.0;
  double bucket_bytes = 0.0;
  double tokens = 0.0;
  double last_update = 0.0;
};

// Refills the bucket for elapsed time, then admits the packet iff the fill
// covers its size.
bool police(Policer& p, int size_bytes, double now);

class Network {
 public:
  explicit Network(Kernel& k, std::uint64_t seed);

  // -- topology ------------------------------------------------------------
  int createNode();  // ids are 1-based
  std::pair<int, int> createDuplexLink(int a, int b, double bandwidth_bps,
                                       double prop_delay_s);
  void setStaticRoute(int node, int dst, int next_hop);
  int nodeCount() const { return node_count_; }
  const std::vector<Link>& links() const { return links_; }
  const Link& link(int id) const;
  int linkBetween(int from, int to) const;  // -1 if absent
  double txTime(const Link& l, int size_bytes) const;

  // -- generators ----------------------------------------------------------
  int addGenerator(const GeneratorSpec& spec);
  void scheduleGeneratorStart(int gen_id);  // at spec.start
  const Generator& generator(int gen_id) const;
  void onGeneratorStart(int gen_id);
  void onSourceArrival(int gen_id);

  // -- policing ------------------------------------------------------------
  void attachFlowPolicer(int flow_id, double rate_bps, double bucket_bytes);

  // -- packet movement -----------------------------------------------------
  TokenId createPacket(Packet p);
  Packet& packet(TokenId t);
  const Packet& packet(TokenId t) const;
  // Picks the next-hop link (explicit route, then label switch, then static
  // route), polices, checks link state, and requests the transmitter.
  void transmitRequest(TokenId t, int node, bool count_at_node);
  void handleServiceRelease(FacilityId f, int server);
  void propagate(TokenId t, int link_id);
  void nodeArrival(TokenId t, int node, int link_id);
  // Control-plane entry points used by the control sink.
  void forwardControl(TokenId t, int node, bool count_at_node);
  void finishControl(TokenId t, int node);
  void discardControl(TokenId t, int node);

  // -- failures ------------------------------------------------------------
  // Duplex failure takes both simplex directions down together; each simplex
  // link can also be failed on its own.
  void failLink(int a, int b);
  void restoreLink(int a, int b);
  void failSimplex(int link_id);
  void restoreSimplex(int link_id);

  // -- hooks ---------------------------------------------------------------
  // Label resolution: returns (next_node, new label) or nullopt to fall back
  // to static routing.
  std::function<std::optional<std::pair<int, std::optional<std::uint32_t>>>(
      Packet&, int)> label_resolver;
  // Receives every non-data packet at every node it visits.
  std::function<void(TokenId, int)> control_sink;

  // -- accounting ----------------------------------------------------------
  const NodeCounters& counters(int node) const;
  FlowMetrics& flow(int flow_id);
  const std::map<int, FlowMetrics>& flows() const { return metrics_; }
  const std::vector<PacketRecord>& packetRecords() const { return records_; }
  const std::vector<DropRecord>& dropRecords() const { return drops_; }
  std::uint64_t noRouteDrops() const { return no_route_drops_; }
  std::size_t inFlightCount() const { return transit_.size(); }

 private:
  struct Transit {
    enum class Stage { TxQueue, Tx, PrePropagate, Medium, PreArrival };
    Stage stage = Stage::TxQueue;
    int link_id = -1;
    int server = -1;
    EventId pending_event = 0;
  };

  void requireNode(int node, const char* op) const;
  void dropPacket(TokenId t, int node, int link_id, DropCause cause,
                  bool count_at_node);
  void emitPacket(Generator& g);
  void scheduleNextEmission(Generator& g);
  Generator& gen(int gen_id);

  Kernel& k_;
  std::uint64_t seed_;
  int node_count_ = 0;
  std::vector<NodeCounters> counters_;            // [node]
  std::vector<std::map<int, int>> static_routes_;  // [node] dst -> next hop
  std::vector<Link> links_;
  std::map<std::pair<int, int>, int> link_index_;
  std::unordered_map<FacilityId, int> tx_role_;      // facility -> link
  std::unordered_map<FacilityId, int> medium_role_;  // facility -> link
  std::vector<Generator> generators_;
  std::map<int, int> generator_index_;  // generator id -> slot
  std::map<int, Policer> flow_policers_;
  std::uint64_t next_packet_id_ = 1;
  std::unordered_map<TokenId, Transit> transit_;
  std::map<int, FlowMetrics> metrics_;
  std::vector<PacketRecord> records_;
  std::vector<DropRecord> drops_;
  std::uint64_t no_route_drops_ = 0;
};

}  // namespace lspsim::net
