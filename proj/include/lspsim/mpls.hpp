#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lspsim/network.hpp"
#include "lspsim/rng.hpp"

namespace lspsim::mpls {

struct Timers {
  double refresh_period = 30.0;
  double state_timeout = 90.0;
  double hello_interval = 0.005;
  double hello_ack_timeout = 0.0175;
  double sweep_interval = 0.005;
  int path_msg_size = 120;
  int hello_msg_size = 20;
};

enum class LspState { Signaling, Up, TimedOut, TornDown };
enum class LspKind { Primary, Backup };
const char* lspStateName(LspState s);

struct Lsp {
  int lsp_id = 0;
  LspKind kind = LspKind::Primary;
  int ingress = 0;
  int egress = 0;
  std::vector<int> route;
  double bandwidth_req = 0.0;  // 0 = best effort
  LspState state = LspState::Signaling;
  bool optional_ok = false;  // a failed optional LSP does not abort the run
  // Backup only:
  int protects = -1;
  int merge_start = -1;
  int merge_end = -1;
  // Dormant detour head, activated by fastReroute at merge_start.
  std::optional<std::uint32_t> head_out_label;
  int head_next = -1;
  // Primary only: backup id spliced in, -1 if none.
  int spliced_via = -1;
  std::map<int, double> last_refresh_at;  // node -> time
};

struct LibEntry {
  int node = 0;
  std::optional<std::uint32_t> in_label;  // none = ingress push entry
  std::optional<int> prev_node;
  std::optional<std::uint32_t> out_label;  // none = egress pop
  int next_node = 0;
  int lsp_id = 0;
};

struct Reservation {
  double bits = 0.0;
  bool tentative = true;
  bool shared_with_primary = false;
  double made_at = 0.0;
};

// Per simplex link. Confirmed + tentative never exceeds the link bandwidth.
struct LinkLedger {
  std::map<int, Reservation> by_lsp;
  double totalReserved() const {
    double sum = 0;
    for (const auto& [id, r] : by_lsp) sum += r.bits;
    return sum;
  }
};

struct HelloAdjacency {
  int local = 0;
  int neighbor = 0;
  int link_id = -1;  // outgoing simplex local -> neighbor
  double phase = 0.0;
  std::optional<double> last_ack_at;  // none until the exchange establishes
  std::optional<double> pending_since;
  bool alive = true;
};

struct DetectionRecord {
  double time = 0.0;
  int node = 0;
  int link_id = -1;
  bool went_down = true;  // false = adjacency came back alive
};

struct SpliceRecord {
  double time = 0.0;
  int node = 0;
  int lsp_id = 0;
  int backup_id = 0;
};

struct ControlCreation {
  double time = 0.0;
  net::MsgKind kind = net::MsgKind::Hello;
  int lsp_id = -1;
};

// RSVP-TE control plane: LSP signaling with a reservation ledger, label
// mappings, soft-state refresh/timeout, HELLO liveness and local fast
// reroute onto one-to-one detours.
class Control {
 public:
  Control(Kernel& k, net::Network& net, Timers timers, std::uint64_t seed);

  // Starts PATH signaling; the LSP is Up once the mapping returns.
  int setLsp(int lsp_id, int ingress, int egress, std::vector<int> route,
             double bandwidth_req, bool optional_ok = false);
  // Requires the protected LSP to be Up and both merge points on its route.
  int setBackupLsp(int lsp_id, int protects, int merge_start, int merge_end,
                   std::vector<int> route);
  // Builds HELLO adjacencies from the current topology and schedules the
  // per-adjacency hello chains plus the recurring timeout sweep.
  void startTimers();

  void processControlMessage(TokenId t, int node, bool entered);
  std::optional<std::pair<int, std::optional<std::uint32_t>>> resolveLabel(
      net::Packet& p, int node);
  void onRefreshEvent(int lsp_id);
  void onHelloEvent(int adjacency_index);
  void onSweep();
  // Rewrites the local LIB entries of Up primaries that leave `node` over
  // `link_id` onto their detours. Purely local: emits no signaling.
  int fastReroute(int node, int link_id);

  std::function<void(int lsp_id)> on_lsp_up;
  std::function<void(int lsp_id, const std::string& reason)> on_lsp_failed;

  const std::map<int, Lsp>& lsps() const { return lsps_; }
  const Lsp& lsp(int id) const;
  const LibEntry* findEntry(int node, std::uint32_t in_label) const;
  const LibEntry* findPushEntry(int node, int lsp_id) const;
  const std::map<std::pair<int, std::uint32_t>, LibEntry>& libEntries() const {
    return lib_;
  }
  const std::map<std::pair<int, int>, LibEntry>& pushEntries() const {
    return push_entries_;
  }
  std::size_t labeledEntryCount(int lsp_id) const;
  const LinkLedger& ledger(int link_id) const;
  const std::vector<HelloAdjacency>& adjacencies() const {
    return adjacencies_;
  }
  const std::vector<DetectionRecord>& detections() const {
    return detections_;
  }
  const std::vector<SpliceRecord>& splices() const { return splices_; }
  const std::vector<ControlCreation>& controlCreations() const {
    return creations_;
  }
  std::uint64_t libMisses() const { return lib_misses_; }
  std::uint64_t staleMessages() const { return stale_msgs_; }
  std::uint64_t unprotectedAtSplice() const { return unprotected_; }
  const Timers& timers() const { return timers_; }

 private:
  std::uint32_t allocateLabel(int node);
  TokenId makeControl(net::MsgKind kind, int size_bytes, int src,
                      std::vector<int> route, int lsp_id,
                      std::optional<std::uint32_t> label);
  void inject(TokenId t, int node);
  Lsp& lspMut(int id);
  void releaseReservations(int lsp_id);
  void rejectLsp(Lsp& l, int upto_route_pos, const std::string& reason,
                 TokenId t, int node);
  double sumWithout(const LinkLedger& led, int lsp_id) const;

  void handlePathMessage(TokenId t, int node, net::Packet& p);
  void handleResvMessage(TokenId t, int node, net::Packet& p);
  void handleRefreshMessage(TokenId t, int node, net::Packet& p, bool entered);

  Kernel& k_;
  net::Network& net_;
  Timers timers_;
  std::uint64_t seed_;
  std::map<int, Lsp> lsps_;
  std::map<std::pair<int, std::uint32_t>, LibEntry> lib_;
  std::map<std::pair<int, int>, LibEntry> push_entries_;  // (node, lsp)
  std::map<int, std::uint32_t> next_label_;
  std::map<int, LinkLedger> ledgers_;
  std::map<int, RngStream> refresh_rngs_;
  std::vector<HelloAdjacency> adjacencies_;
  std::map<std::pair<int, int>, int> adj_index_;
  std::vector<DetectionRecord> detections_;
  std::vector<SpliceRecord> splices_;
  std::vector<ControlCreation> creations_;
  std::uint64_t next_msg_id_ = 1;
  std::uint64_t lib_misses_ = 0;
  std::uint64_t stale_msgs_ = 0;
  std::uint64_t unprotected_ = 0;
};

}  // namespace lspsim::mpls
