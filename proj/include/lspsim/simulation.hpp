#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lspsim/scenario.hpp"

namespace lspsim::scenario {

struct RunOptions {
  std::optional<std::uint64_t> seed_override;
  bool collect_trace = false;
};

struct FlowSummary {
  int flow_id = 0;
  std::uint64_t sent = 0;
  std::uint64_t received = 0;
  std::uint64_t dropped = 0;
  double mean_delay = 0.0;
  double max_delay = 0.0;
  double mean_jitter = 0.0;
  double max_jitter = 0.0;
};

struct LinkDropSummary {
  int from = 0;
  int to = 0;
  std::uint64_t total = 0;
  std::uint64_t at_failure = 0;
  std::uint64_t down_send = 0;
};

struct LspFinal {
  int lsp_id = 0;
  std::string kind;
  std::string state;
  int spliced_via = -1;  // -1 = forwarding never rewritten
};

struct RunReport {
  std::uint64_t seed = 0;
  double sim_end = 0.0;
  bool signaling_failed = false;
  std::string signaling_error;
  std::vector<FlowSummary> flows;
  std::vector<net::PacketRecord> packets;  // received data packets, in order
  std::vector<net::DropRecord> drops;
  std::vector<LinkDropSummary> link_drops;
  std::map<net::MsgKind, std::uint64_t> control_created;
  std::vector<mpls::ControlCreation> control_creations;
  std::vector<mpls::DetectionRecord> detections;
  std::vector<mpls::SpliceRecord> splices;
  std::vector<LspFinal> lsps;
  std::uint64_t no_route_drops = 0;
  std::uint64_t in_flight_at_end = 0;
  std::vector<std::string> trace;
  double wall_seconds = 0.0;  // stdout only; never serialized
};

RunReport runSimulation(const ScenarioConfig& cfg, const RunOptions& opt = {});

void emitPacketsCsv(const RunReport& report, std::ostream& out);
void emitSummary(const RunReport& report, std::ostream& out);
void emitTrace(const RunReport& report, std::ostream& out);
// File variants; throw SimError with the path echoed when unwritable.
void emitPacketsCsv(const RunReport& report, const std::string& path);
void emitSummary(const RunReport& report, const std::string& path);
void emitTrace(const RunReport& report, const std::string& path);

}  // namespace lspsim::scenario
