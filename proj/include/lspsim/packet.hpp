#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace lspsim::net {

enum class MsgKind {
  Data,
  PathLabelRequest,
  ResvLabelMapping,
  PathDetour,
  PathRefresh,
  ResvRefresh,
  Hello,
  HelloAck,
  Resv,  // detour confirm
};

inline constexpr MsgKind kAllMsgKinds[] = {
    MsgKind::Data,        MsgKind::PathLabelRequest, MsgKind::ResvLabelMapping,
    MsgKind::PathDetour,  MsgKind::PathRefresh,      MsgKind::ResvRefresh,
    MsgKind::Hello,       MsgKind::HelloAck,         MsgKind::Resv};

const char* msgKindName(MsgKind k);
inline bool isControl(MsgKind k) { return k != MsgKind::Data; }

// All control traffic aggregates under one flow for accounting.
inline constexpr int kControlFlow = 0;

// Data outranks control on link transmitters so signaling never perturbs
// measured application delay; an in-service control packet is preempted and
// resumes with its remaining transmission time.
inline constexpr int kPriorityControl = 1;
inline constexpr int kPriorityData = 2;

struct Packet {
  std::uint64_t id = 0;
  int size_bytes = 0;
  int src = 0;
  int dst = 0;
  std::optional<std::uint32_t> label;
  MsgKind kind = MsgKind::Data;
  std::optional<std::uint64_t> msg_id;
  std::vector<int> explicit_route;  // starts at creating node, ends at dst
  int route_pos = 0;                // index of current node in explicit_route
  std::optional<int> lsp_id;
  int priority = kPriorityData;
  double created_at = 0.0;
  int flow_id = kControlFlow;  // generator id for data, 0 for control
};

}  // namespace lspsim::net
