#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lspsim/mpls.hpp"
#include "lspsim/network.hpp"

namespace lspsim::scenario {

struct LinkSpec {
  int a = 0;
  int b = 0;
  double bandwidth_bps = 0.0;
  double prop_delay_s = 0.0;
  bool operator==(const LinkSpec&) const = default;
};

struct RouteSpec {
  int node = 0;
  int dst = 0;
  int next_hop = 0;
  bool operator==(const RouteSpec&) const = default;
};

struct LspSpec {
  int id = 0;
  int ingress = 0;
  int egress = 0;
  double bandwidth_req = 0.0;
  std::vector<int> route;
  bool optional_ok = false;
  bool operator==(const LspSpec&) const = default;
};

struct BackupSpec {
  int id = 0;
  int protects = 0;
  int merge_start = 0;
  int merge_end = 0;
  std::vector<int> route;
  bool operator==(const BackupSpec&) const = default;
};

struct FailureSpec {
  int a = 0;
  int b = 0;
  double fail_at = 0.0;
  std::optional<double> restore_at;
  bool operator==(const FailureSpec&) const = default;
};

struct ScenarioConfig {
  double sim_end = 0.0;
  std::uint64_t seed = 1;
  int node_count = 0;
  std::vector<LinkSpec> links;
  std::vector<RouteSpec> routes;
  std::vector<net::GeneratorSpec> generators;
  std::vector<LspSpec> lsps;
  std::vector<BackupSpec> backups;
  std::vector<FailureSpec> failures;
  mpls::Timers timers;
};

bool operator==(const ScenarioConfig& x, const ScenarioConfig& y);

struct ParseError {
  int line = 0;  // 0 = file-level problem
  std::string message;
};

struct ParseResult {
  std::optional<ScenarioConfig> config;
  std::vector<ParseError> errors;
  bool ok() const { return config.has_value(); }
};

// Line-oriented sections with [section] headers, whitespace-separated
// fields and '#' comments. Unknown sections and keys are rejected.
ParseResult parseScenario(std::string_view text);

// Canonical serialization; parse(emit(config)) == config for valid configs.
std::string emitScenario(const ScenarioConfig& cfg);

}  // namespace lspsim::scenario
