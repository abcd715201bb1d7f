#include "lspsim/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace lspsim::scenario {

bool operator==(const ScenarioConfig& x, const ScenarioConfig& y) {
  auto genEq = [](const net::GeneratorSpec& a, const net::GeneratorSpec& b) {
    return a.id == b.id && a.kind == b.kind && a.node == b.node &&
           a.dst == b.dst && a.size_bytes == b.size_bytes &&
           a.rate_bps == b.rate_bps && a.p1 == b.p1 && a.p2 == b.p2 &&
           a.start == b.start;
  };
  if (!(x.sim_end == y.sim_end && x.seed == y.seed &&
        x.node_count == y.node_count && x.links == y.links &&
        x.routes == y.routes && x.lsps == y.lsps && x.backups == y.backups &&
        x.failures == y.failures))
    return false;
  if (x.generators.size() != y.generators.size()) return false;
  for (std::size_t i = 0; i < x.generators.size(); ++i)
    if (!genEq(x.generators[i], y.generators[i])) return false;
  const mpls::Timers &tx = x.timers, &ty = y.timers;
  return tx.refresh_period == ty.refresh_period &&
         tx.state_timeout == ty.state_timeout &&
         tx.hello_interval == ty.hello_interval &&
         tx.hello_ack_timeout == ty.hello_ack_timeout &&
         tx.sweep_interval == ty.sweep_interval &&
         tx.path_msg_size == ty.path_msg_size &&
         tx.hello_msg_size == ty.hello_msg_size;
}

namespace {

struct Line {
  int number = 0;
  std::vector<std::string> fields;
};

std::vector<std::string> splitFields(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string f;
  while (iss >> f) out.push_back(f);
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  ParseResult run() {
    scan();
    ScenarioConfig cfg;
    parseSim(cfg);
    parseNodes(cfg);
    parseLinks(cfg);
    parseRoutes(cfg);
    parseGenerators(cfg);
    parseLsps(cfg);
    parseBackups(cfg);
    parseFailures(cfg);
    parseTimers(cfg);
    crossValidate(cfg);
    ParseResult res;
    res.errors = errors_;
    if (errors_.empty()) res.config = std::move(cfg);
    return res;
  }

 private:
  void error(int line, std::string msg) { errors_.push_back({line, msg}); }

  void scan() {
    std::string current;
    int lineno = 0;
    std::istringstream iss{std::string(text_)};
    std::string raw;
    while (std::getline(iss, raw)) {
      lineno++;
      if (auto hash = raw.find('#'); hash != std::string::npos)
        raw.erase(hash);
      auto fields = splitFields(raw);
      if (fields.empty()) continue;
      if (fields[0].front() == '[') {
        std::string name = fields[0];
        if (fields.size() != 1 || name.back() != ']') {
          error(lineno, "malformed section header");
          continue;
        }
        current = name.substr(1, name.size() - 2);
        static const std::set<std::string> known = {
            "sim",  "nodes",   "links",    "routes", "generators",
            "lsps", "backups", "failures", "timers"};
        if (!known.count(current)) {
          error(lineno, "unknown section [" + current + "]");
          current.clear();
        }
        seen_sections_.insert(current);
        continue;
      }
      if (current.empty()) {
        error(lineno, "fields outside any section");
        continue;
      }
      sections_[current].push_back({lineno, fields});
    }
  }

  bool toInt(const Line& l, const std::string& s, int& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || p != s.data() + s.size()) {
      error(l.number, "expected integer, got '" + s + "'");
      return false;
    }
    return true;
  }

  bool toU64(const Line& l, const std::string& s, std::uint64_t& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || p != s.data() + s.size()) {
      error(l.number, "expected unsigned integer, got '" + s + "'");
      return false;
    }
    return true;
  }

  bool toDouble(const Line& l, const std::string& s, double& out) {
    try {
      std::size_t used = 0;
      out = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      error(l.number, "expected number, got '" + s + "'");
      return false;
    }
    return true;
  }

  bool count(const Line& l, std::size_t n, const char* what) {
    if (l.fields.size() == n) return true;
    error(l.number, std::string(what) + ": expected " + std::to_string(n) +
                        " fields, got " + std::to_string(l.fields.size()));
    return false;
  }

  void parseSim(ScenarioConfig& cfg) {
    bool have_end = false;
    for (const Line& l : sections_["sim"]) {
      if (!count(l, 2, "[sim] entry")) continue;
      if (l.fields[0] == "end") {
        have_end = toDouble(l, l.fields[1], cfg.sim_end);
      } else if (l.fields[0] == "seed") {
        toU64(l, l.fields[1], cfg.seed);
      } else {
        error(l.number, "unknown [sim] key '" + l.fields[0] + "'");
      }
    }
    if (!have_end || !(cfg.sim_end > 0))
      error(0, "[sim] needs end > 0");
  }

  void parseNodes(ScenarioConfig& cfg) {
    for (const Line& l : sections_["nodes"]) {
      if (!count(l, 2, "[nodes] entry")) continue;
      if (l.fields[0] != "count") {
        error(l.number, "unknown [nodes] key '" + l.fields[0] + "'");
        continue;
      }
      toInt(l, l.fields[1], cfg.node_count);
    }
    if (cfg.node_count <= 0) error(0, "no nodes");
  }

  bool nodeOk(const ScenarioConfig& cfg, const Line& l, int id,
              const char* what) {
    if (id >= 1 && id <= cfg.node_count) return true;
    error(l.number, std::string(what) + ": unknown node " +
                        std::to_string(id));
    return false;
  }

  void parseLinks(ScenarioConfig& cfg) {
    std::set<std::pair<int, int>> seen;
    for (const Line& l : sections_["links"]) {
      if (!count(l, 4, "[links] entry")) continue;
      LinkSpec ls;
      if (!toInt(l, l.fields[0], ls.a) || !toInt(l, l.fields[1], ls.b) ||
          !toDouble(l, l.fields[2], ls.bandwidth_bps) ||
          !toDouble(l, l.fields[3], ls.prop_delay_s))
        continue;
      if (!nodeOk(cfg, l, ls.a, "link") || !nodeOk(cfg, l, ls.b, "link"))
        continue;
      if (ls.a == ls.b) {
        error(l.number, "link endpoints must differ");
        continue;
      }
      if (!(ls.bandwidth_bps > 0)) {
        error(l.number, "link bandwidth must be > 0");
        continue;
      }
      if (!(ls.prop_delay_s >= 0)) {
        error(l.number, "link propagation delay must be >= 0");
        continue;
      }
      auto key = std::minmax(ls.a, ls.b);
      if (!seen.insert({key.first, key.second}).second) {
        error(l.number, "duplicate link " + std::to_string(ls.a) + "-" +
                            std::to_string(ls.b));
        continue;
      }
      cfg.links.push_back(ls);
    }
  }

  bool adjacent(const ScenarioConfig& cfg, int a, int b) {
    for (const LinkSpec& ls : cfg.links)
      if ((ls.a == a && ls.b == b) || (ls.a == b && ls.b == a)) return true;
    return false;
  }

  void parseRoutes(ScenarioConfig& cfg) {
    std::set<std::pair<int, int>> seen;
    for (const Line& l : sections_["routes"]) {
      if (!count(l, 3, "[routes] entry")) continue;
      RouteSpec r;
      if (!toInt(l, l.fields[0], r.node) || !toInt(l, l.fields[1], r.dst) ||
          !toInt(l, l.fields[2], r.next_hop))
        continue;
      if (!nodeOk(cfg, l, r.node, "route") || !nodeOk(cfg, l, r.dst, "route") ||
          !nodeOk(cfg, l, r.next_hop, "route"))
        continue;
      if (!adjacent(cfg, r.node, r.next_hop)) {
        error(l.number, "route next hop " + std::to_string(r.next_hop) +
                            " is not adjacent to node " +
                            std::to_string(r.node));
        continue;
      }
      if (!seen.insert({r.node, r.dst}).second) {
        error(l.number, "duplicate route entry");
        continue;
      }
      cfg.routes.push_back(r);
    }
  }

  void parseGenerators(ScenarioConfig& cfg) {
    std::set<int> ids;
    for (const Line& l : sections_["generators"]) {
      if (!count(l, 9, "[generators] entry")) continue;
      net::GeneratorSpec g;
      if (!toInt(l, l.fields[0], g.id)) continue;
      const std::string& kind = l.fields[1];
      if (kind == "cbr") g.kind = net::GenKind::Cbr;
      else if (kind == "exponential") g.kind = net::GenKind::Exponential;
      else if (kind == "exp_on_off") g.kind = net::GenKind::ExpOnOff;
      else if (kind == "pareto") g.kind = net::GenKind::Pareto;
      else {
        error(l.number, "unknown generator kind '" + kind + "'");
        continue;
      }
      if (!toInt(l, l.fields[2], g.node) || !toInt(l, l.fields[3], g.dst) ||
          !toInt(l, l.fields[4], g.size_bytes) ||
          !toDouble(l, l.fields[5], g.rate_bps))
        continue;
      // The two float columns are on/off means for exp_on_off and
      // shape/scale for pareto; "-" elsewhere.
      auto optDouble = [&](const std::string& s, double& out) {
        if (s == "-") {
          out = 0;
          return true;
        }
        return toDouble(l, s, out);
      };
      if (!optDouble(l.fields[6], g.p1) || !optDouble(l.fields[7], g.p2) ||
          !toDouble(l, l.fields[8], g.start))
        continue;
      if (g.id <= 0) {
        error(l.number, "generator id must be > 0");
        continue;
      }
      if (!ids.insert(g.id).second) {
        error(l.number, "duplicate generator id");
        continue;
      }
      if (!nodeOk(cfg, l, g.node, "generator") ||
          !nodeOk(cfg, l, g.dst, "generator"))
        continue;
      if (g.size_bytes <= 0) {
        error(l.number, "generator packet size must be > 0");
        continue;
      }
      if (!(g.rate_bps > 0)) {
        error(l.number, "generator rate must be > 0");
        continue;
      }
      if (g.kind == net::GenKind::ExpOnOff && !(g.p1 > 0 && g.p2 > 0)) {
        error(l.number, "exp_on_off needs on/off means > 0");
        continue;
      }
      if (g.kind == net::GenKind::Pareto && !(g.p1 > 1 && g.p2 > 0)) {
        error(l.number, "pareto needs shape > 1 and scale > 0");
        continue;
      }
      if (!(g.start >= 0)) {
        error(l.number, "generator start must be >= 0");
        continue;
      }
      cfg.generators.push_back(g);
    }
  }

  bool routeHops(const ScenarioConfig& cfg, const Line& l,
                 const std::vector<int>& route, const char* what) {
    for (std::size_t i = 0; i + 1 < route.size(); ++i) {
      if (!adjacent(cfg, route[i], route[i + 1])) {
        error(l.number, std::string(what) + ": no link " +
                            std::to_string(route[i]) + "-" +
                            std::to_string(route[i + 1]));
        return false;
      }
    }
    return true;
  }

  void parseLsps(ScenarioConfig& cfg) {
    std::set<int> ids;
    for (const Line& l : sections_["lsps"]) {
      if (l.fields.size() < 6) {
        error(l.number, "[lsps] entry: expected id ingress egress bw route...");
        continue;
      }
      LspSpec s;
      std::size_t n = l.fields.size();
      if (l.fields.back() == "optional") {
        s.optional_ok = true;
        n--;
      }
      if (!toInt(l, l.fields[0], s.id) || !toInt(l, l.fields[1], s.ingress) ||
          !toInt(l, l.fields[2], s.egress) ||
          !toDouble(l, l.fields[3], s.bandwidth_req))
        continue;
      bool ok = true;
      for (std::size_t i = 4; i < n; ++i) {
        int hop = 0;
        if (!toInt(l, l.fields[i], hop)) {
          ok = false;
          break;
        }
        s.route.push_back(hop);
      }
      if (!ok) continue;
      if (!ids.insert(s.id).second) {
        error(l.number, "duplicate lsp id");
        continue;
      }
      for (int hop : s.route)
        if (!nodeOk(cfg, l, hop, "lsp route")) ok = false;
      if (!ok) continue;
      if (s.route.size() < 2 || s.route.front() != s.ingress) {
        error(l.number, "lsp route must start at the ingress");
        continue;
      }
      if (s.route.back() != s.egress) {
        error(l.number, "lsp route must end at the egress");
        continue;
      }
      if (s.bandwidth_req < 0) {
        error(l.number, "lsp bandwidth must be >= 0");
        continue;
      }
      if (!routeHops(cfg, l, s.route, "lsp")) continue;
      cfg.lsps.push_back(s);
    }
  }

  void parseBackups(ScenarioConfig& cfg) {
    std::set<int> ids;
    for (const LspSpec& s : cfg.lsps) ids.insert(s.id);
    for (const Line& l : sections_["backups"]) {
      if (l.fields.size() < 6) {
        error(l.number,
              "[backups] entry: expected id protects merge_start merge_end "
              "route...");
        continue;
      }
      BackupSpec s;
      if (!toInt(l, l.fields[0], s.id) || !toInt(l, l.fields[1], s.protects) ||
          !toInt(l, l.fields[2], s.merge_start) ||
          !toInt(l, l.fields[3], s.merge_end))
        continue;
      bool ok = true;
      for (std::size_t i = 4; i < l.fields.size(); ++i) {
        int hop = 0;
        if (!toInt(l, l.fields[i], hop)) {
          ok = false;
          break;
        }
        s.route.push_back(hop);
      }
      if (!ok) continue;
      if (!ids.insert(s.id).second) {
        error(l.number, "duplicate lsp id");
        continue;
      }
      const LspSpec* prot = nullptr;
      for (const LspSpec& pl : cfg.lsps)
        if (pl.id == s.protects) prot = &pl;
      if (!prot) {
        error(l.number, "backup protects unknown lsp " +
                            std::to_string(s.protects));
        continue;
      }
      auto onRoute = [&](int n) {
        return std::find(prot->route.begin(), prot->route.end(), n) !=
               prot->route.end();
      };
      if (!onRoute(s.merge_start) || !onRoute(s.merge_end)) {
        error(l.number, "merge points must lie on the protected route");
        continue;
      }
      if (s.route.size() < 2 || s.route.front() != s.merge_start ||
          s.route.back() != s.merge_end) {
        error(l.number, "backup route must run merge_start to merge_end");
        continue;
      }
      for (int hop : s.route)
        if (!nodeOk(cfg, l, hop, "backup route")) ok = false;
      if (!ok) continue;
      if (!routeHops(cfg, l, s.route, "backup")) continue;
      cfg.backups.push_back(s);
    }
  }

  void parseFailures(ScenarioConfig& cfg) {
    for (const Line& l : sections_["failures"]) {
      if (!count(l, 4, "[failures] entry")) continue;
      FailureSpec f;
      if (!toInt(l, l.fields[0], f.a) || !toInt(l, l.fields[1], f.b) ||
          !toDouble(l, l.fields[2], f.fail_at))
        continue;
      if (l.fields[3] != "-") {
        double r = 0;
        if (!toDouble(l, l.fields[3], r)) continue;
        f.restore_at = r;
      }
      if (!nodeOk(cfg, l, f.a, "failure") || !nodeOk(cfg, l, f.b, "failure"))
        continue;
      if (!adjacent(cfg, f.a, f.b)) {
        error(l.number, "failure references unknown link " +
                            std::to_string(f.a) + "-" + std::to_string(f.b));
        continue;
      }
      if (!(f.fail_at >= 0)) {
        error(l.number, "failure time must be >= 0");
        continue;
      }
      if (f.restore_at && !(*f.restore_at > f.fail_at)) {
        error(l.number, "restore time must be after the failure");
        continue;
      }
      cfg.failures.push_back(f);
    }
  }

  void parseTimers(ScenarioConfig& cfg) {
    for (const Line& l : sections_["timers"]) {
      if (!count(l, 2, "[timers] entry")) continue;
      const std::string& key = l.fields[0];
      double v = 0;
      if (!toDouble(l, l.fields[1], v)) continue;
      mpls::Timers& t = cfg.timers;
      if (key == "refresh_period") t.refresh_period = v;
      else if (key == "state_timeout") t.state_timeout = v;
      else if (key == "hello_interval") t.hello_interval = v;
      else if (key == "hello_ack_timeout") t.hello_ack_timeout = v;
      else if (key == "sweep_interval") t.sweep_interval = v;
      else if (key == "path_msg_size") t.path_msg_size = static_cast<int>(v);
      else if (key == "hello_msg_size") t.hello_msg_size = static_cast<int>(v);
      else error(l.number, "unknown [timers] key '" + key + "'");
    }
    const mpls::Timers& t = cfg.timers;
    if (!(t.state_timeout > t.refresh_period))
      error(0, "timers: state_timeout must exceed refresh_period");
    if (!(t.hello_ack_timeout > t.hello_interval))
      error(0, "timers: hello_ack_timeout must exceed hello_interval");
    if (!(t.refresh_period > 0 && t.hello_interval > 0 &&
          t.sweep_interval > 0))
      error(0, "timers: periods must be > 0");
    if (t.path_msg_size <= 0 || t.hello_msg_size <= 0)
      error(0, "timers: message sizes must be > 0");
  }

  void crossValidate(ScenarioConfig& cfg) {
    // Keep canonical ordering so emit/parse round-trips are stable.
    std::sort(cfg.links.begin(), cfg.links.end(),
              [](const LinkSpec& x, const LinkSpec& y) {
                return std::tie(x.a, x.b) < std::tie(y.a, y.b);
              });
    std::sort(cfg.routes.begin(), cfg.routes.end(),
              [](const RouteSpec& x, const RouteSpec& y) {
                return std::tie(x.node, x.dst) < std::tie(y.node, y.dst);
              });
    std::sort(cfg.generators.begin(), cfg.generators.end(),
              [](const net::GeneratorSpec& x, const net::GeneratorSpec& y) {
                return x.id < y.id;
              });
    std::sort(cfg.lsps.begin(), cfg.lsps.end(),
              [](const LspSpec& x, const LspSpec& y) { return x.id < y.id; });
    std::sort(cfg.backups.begin(), cfg.backups.end(),
              [](const BackupSpec& x, const BackupSpec& y) {
                return x.id < y.id;
              });
    std::sort(cfg.failures.begin(), cfg.failures.end(),
              [](const FailureSpec& x, const FailureSpec& y) {
                return std::tie(x.fail_at, x.a, x.b) <
                       std::tie(y.fail_at, y.a, y.b);
              });
  }

  std::string_view text_;
  std::map<std::string, std::vector<Line>> sections_;
  std::set<std::string> seen_sections_;
  std::vector<ParseError> errors_;
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ParseResult parseScenario(std::string_view text) {
  return Parser(text).run();
}

std::string emitScenario(const ScenarioConfig& cfg) {
  std::ostringstream out;
  out << "[sim]\n";
  out << "end " << num(cfg.sim_end) << "\n";
  out << "seed " << cfg.seed << "\n";
  out << "\n[nodes]\ncount " << cfg.node_count << "\n";
  out << "\n[links]\n";
  for (const LinkSpec& l : cfg.links)
    out << l.a << " " << l.b << " " << num(l.bandwidth_bps) << " "
        << num(l.prop_delay_s) << "\n";
  out << "\n[routes]\n";
  for (const RouteSpec& r : cfg.routes)
    out << r.node << " " << r.dst << " " << r.next_hop << "\n";
  out << "\n[generators]\n";
  for (const net::GeneratorSpec& g : cfg.generators) {
    out << g.id << " " << net::genKindName(g.kind) << " " << g.node << " "
        << g.dst << " " << g.size_bytes << " " << num(g.rate_bps) << " ";
    bool two_params = g.kind == net::GenKind::ExpOnOff ||
                      g.kind == net::GenKind::Pareto;
    if (two_params)
      out << num(g.p1) << " " << num(g.p2);
    else
      out << "- -";
    out << " " << num(g.start) << "\n";
  }
  out << "\n[lsps]\n";
  for (const LspSpec& s : cfg.lsps) {
    out << s.id << " " << s.ingress << " " << s.egress << " "
        << num(s.bandwidth_req);
    for (int hop : s.route) out << " " << hop;
    if (s.optional_ok) out << " optional";
    out << "\n";
  }
  out << "\n[backups]\n";
  for (const BackupSpec& s : cfg.backups) {
    out << s.id << " " << s.protects << " " << s.merge_start << " "
        << s.merge_end;
    for (int hop : s.route) out << " " << hop;
    out << "\n";
  }
  out << "\n[failures]\n";
  for (const FailureSpec& f : cfg.failures) {
    out << f.a << " " << f.b << " " << num(f.fail_at) << " ";
    if (f.restore_at)
      out << num(*f.restore_at);
    else
      out << "-";
    out << "\n";
  }
  out << "\n[timers]\n";
  const mpls::Timers& t = cfg.timers;
  out << "refresh_period " << num(t.refresh_period) << "\n";
  out << "state_timeout " << num(t.state_timeout) << "\n";
  out << "hello_interval " << num(t.hello_interval) << "\n";
  out << "hello_ack_timeout " << num(t.hello_ack_timeout) << "\n";
  out << "sweep_interval " << num(t.sweep_interval) << "\n";
  out << "path_msg_size " << t.path_msg_size << "\n";
  out << "hello_msg_size " << t.hello_msg_size << "\n";
  return out.str();
}

}  // namespace lspsim::scenario
