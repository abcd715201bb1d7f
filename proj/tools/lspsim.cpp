#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "lspsim/simulation.hpp"

namespace fs = std::filesystem;
using namespace lspsim;

int main(int argc, char** argv) {
  CLI::App app{"lspsim - MPLS/RSVP-TE fast-reroute network simulator"};
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "run a scenario file");
  std::string scn_path;
  std::uint64_t seed = 0;
  bool have_seed = false;
  std::string out_dir = ".";
  bool write_csv = false, write_trace = false, write_summary = false;
  run->add_option("scenario", scn_path, "scenario (.scn) file")->required();
  run->add_option("--seed", seed, "override the scenario seed")
      ->each([&](const std::string&) { have_seed = true; });
  run->add_option("--out-dir", out_dir, "output directory");
  run->add_flag("--csv", write_csv, "write packets.csv");
  run->add_flag("--trace", write_trace, "write trace.txt");
  run->add_flag("--summary", write_summary, "write summary.txt");

  CLI11_PARSE(app, argc, argv);

  std::ifstream in(scn_path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open '" << scn_path << "'\n";
    return 1;
  }
  std::ostringstream buf;
  buf << in.rdbuf();

  auto parsed = scenario::parseScenario(buf.str());
  if (!parsed.ok()) {
    for (const auto& e : parsed.errors) {
      if (e.line > 0)
        std::cerr << scn_path << ":" << e.line << ": " << e.message << "\n";
      else
        std::cerr << scn_path << ": " << e.message << "\n";
    }
    return 1;
  }

  scenario::RunOptions opt;
  if (have_seed) opt.seed_override = seed;
  opt.collect_trace = write_trace;

  scenario::RunReport report;
  try {
    report = scenario::runSimulation(*parsed.config, opt);
  } catch (const SimError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (write_csv || write_trace || write_summary)
      fs::create_directories(out_dir);
    if (write_csv)
      scenario::emitPacketsCsv(report, (fs::path(out_dir) / "packets.csv").string());
    if (write_summary)
      scenario::emitSummary(report, (fs::path(out_dir) / "summary.txt").string());
    if (write_trace)
      scenario::emitTrace(report, (fs::path(out_dir) / "trace.txt").string());
  } catch (const SimError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  scenario::emitSummary(report, std::cout);
  std::cerr << "wall_seconds " << report.wall_seconds << "\n";

  if (report.signaling_failed) {
    std::cerr << "signaling failure: " << report.signaling_error << "\n";
    return 2;
  }
  return 0;
}
