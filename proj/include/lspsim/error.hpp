#pragma once

#include <stdexcept>
#include <string>

namespace lspsim {

// Engine misuse and configuration faults. Scenario-level input problems are
// reported as parse errors instead; a SimError during a run indicates a bug
// in the caller or the engine itself.
class SimError : public std::runtime_error {
 public:
  explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lspsim
