#pragma once

#include "lspsim/kernel.hpp"

namespace lspsim {

// Closed event taxonomy of a run. ServiceRelease is the kernel's own
// completion event; LinkFail/LinkRestore carry scenario failure injections
// at exact times. The dispatcher rejects anything else.
enum EventKind : int {
  kEvServiceRelease = kServiceReleaseKind,  // a = facility, b = server
  kEvSourceArrival = 1,                     // a = generator id
  kEvTransmitRequest = 2,                   // a = node, b = count-at-node flag
  kEvPropagate = 3,                         // a = link id
  kEvNodeArrival = 4,                       // a = node, b = link id
  kEvControlArrival = 5,                    // a = node (message injection)
  kEvLspRefresh = 6,                        // a = lsp id
  kEvHelloTimer = 7,                        // a = adjacency index
  kEvTimeoutSweep = 8,
  kEvGeneratorStart = 9,                    // a = generator id
  kEvEndOfRun = 10,
  kEvLinkFail = 11,                         // a,b = duplex endpoints
  kEvLinkRestore = 12,                      // a,b = duplex endpoints
};

const char* eventKindName(int kind);

}  // namespace lspsim
