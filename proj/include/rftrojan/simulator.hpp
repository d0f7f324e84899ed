#pragma once

// Cooperative cycle loop. Each cycle runs the machine phases in order and lets
// the resident process execute one step unit. When the resident process
// faults, forks or has finished, the next runnable process (round-robin) is
// switched in; at most one switch happens per cycle.

#include <optional>

#include "rftrojan/report.hpp"
#include "rftrojan/scenario.hpp"
#include "rftrojan/trace.hpp"

namespace rft::harness {

struct RunOptions {
  trace::Mode trace_mode = trace::Mode::full;
  std::optional<std::uint64_t> seed;
  std::optional<Cycle> max_cycles;
  /// Stop at the end of the cycle in which the trigger latches.
  bool stop_when_latched = false;
};

struct RunResult {
  trace::Trace trace;
  Report report;
};

/// Seeds actually used for the PUF key and the boot permutation: explicit
/// non-zero values win, zero derives them from the scenario seed.
std::uint64_t effective_puf_seed(const Scenario &scenario, std::uint64_t seed);
std::uint64_t effective_boot_seed(const Scenario &scenario, std::uint64_t seed);

RunResult run(const Scenario &scenario, const RunOptions &options = {});

} // namespace rft::harness
