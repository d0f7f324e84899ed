#pragma once

// Run summary. Serialized as JSON by to_json.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rftrojan/common.hpp"
#include "rftrojan/payload.hpp"
#include "rftrojan/trigger.hpp"

namespace rft::harness {

struct ProcessOutcome {
  Pid pid = 0;
  std::optional<Pid> parent;
  unsigned cpl = 3;
  unsigned read_port = 0;
  std::string status;
  std::string fault_reason;
  std::uint64_t kernel_bytes_read = 0;
  std::uint64_t seg_faults = 0;
  std::uint64_t page_faults = 0;
};

struct ExpectationResult {
  Pid pid = 0;
  std::size_t step = 0;
  std::string label;
  std::string op;
  std::string expected;
  std::string observed;
  Cycle cycle = 0;
  bool met = false;
};

struct TriggerSummary {
  std::uint32_t n_set = 0;
  std::optional<std::uint64_t> hammers_at_latch;
  std::optional<Cycle> latch_cycle;
  bool latched_at_end = false;
  double final_charge_v = 0.0;
  double max_charge_v = 0.0;
  std::uint64_t total_set_hammers = 0;
  std::uint64_t resets = 0;
  trigger::Calibration calibration;
};

struct VerificationSummary {
  std::string mode;
  std::uint64_t verified = 0;
  std::uint64_t skipped = 0;
  std::vector<unsigned> schedulable_ports;
};

struct Report {
  std::string scenario;
  std::uint64_t seed = 0;
  Cycle cycles = 0;
  Cycle max_cycles = 0;
  bool cycle_budget_exceeded = false;
  bool stopped_on_latch = false;

  TriggerSummary trigger;
  std::uint64_t activations = 0;
  std::uint64_t bc_fires = 0;
  std::vector<ProcessOutcome> processes;
  std::vector<ExpectationResult> expectations;

  std::uint64_t rf_read_mismatch = 0;
  std::uint64_t register_hash_mismatch = 0;
  VerificationSummary verification;
  bool hash_enabled = false;
  std::string obfuscation;

  /// A user process read kernel memory.
  bool kernel_leak = false;
  /// A process crashed on an invalid CPL.
  bool denial_of_service = false;
  /// A register read-back did not match its expected value.
  bool register_corruption = false;
  bool compromised() const noexcept { return kernel_leak || denial_of_service || register_corruption; }
  std::uint64_t detections() const noexcept { return rf_read_mismatch + register_hash_mismatch; }

  std::vector<payload::OverheadRecord> overhead;

  std::uint64_t trace_events = 0;
  std::uint64_t digest = 0;
};

std::string hex_digest(std::uint64_t digest);

std::string to_json(const Report &report, int indent = 2);

} // namespace rft::harness
