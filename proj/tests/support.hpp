#pragma once

// Shared test helpers: an integer trigger oracle and a random script
// generator for the property suites.

#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include "rftrojan/scenario.hpp"

namespace rft::test {

// Charge in 1/140 of a hammer step. With epsilon = 0.05 the idle leak is
// (3/7)(0.95) = 57/140 of a step, so every quantity is an exact integer.
struct IntTriggerOracle {
  std::int64_t n_set = 1837;
  std::int64_t cap_steps = 2 * 1837; // v_max / v_threshold * n_set
  std::int64_t charge = 0;
  std::int64_t hammers = 0;
  std::int64_t peak = 0;
  bool latched = false;

  static constexpr std::int64_t kStep = 140;
  static constexpr std::int64_t kLeak = 57;

  // Returns true on the hammer that latches.
  bool hammer() {
    ++hammers;
    charge = std::min(charge + kStep, cap_steps * kStep);
    peak = std::max(peak, charge);
    if (!latched && charge >= n_set * kStep) {
      latched = true;
      return true;
    }
    return false;
  }
  void idle() { charge = std::max<std::int64_t>(charge - kLeak, 0); }
  double charge_steps() const { return static_cast<double>(charge) / kStep; }
};

struct DutyOutcome {
  std::optional<std::int64_t> hammers_to_latch;
  double peak_steps = 0.0;
};

// Periodic ON/OFF hammering for `cycles` observed cycles.
inline DutyOutcome duty_oracle(std::int64_t on, std::int64_t period, std::int64_t cycles, std::int64_t n_set = 1837) {
  IntTriggerOracle o;
  o.n_set = n_set;
  o.cap_steps = 2 * n_set;
  DutyOutcome out;
  for (std::int64_t c = 0; c < cycles; ++c) {
    if (c % period < on) {
      if (o.hammer()) {
        out.hammers_to_latch = o.hammers;
        break;
      }
    } else {
      o.idle();
    }
  }
  out.peak_steps = static_cast<double>(o.peak) / IntTriggerOracle::kStep;
  return out;
}

// Scenario text with a user data page at 0x602000, a second user page at
// 0x700000 and one kernel page holding a secret at 0xC0100000.
std::string base_yaml(bool with_payloads, std::uint32_t n_set = 1837);

// Appends `count` random steps for one process to a scenario. Writes to the
// trigger address are capped at `max_hammers` in total.
struct ScriptGen {
  std::mt19937_64 rng;
  std::uint64_t hammers_left;

  ScriptGen(std::uint64_t seed, std::uint64_t max_hammers) : rng(seed), hammers_left(max_hammers) {}
  std::vector<harness::Step> program(std::size_t count, int max_pid);
};

// A random multi-process scenario built from base_yaml. Process 1 opens with
// a burst that leaves 60 trigger writes for the random part.
harness::Scenario random_scenario(std::uint64_t seed, bool with_payloads, std::uint64_t max_hammers);

} // namespace rft::test
