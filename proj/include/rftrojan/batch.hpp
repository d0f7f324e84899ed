#pragma once

// Batches of independent runs: duty-cycle sweeps, the countermeasure matrix
// and obfuscation Monte Carlo. Each run owns its machine and trace, so a batch
// runs either serially or across OpenMP threads with identical results.

#include <string>
#include <vector>

#include "rftrojan/scenario.hpp"
#include "rftrojan/simulator.hpp"

namespace rft::harness {

enum class Exec { serial, parallel };

struct Job {
  Scenario scenario;
  RunOptions options;
};

/// Results are in job order regardless of `exec`. The first exception thrown
/// by any job is rethrown after the batch finishes.
std::vector<RunResult> run_jobs(const std::vector<Job> &jobs, Exec exec);

struct SweepPoint {
  double duty = 0.0;
  std::uint64_t on_cycles = 0;
  std::uint64_t period = 0;
  bool latched = false;
  std::optional<std::uint64_t> hammers_to_latch;
  std::optional<Cycle> latch_cycle;
  double max_charge_v = 0.0;
  Cycle cycles = 0;
};

/// Rebuilds the hammer process as periodic blocks of round(duty * period)
/// hammer writes followed by idle cycles, filling max_cycles. The hammer
/// write is the first write step labelled "hammer", else the first write.
/// Throws std::invalid_argument if the scenario has no write step.
Scenario duty_scenario(const Scenario &base, double duty, std::uint64_t period);

std::vector<SweepPoint> sweep_duty(const Scenario &base, const std::vector<double> &duties,
                                   std::uint64_t period = 100, Exec exec = Exec::parallel);

const std::vector<std::string> &defense_names();

/// Replaces the defense block with one named configuration: none,
/// verify_dedicated, verify_opportunistic, puf_hash or l1_obfuscation.
/// Throws std::invalid_argument for an unknown name.
Scenario with_defense(Scenario scenario, std::string_view defense);

struct MatrixCell {
  std::string attack;
  std::string payloads;
  std::string defense;
  /// detected, prevented or undetected.
  std::string outcome;
  bool latched = false;
  bool compromised = false;
  std::uint64_t rf_read_mismatch = 0;
  std::uint64_t register_hash_mismatch = 0;
  std::vector<std::string> excerpt;
  /// The excerpt line that decides the outcome.
  std::string evidence;
  std::uint64_t digest = 0;
};

/// Outcome rule: any detection -> detected; otherwise no compromise ->
/// prevented; otherwise undetected.
std::vector<MatrixCell> countermeasure_matrix(const std::vector<Scenario> &attacks,
                                              const std::vector<std::string> &defenses, Exec exec = Exec::parallel);

/// Attacks and defenses listed in the scenario's matrix block, or the
/// scenario itself against every defense when it has none.
std::vector<MatrixCell> countermeasure_matrix(const Scenario &scenario, Exec exec = Exec::parallel);

struct ObfuscationStudy {
  std::uint64_t boots = 0;
  std::uint64_t defeated = 0;
  double rate = 0.0;
  double expected = 0.0;
  double sigma = 0.0;
};

/// Runs `attack` under seeded L1 obfuscation for boot seeds first_seed ..
/// first_seed + boots - 1 and counts runs in which the trigger never latched.
ObfuscationStudy obfuscation_defeat(const Scenario &attack, std::uint64_t boots, std::uint64_t first_seed = 1,
                                    Exec exec = Exec::parallel);

std::string sweep_json(const std::vector<SweepPoint> &points, int indent = 2);
std::string matrix_json(const std::vector<MatrixCell> &cells, int indent = 2);

} // namespace rft::harness
