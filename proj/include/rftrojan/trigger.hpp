#pragma once

// Behavioral model of the capacitor-based Trojan trigger. Only the voltage of
// the hammered node is modeled: it rises by a calibrated step per qualifying
// write, leaks by a calibrated step per idle cycle, and sets an SR latch when it
// crosses the threshold.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rftrojan/common.hpp"

namespace rft::trigger {

struct PatternTerm {
  unsigned bit = 0;
  bool value = false;
};

/// A data-bus pattern detector: a conjunction of required bit values.
class PatternSpec {
public:
  PatternSpec() = default;
  /// Throws std::invalid_argument if the terms violate the invariants.
  PatternSpec(unsigned bus_width, std::vector<PatternTerm> terms);

  /// Lists every invariant violation, empty when the pattern is well formed.
  static std::vector<std::string> problems(unsigned bus_width, std::span<const PatternTerm> terms);

  bool matches(std::uint64_t data) const noexcept { return (data & care_) == value_; }

  /// True if some data word satisfies both patterns.
  bool overlaps(const PatternSpec &other) const noexcept;

  unsigned bus_width() const noexcept { return bus_width_; }
  const std::vector<PatternTerm> &terms() const noexcept { return terms_; }
  bool empty() const noexcept { return terms_.empty(); }

private:
  unsigned bus_width_ = 32;
  std::vector<PatternTerm> terms_;
  std::uint64_t care_ = 0;
  std::uint64_t value_ = 0;
};

inline bool match_pattern(const PatternSpec &spec, std::uint64_t data) noexcept {
  return spec.matches(data);
}

enum class ResetMode { counted, immediate };

struct TriggerConfig {
  VAddr set_address = 0x602010;
  PatternSpec set_pattern;
  std::optional<VAddr> reset_address;
  PatternSpec reset_pattern;
  ResetMode reset_mode = ResetMode::counted;
  double v_max = 1.0;
  double v_threshold = 0.5;
  double epsilon = 0.05;
  std::uint32_t n_set = 1837;
  std::uint32_t n_reset = 92;
};

struct Calibration {
  double delta_per_hammer = 0.0;
  double leak_per_idle_cycle = 0.0;
};

/// Fits the per-hammer step to the continuous-hammer latch count and the
/// per-idle leak to a 30% duty-cycle floor (with margin epsilon).
/// Throws std::invalid_argument for n_set == 0 or a threshold outside (0, v_max].
Calibration calibrate(const TriggerConfig &config);

/// Leak per idle cycle expressed in hammer steps: (3/7)(1 - epsilon).
double leak_ratio(double epsilon) noexcept;

enum class CycleEvent { hammer_set, hammer_reset, idle };
enum class Transition { triggered, reset };

class TriggerCell {
public:
  explicit TriggerCell(TriggerConfig config);

  /// Advances the cell by one cycle. Exactly one event per simulated cycle.
  std::optional<Transition> observe_cycle(CycleEvent event);

  bool latched() const noexcept { return latched_; }
  double charge_v() const noexcept { return charge_units_ * calibration_.delta_per_hammer; }
  double reset_charge_v() const noexcept;
  /// Qualifying set hammers since construction or the last reset.
  std::uint64_t hammers() const noexcept { return hammers_; }
  std::uint32_t reset_hammers() const noexcept { return reset_count_; }

  const TriggerConfig &config() const noexcept { return config_; }
  const Calibration &calibration() const noexcept { return calibration_; }

private:
  void clear() noexcept;

  TriggerConfig config_;
  Calibration calibration_;
  // Charge in units of one hammer step; the latch point is exactly n_set.
  double charge_units_ = 0.0;
  double max_units_ = 0.0;
  double leak_units_ = 0.0;
  std::uint32_t reset_count_ = 0;
  std::uint64_t hammers_ = 0;
  bool latched_ = false;
};

} // namespace rft::trigger
