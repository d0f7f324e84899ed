#include "rftrojan/trigger.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

namespace rft::trigger {

std::vector<std::string> PatternSpec::problems(unsigned bus_width,
                                               std::span<const PatternTerm> terms) {
  std::vector<std::string> out;
  if (bus_width == 0 || bus_width > 64)
    out.push_back(fmt::format("bus width {} outside [1, 64]", bus_width));
  if (terms.empty())
    out.emplace_back("pattern has no terms");
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].bit >= bus_width)
      out.push_back(fmt::format("terms[{}]: bit index {} >= bus width {}", i, terms[i].bit, bus_width));
    for (std::size_t j = 0; j < i; ++j)
      if (terms[j].bit == terms[i].bit)
        out.push_back(fmt::format("terms[{}]: bit index {} repeated", i, terms[i].bit));
  }
  return out;
}

PatternSpec::PatternSpec(unsigned bus_width, std::vector<PatternTerm> terms)
    : bus_width_(bus_width), terms_(std::move(terms)) {
  auto errs = problems(bus_width_, terms_);
  if (!errs.empty())
    throw std::invalid_argument("invalid pattern: " + errs.front());
  for (const auto &t : terms_) {
    care_ |= std::uint64_t{1} << t.bit;
    if (t.value)
      value_ |= std::uint64_t{1} << t.bit;
  }
}

bool PatternSpec::overlaps(const PatternSpec &other) const noexcept {
  const std::uint64_t common = care_ & other.care_;
  return (value_ & common) == (other.value_ & common);
}

double leak_ratio(double epsilon) noexcept { return (3.0 / 7.0) * (1.0 - epsilon); }

Calibration calibrate(const TriggerConfig &config) {
  if (config.n_set == 0)
    throw std::invalid_argument("n_set must be at least 1");
  if (!(config.v_threshold > 0.0) || config.v_threshold > config.v_max)
    throw std::invalid_argument("v_threshold must lie in (0, v_max]");
  if (!(config.epsilon >= 0.0 && config.epsilon < 1.0))
    throw std::invalid_argument("epsilon must lie in [0, 1)");
  Calibration c;
  c.delta_per_hammer = config.v_threshold / config.n_set;
  c.leak_per_idle_cycle = c.delta_per_hammer * leak_ratio(config.epsilon);
  return c;
}

TriggerCell::TriggerCell(TriggerConfig config)
    : config_(std::move(config)), calibration_(calibrate(config_)) {
  if (config_.reset_mode == ResetMode::counted && config_.n_reset == 0)
    throw std::invalid_argument("n_reset must be at least 1 in counted mode");
  max_units_ = config_.v_max / config_.v_threshold * config_.n_set;
  leak_units_ = leak_ratio(config_.epsilon);
}

double TriggerCell::reset_charge_v() const noexcept {
  if (config_.reset_mode != ResetMode::counted)
    return 0.0;
  return config_.v_threshold / config_.n_reset * reset_count_;
}

void TriggerCell::clear() noexcept {
  latched_ = false;
  charge_units_ = 0.0;
  reset_count_ = 0;
  hammers_ = 0;
}

std::optional<Transition> TriggerCell::observe_cycle(CycleEvent event) {
  switch (event) {
  case CycleEvent::hammer_set:
    ++hammers_;
    charge_units_ = std::min(charge_units_ + 1.0, max_units_);
    if (!latched_ && charge_units_ >= static_cast<double>(config_.n_set)) {
      latched_ = true;
      return Transition::triggered;
    }
    return std::nullopt;

  case CycleEvent::idle:
    charge_units_ = std::max(charge_units_ - leak_units_, 0.0);
    return std::nullopt;

  case CycleEvent::hammer_reset: {
    // The set node is not charged this cycle, so it leaks as when idle.
    charge_units_ = std::max(charge_units_ - leak_units_, 0.0);
    bool fire = config_.reset_mode == ResetMode::immediate;
    if (!fire)
      fire = ++reset_count_ >= config_.n_reset;
    if (!fire)
      return std::nullopt;
    const bool was_latched = latched_;
    clear();
    if (was_latched)
      return Transition::reset;
    return std::nullopt;
  }
  }
  return std::nullopt;
}

} // namespace rft::trigger
