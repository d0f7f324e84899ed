#pragma once

// Deterministic event log. One event per line on output:
//
//   <cycle> TAB <Kind> TAB key=value TAB key=value ...
//
// Words print as 0x%08x, volts with nine decimals, everything else in decimal.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rftrojan/common.hpp"

namespace rft::trace {

enum class Kind {
  HammerObserved,
  ChargeSample,
  Triggered,
  Reset,
  PayloadArmed,
  PayloadFired,
  WindowOpen,
  WindowClose,
  RfRead,
  RfWrite,
  CplRead,
  RegisterRead,
  AccessOk,
  SegFault,
  PageFault,
  ContextSwitch,
  Fork,
  Exit,
  Detection,
  Skipped,
};

/// Per-cycle ordering slot of each kind.
enum class Phase { trigger, payload_control, reads, write_commit, defense };

std::string_view to_string(Kind kind) noexcept;
std::optional<Kind> kind_from_string(std::string_view name) noexcept;
Phase phase_of(Kind kind) noexcept;

struct Hex {
  std::uint32_t value;
};

using Value = std::variant<std::int64_t, Hex, double, std::string>;

struct Field {
  const char *key;
  Value value;
};

struct Event {
  Cycle cycle = 0;
  Kind kind = Kind::HammerObserved;
  std::vector<Field> fields;

  const Value *find(std::string_view key) const noexcept;
  bool has(std::string_view key) const noexcept { return find(key) != nullptr; }
  /// Integer or word field; throws std::out_of_range when absent.
  std::int64_t num(std::string_view key) const;
  std::uint32_t word(std::string_view key) const;
  double real(std::string_view key) const;
  std::string text(std::string_view key) const;

  std::string to_line() const;
};

/// Parses a line produced by Event::to_line. Field keys are not preserved as
/// pointers, so the parsed form is key/value strings.
struct ParsedLine {
  Cycle cycle = 0;
  Kind kind = Kind::HammerObserved;
  std::vector<std::pair<std::string, std::string>> fields;
};
std::optional<ParsedLine> parse_line(std::string_view line);

enum class Mode {
  full,        ///< keep every event and the digest
  digest_only, ///< digest and count, no storage
  off,         ///< nothing recorded
};

class Trace {
public:
  explicit Trace(Mode mode = Mode::full) : mode_(mode) {}

  bool recording() const noexcept { return mode_ != Mode::off; }
  Mode mode() const noexcept { return mode_; }

  void push(Event event);

  const std::vector<Event> &events() const noexcept { return events_; }
  std::uint64_t digest() const noexcept { return digest_; }
  std::uint64_t count() const noexcept { return count_; }

  void write_tsv(std::ostream &out) const;

private:
  Mode mode_;
  std::vector<Event> events_;
  std::uint64_t digest_ = kFnvOffset;
  std::uint64_t count_ = 0;
};

/// Digest of the events, optionally skipping some kinds.
std::uint64_t digest_of(const std::vector<Event> &events,
                        std::initializer_list<Kind> skip = {});

} // namespace rft::trace
