#pragma once

// The three register-file Trojan payloads and their control logic.
//
//   BC  - bitcell corruption: forces stored bits of one entry, persistently.
//   RP  - read port: forces bits of one entry on one read port for a window.
//   LBL - local bitline: forces one bit position of all entries sharing an
//         LBL on one read port for a window.
//
// A payload can only arm while the trigger latch is set.

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rftrojan/common.hpp"
#include "rftrojan/regfile.hpp"
#include "rftrojan/trigger.hpp"

namespace rft::payload {

enum class Kind { bc, rp, lbl };
enum class Polarity { zero_to_one, one_to_zero };
enum class BcForce { zeros, ones, both };

std::string_view to_string(Kind kind) noexcept;
std::string_view to_string(Polarity polarity) noexcept;

struct BcParams {
  unsigned target_entry = 0;
  Word bit_mask = 0x3;
  BcForce force_to = BcForce::zeros;
};

struct RpParams {
  unsigned target_entry = 0;
  Word bit_mask = 0x3;
  unsigned infected_port = 0;
  Cycle window_cycles = 4;
  /// Which error polarities the circuit is sized for (overhead report only).
  std::vector<Polarity> overhead = {Polarity::one_to_zero};
};

struct LblParams {
  unsigned infected_port = 0;
  unsigned bit_position = 0;
  unsigned group_index = 0;
  bool forced_value = false;
  Cycle window_cycles = 4;
};

struct Control {
  VAddr addr_x = 0;
  VAddr addr_y = 0;
  trigger::PatternSpec pattern;
};

struct Attachment {
  std::variant<BcParams, RpParams, LblParams> params;
  Control control;

  Kind kind() const noexcept { return static_cast<Kind>(params.index()); }
};

/// Lists invariant violations of `a` against `geometry`.
std::vector<std::string> problems(const Attachment &a, const regfile::Geometry &geometry);

struct Activation {
  std::size_t index = 0;
  Kind kind = Kind::bc;
  VAddr addr = 0;
  /// BC: true for force-to-ones. RP: V_F. LBL: forced value.
  bool level = false;
  /// RP/LBL window end (exclusive); unused for BC.
  Cycle until = 0;
};

struct BcFire {
  std::size_t index = 0;
  unsigned entry = 0;
  Word before = 0;
  Word after = 0;
};

class PayloadSet final : public regfile::ReadFilter {
public:
  PayloadSet() = default;
  explicit PayloadSet(std::vector<Attachment> attachments, regfile::Geometry geometry = {});

  /// Control logic for one L1 write. Returns the activations it caused.
  std::vector<Activation> on_bus_write(bool trigger_latched, VAddr addr, Word data, Cycle cycle);

  /// Applies a BC activation to storage.
  static BcFire apply_bc(const Attachment &attachment, const Activation &activation,
                         regfile::RegisterFile &rf);

  /// Windows whose end is `cycle`; they return to dormant.
  std::vector<std::size_t> expire(Cycle cycle);

  Word filter_read(unsigned port, unsigned entry, Word raw, Cycle cycle) const override;

  bool window_active(std::size_t index, Cycle cycle) const;
  const std::vector<Attachment> &attachments() const noexcept { return attachments_; }
  bool empty() const noexcept { return attachments_.empty(); }

private:
  struct Window {
    bool active = false;
    Cycle until = 0;
    bool vf = false;
  };

  std::vector<Attachment> attachments_;
  std::vector<Window> windows_;
  regfile::Geometry geometry_;
};

class UnknownVariant : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct OverheadRecord {
  Kind kind;
  Polarity polarity;
  double static_power_nW;
  double dynamic_power_uW;
  double area_um2;
  std::string_view use_case;
  /// Minimum Trojan transistor W/L for this polarity (reported, not simulated).
  unsigned min_w_over_l;
};

/// Overhead row for (kind, polarity). Throws UnknownVariant when there is none.
const OverheadRecord &table_row(Kind kind, Polarity polarity);

/// All six overhead rows.
std::span<const OverheadRecord> table_rows() noexcept;

/// One record per polarity each attachment is built for.
std::vector<OverheadRecord> overhead_report(std::span<const Attachment> attachments);

} // namespace rft::payload
