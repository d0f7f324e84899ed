#include "rftrojan/payload.hpp"

#include <array>

#include <fmt/format.h>

namespace rft::payload {

std::string_view to_string(Kind kind) noexcept {
  switch (kind) {
  case Kind::bc: return "BC";
  case Kind::rp: return "RP";
  case Kind::lbl: return "LBL";
  }
  return "?";
}

std::string_view to_string(Polarity polarity) noexcept {
  return polarity == Polarity::zero_to_one ? "0->1" : "1->0";
}

namespace {

template <class... Ts> struct overloaded : Ts... { using Ts::operator()...; };
template <class... Ts> overloaded(Ts...) -> overloaded<Ts...>;

} // namespace

std::vector<std::string> problems(const Attachment &a, const regfile::Geometry &g) {
  std::vector<std::string> out;
  auto entry_ok = [&](unsigned e) {
    if (e >= g.entries)
      out.push_back(fmt::format("target entry {} >= {}", e, g.entries));
  };
  auto mask_ok = [&](Word m) {
    if (m == 0)
      out.emplace_back("bit mask is empty");
    if ((m & ~g.word_mask()) != 0)
      out.push_back(fmt::format("bit mask {:#x} exceeds word width", m));
  };
  auto port_ok = [&](unsigned p) {
    if (p >= g.read_ports)
      out.push_back(fmt::format("infected port {} >= {}", p, g.read_ports));
  };
  auto window_ok = [&](Cycle w) {
    if (w == 0)
      out.emplace_back("window_cycles must be >= 1");
  };
  std::visit(overloaded{
                 [&](const BcParams &p) {
                   entry_ok(p.target_entry);
                   mask_ok(p.bit_mask);
                 },
                 [&](const RpParams &p) {
                   entry_ok(p.target_entry);
                   mask_ok(p.bit_mask);
                   port_ok(p.infected_port);
                   window_ok(p.window_cycles);
                 },
                 [&](const LblParams &p) {
                   port_ok(p.infected_port);
                   window_ok(p.window_cycles);
                   if (p.bit_position >= g.word_bits)
                     out.push_back(fmt::format("bit_position {} >= {}", p.bit_position, g.word_bits));
                   if (p.group_index >= g.lbls_per_gbl)
                     out.push_back(fmt::format("group_index {} >= {}", p.group_index, g.lbls_per_gbl));
                 },
             },
             a.params);
  if (a.control.pattern.empty())
    out.emplace_back("control pattern is missing");
  return out;
}

PayloadSet::PayloadSet(std::vector<Attachment> attachments, regfile::Geometry geometry)
    : attachments_(std::move(attachments)), windows_(attachments_.size()), geometry_(geometry) {
  for (const auto &a : attachments_) {
    auto errs = problems(a, geometry_);
    if (!errs.empty())
      throw std::invalid_argument("invalid payload attachment: " + errs.front());
  }
}

std::vector<Activation> PayloadSet::on_bus_write(bool trigger_latched, VAddr addr, Word data,
                                                 Cycle cycle) {
  std::vector<Activation> out;
  if (!trigger_latched)
    return out;
  for (std::size_t i = 0; i < attachments_.size(); ++i) {
    const auto &a = attachments_[i];
    const bool match = a.control.pattern.matches(data);
    std::visit(overloaded{
                   [&](const BcParams &p) {
                     if (!match)
                       return;
                     const bool zeros = p.force_to != BcForce::ones && addr == a.control.addr_x;
                     const bool ones = p.force_to != BcForce::zeros && addr == a.control.addr_y;
                     if (zeros)
                       out.push_back({i, Kind::bc, addr, false, 0});
                     else if (ones)
                       out.push_back({i, Kind::bc, addr, true, 0});
                   },
                   [&](const RpParams &p) {
                     if (addr != a.control.addr_x)
                       return;
                     windows_[i] = {true, cycle + p.window_cycles, match};
                     out.push_back({i, Kind::rp, addr, match, cycle + p.window_cycles});
                   },
                   [&](const LblParams &p) {
                     if (addr != a.control.addr_y || !match)
                       return;
                     windows_[i] = {true, cycle + p.window_cycles, p.forced_value};
                     out.push_back({i, Kind::lbl, addr, p.forced_value, cycle + p.window_cycles});
                   },
               },
               a.params);
  }
  return out;
}

BcFire PayloadSet::apply_bc(const Attachment &attachment, const Activation &activation,
                            regfile::RegisterFile &rf) {
  const auto &p = std::get<BcParams>(attachment.params);
  BcFire fire{activation.index, p.target_entry, rf.stored(p.target_entry), 0};
  rf.force_bits(p.target_entry, p.bit_mask, activation.level);
  fire.after = rf.stored(p.target_entry);
  return fire;
}

std::vector<std::size_t> PayloadSet::expire(Cycle cycle) {
  std::vector<std::size_t> closed;
  for (std::size_t i = 0; i < windows_.size(); ++i) {
    if (windows_[i].active && cycle >= windows_[i].until) {
      windows_[i].active = false;
      closed.push_back(i);
    }
  }
  return closed;
}

bool PayloadSet::window_active(std::size_t index, Cycle cycle) const {
  const auto &w = windows_.at(index);
  return w.active && cycle < w.until;
}

Word PayloadSet::filter_read(unsigned port, unsigned entry, Word raw, Cycle cycle) const {
  Word value = raw;
  for (std::size_t i = 0; i < attachments_.size(); ++i) {
    if (!window_active(i, cycle))
      continue;
    const auto &a = attachments_[i];
    if (const auto *rp = std::get_if<RpParams>(&a.params)) {
      if (port == rp->infected_port && entry == rp->target_entry) {
        // Forced to NOT V_F on the masked bits.
        value = windows_[i].vf ? (value & ~rp->bit_mask) : (value | rp->bit_mask);
      }
    } else if (const auto *lbl = std::get_if<LblParams>(&a.params)) {
      if (port == lbl->infected_port && entry / geometry_.cells_per_lbl == lbl->group_index) {
        const Word bit = Word{1} << lbl->bit_position;
        value = lbl->forced_value ? (value | bit) : (value & ~bit);
      }
    }
  }
  return value;
}

namespace {

constexpr std::array<OverheadRecord, 6> kOverheadRows{{
    {Kind::bc, Polarity::zero_to_one, 0.079, 62.44, 0.056, "Kernel Leak", 24},
    {Kind::bc, Polarity::one_to_zero, 0.083, 8.37, 0.023, "Kernel Leak", 4},
    {Kind::rp, Polarity::zero_to_one, 12.93, 45.38, 0.048, "Kernel Leak", 6},
    {Kind::rp, Polarity::one_to_zero, 33.73, 112.34, 0.064, "Kernel Leak", 15},
    {Kind::lbl, Polarity::zero_to_one, 35.28, 57.54, 0.022, "DoS", 3},
    {Kind::lbl, Polarity::one_to_zero, 11.26, 24.57, 0.026, "DoS", 7},
}};

} // namespace

std::span<const OverheadRecord> table_rows() noexcept { return kOverheadRows; }

const OverheadRecord &table_row(Kind kind, Polarity polarity) {
  for (const auto &row : kOverheadRows)
    if (row.kind == kind && row.polarity == polarity)
      return row;
  throw UnknownVariant(fmt::format("no overhead row for kind {} polarity {}",
                                   static_cast<int>(kind), static_cast<int>(polarity)));
}

std::vector<OverheadRecord> overhead_report(std::span<const Attachment> attachments) {
  std::vector<OverheadRecord> out;
  for (const auto &a : attachments) {
    std::visit(overloaded{
                   [&](const BcParams &p) {
                     if (p.force_to != BcForce::zeros)
                       out.push_back(table_row(Kind::bc, Polarity::zero_to_one));
                     if (p.force_to != BcForce::ones)
                       out.push_back(table_row(Kind::bc, Polarity::one_to_zero));
                   },
                   [&](const RpParams &p) {
                     for (auto pol : p.overhead)
                       out.push_back(table_row(Kind::rp, pol));
                   },
                   [&](const LblParams &p) {
                     out.push_back(table_row(Kind::lbl, p.forced_value ? Polarity::zero_to_one
                                                                       : Polarity::one_to_zero));
                   },
               },
               a.params);
  }
  return out;
}

} // namespace rft::payload
