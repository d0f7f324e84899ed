#include "rftrojan/defense.hpp"

#include <numeric>

#include <fmt/format.h>

namespace rft::defense {

std::vector<unsigned> schedulable_ports(const VerifyConfig &config, unsigned read_ports) {
  std::vector<unsigned> ports;
  for (unsigned p = 0; p < read_ports; ++p)
    if (config.mode != VerifyMode::dedicated || p != config.reserved_port)
      ports.push_back(p);
  return ports;
}

std::string_view to_string(DetectionKind kind) noexcept {
  return kind == DetectionKind::rf_read_mismatch ? "RF_READ_MISMATCH" : "REGISTER_HASH_MISMATCH";
}

VerifyOutcome verified_read(const regfile::RegisterFile &rf, const regfile::ReadFilter *filter,
                            const VerifyConfig &config, unsigned primary_port, unsigned entry,
                            Word primary_value, std::span<std::uint8_t> busy, SplitMix64 &rng) {
  VerifyOutcome out;
  if (config.mode == VerifyMode::off)
    return out;

  std::optional<unsigned> port;
  if (config.mode == VerifyMode::dedicated) {
    port = config.reserved_port;
  } else {
    for (unsigned p = 0; p < busy.size(); ++p) {
      if (p == primary_port || busy[p])
        continue;
      if (config.port_pressure > 0.0 && rng.unit() < config.port_pressure)
        continue;
      port = p;
      break;
    }
  }
  if (!port) {
    out.skipped = true;
    return out;
  }

  busy[*port] = 1;
  out.verified = true;
  out.verify_port = *port;
  out.verify_value = rf.read(*port, entry, filter);
  if (out.verify_value != primary_value)
    out.detection = DetectionEvent{DetectionKind::rf_read_mismatch, entry, primary_port, *port,
                                   primary_value, out.verify_value};
  return out;
}

PufModel::PufModel(std::uint64_t seed, unsigned challenge_width, unsigned response_width)
    : key_(SplitMix64::mix(seed ^ 0xa0761d6478bd642full)), challenge_width_(challenge_width),
      response_width_(response_width) {
  if (challenge_width_ == 0 || challenge_width_ > 64 || response_width_ == 0 || response_width_ > 64)
    throw std::invalid_argument("PUF widths must lie in [1, 64]");
}

std::uint64_t PufModel::response(std::uint64_t challenge) const {
  if (challenge_width_ < 64 && (challenge >> challenge_width_) != 0)
    throw std::out_of_range(fmt::format("challenge {:#x} exceeds {} bits", challenge, challenge_width_));
  // Two keyed rounds of the SplitMix64 finalizer.
  std::uint64_t x = SplitMix64::mix(challenge ^ key_);
  x = SplitMix64::mix(x + key_ * 0x9e3779b97f4a7c15ull);
  if (response_width_ < 64)
    x &= (std::uint64_t{1} << response_width_) - 1;
  return x;
}

std::uint64_t digest(Word data, unsigned width) noexcept {
  if (width >= 32)
    return data;
  const std::uint64_t mask = (std::uint64_t{1} << width) - 1;
  std::uint64_t folded = 0;
  for (unsigned shift = 0; shift < 32; shift += width)
    folded ^= (static_cast<std::uint64_t>(data) >> shift) & mask;
  return folded;
}

MissingTag::MissingTag(unsigned entry)
    : std::runtime_error(fmt::format("protected entry {} read before any write", entry)) {}

HashShadowStore::HashShadowStore(std::set<unsigned> protected_entries)
    : protected_(std::move(protected_entries)) {}

std::uint64_t HashShadowStore::tag(const PufModel &puf, unsigned entry, Word data) const {
  return puf.response(entry) ^ digest(data, puf.response_width());
}

void HashShadowStore::hash_on_write(const PufModel &puf, unsigned entry, Word data) {
  if (!protects(entry))
    return;
  tags_[entry] = tag(puf, entry, data);
}

std::optional<DetectionEvent> HashShadowStore::check_on_read(const PufModel &puf, unsigned entry,
                                                             Word data_read, unsigned port) const {
  if (!protects(entry))
    return std::nullopt;
  auto it = tags_.find(entry);
  if (it == tags_.end())
    throw MissingTag(entry);
  if (tag(puf, entry, data_read) == it->second)
    return std::nullopt;
  return DetectionEvent{DetectionKind::register_hash_mismatch, entry, port, port, data_read,
                        it->second};
}

ObfuscationMap ObfuscationMap::identity(unsigned num_sets) {
  ObfuscationMap m;
  m.perm_.resize(num_sets);
  std::iota(m.perm_.begin(), m.perm_.end(), 0u);
  return m;
}

ObfuscationMap ObfuscationMap::from_seed(unsigned num_sets, std::uint64_t boot_seed) {
  ObfuscationMap m = identity(num_sets);
  SplitMix64 rng(boot_seed);
  for (unsigned i = num_sets; i > 1; --i) {
    const auto j = static_cast<unsigned>(rng.below(i));
    std::swap(m.perm_[i - 1], m.perm_[j]);
  }
  return m;
}

} // namespace rft::defense
