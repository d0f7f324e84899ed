#pragma once

// Countermeasures: multi-port read verification, a PUF-keyed hash shadow store
// for control and segment registers, and per-boot L1 set-index obfuscation.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "rftrojan/common.hpp"
#include "rftrojan/regfile.hpp"

namespace rft::defense {

enum class VerifyMode { off, dedicated, opportunistic };

struct VerifyConfig {
  VerifyMode mode = VerifyMode::off;
  /// Port taken out of the schedulable pool in dedicated mode.
  unsigned reserved_port = 3;
  /// Probability that a candidate port is busy with unrelated work when an
  /// opportunistic verification looks for one.
  double port_pressure = 0.0;
};

/// Read ports the machine may schedule primary reads on.
std::vector<unsigned> schedulable_ports(const VerifyConfig &config, unsigned read_ports);

enum class DetectionKind { rf_read_mismatch, register_hash_mismatch };
std::string_view to_string(DetectionKind kind) noexcept;

struct DetectionEvent {
  DetectionKind kind = DetectionKind::rf_read_mismatch;
  unsigned entry = 0;
  unsigned port = 0;
  /// Verification port, or the port count for hash detections.
  unsigned other_port = 0;
  Word primary = 0;
  /// Verifier's word, or the low bits of the expected tag for hash detections.
  std::uint64_t other = 0;
};

struct VerifyOutcome {
  bool verified = false;
  bool skipped = false;
  unsigned verify_port = 0;
  Word verify_value = 0;
  std::optional<DetectionEvent> detection;
};

/// Re-reads `entry` on a second port in the same cycle and compares with the
/// primary word. `busy` holds one flag per read port for this cycle and is
/// updated with the port the verification consumed. `rng` draws background
/// port occupancy in opportunistic mode.
VerifyOutcome verified_read(const regfile::RegisterFile &rf, const regfile::ReadFilter *filter,
                            const VerifyConfig &config, unsigned primary_port, unsigned entry,
                            Word primary_value, std::span<std::uint8_t> busy, SplitMix64 &rng);

/// Secret-keyed deterministic challenge/response function.
class PufModel {
public:
  PufModel(std::uint64_t seed, unsigned challenge_width = 8, unsigned response_width = 32);

  /// Throws std::out_of_range if the challenge does not fit challenge_width.
  std::uint64_t response(std::uint64_t challenge) const;

  unsigned challenge_width() const noexcept { return challenge_width_; }
  unsigned response_width() const noexcept { return response_width_; }

private:
  std::uint64_t key_;
  unsigned challenge_width_;
  unsigned response_width_;
};

/// Public folding of a word to `width` bits: XOR of width-sized chunks.
std::uint64_t digest(Word data, unsigned width) noexcept;

class MissingTag : public std::runtime_error {
public:
  explicit MissingTag(unsigned entry);
};

class HashShadowStore {
public:
  explicit HashShadowStore(std::set<unsigned> protected_entries);

  bool protects(unsigned entry) const noexcept { return protected_.count(entry) != 0; }

  /// Records the tag for a write; ignores unprotected entries.
  void hash_on_write(const PufModel &puf, unsigned entry, Word data);

  /// Throws MissingTag if a protected entry has never been written.
  std::optional<DetectionEvent> check_on_read(const PufModel &puf, unsigned entry, Word data_read,
                                              unsigned port) const;

  std::size_t tag_count() const noexcept { return tags_.size(); }
  bool has_tag(unsigned entry) const noexcept { return tags_.count(entry) != 0; }

private:
  std::uint64_t tag(const PufModel &puf, unsigned entry, Word data) const;

  std::set<unsigned> protected_;
  std::map<unsigned, std::uint64_t> tags_;
};

/// Bijection over L1 set indices, fixed for one boot.
class ObfuscationMap {
public:
  static ObfuscationMap identity(unsigned num_sets);
  static ObfuscationMap from_seed(unsigned num_sets, std::uint64_t boot_seed);

  unsigned obfuscate_index(unsigned set_index) const { return perm_.at(set_index); }
  unsigned num_sets() const noexcept { return static_cast<unsigned>(perm_.size()); }
  std::span<const unsigned> permutation() const noexcept { return perm_; }

private:
  std::vector<unsigned> perm_;
};

} // namespace rft::defense
