#pragma once

// Behavioral multi-ported register file. Storage is plain bits; the domino read
// timing is collapsed into a single evaluation point per read where payload
// filters are applied.

#include <span>
#include <stdexcept>
#include <vector>

#include "rftrojan/common.hpp"

namespace rft::regfile {

struct Geometry {
  unsigned entries = 256;
  unsigned word_bits = 32;
  unsigned read_ports = 4;
  unsigned write_ports = 4;
  unsigned cells_per_lbl = 16;
  unsigned lbls_per_gbl = 16;

  /// Throws std::invalid_argument on a malformed geometry.
  void validate() const;
  Word word_mask() const noexcept {
    return word_bits >= 32 ? ~Word{0} : static_cast<Word>((Word{1} << word_bits) - 1);
  }
};

/// Index of the local bitline shared by `entry`. Throws std::out_of_range.
unsigned lbl_group(unsigned entry, const Geometry &geometry = {});

class WriteConflict : public std::runtime_error {
public:
  explicit WriteConflict(unsigned entry);
  unsigned entry() const noexcept { return entry_; }

private:
  unsigned entry_;
};

/// Hook applied to a read after bypass resolution.
class ReadFilter {
public:
  virtual ~ReadFilter() = default;
  virtual Word filter_read(unsigned port, unsigned entry, Word raw, Cycle cycle) const = 0;
};

struct PendingWrite {
  unsigned port = 0;
  unsigned entry = 0;
  Word data = 0;
};

class RegisterFile {
public:
  explicit RegisterFile(Geometry geometry = {});

  /// Queues a write that commits at the end of the current cycle.
  /// Throws WriteConflict if the entry already has a pending write this cycle.
  void write(unsigned port, unsigned entry, Word data);

  /// Reads through `port`: same-cycle pending data wins, then `filter` runs.
  Word read(unsigned port, unsigned entry, const ReadFilter *filter = nullptr) const;

  /// Bypass-resolved value without any filter.
  Word resolve(unsigned entry) const;
  /// Committed storage, ignoring pending writes.
  Word stored(unsigned entry) const { return words_.at(entry); }

  /// Forces the masked stored bits to 0 or 1 (retention corruption).
  void force_bits(unsigned entry, Word mask, bool ones);

  /// Commits pending writes in issue order, advances the cycle, and returns
  /// what was committed.
  std::vector<PendingWrite> commit();

  Cycle cycle() const noexcept { return cycle_; }
  const Geometry &geometry() const noexcept { return geometry_; }
  std::span<const Word> words() const noexcept { return words_; }
  std::span<const PendingWrite> pending() const noexcept { return pending_; }

private:
  void check_entry(unsigned entry) const;

  Geometry geometry_;
  std::vector<Word> words_;
  std::vector<PendingWrite> pending_;
  Cycle cycle_ = 0;
};

} // namespace rft::regfile
