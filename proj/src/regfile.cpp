#include "rftrojan/regfile.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace rft::regfile {

void Geometry::validate() const {
  if (entries == 0 || word_bits == 0 || read_ports == 0 || write_ports == 0 || cells_per_lbl == 0 ||
      lbls_per_gbl == 0)
    throw std::invalid_argument("register file geometry fields must be >= 1");
  if (word_bits > 32)
    throw std::invalid_argument("word_bits above 32 is not supported");
  if (cells_per_lbl * lbls_per_gbl != entries)
    throw std::invalid_argument(fmt::format("cells_per_lbl x lbls_per_gbl = {} != entries {}",
                                            cells_per_lbl * lbls_per_gbl, entries));
}

unsigned lbl_group(unsigned entry, const Geometry &geometry) {
  if (entry >= geometry.entries)
    throw std::out_of_range(fmt::format("entry {} out of range", entry));
  return entry / geometry.cells_per_lbl;
}

WriteConflict::WriteConflict(unsigned entry)
    : std::runtime_error(fmt::format("write conflict on entry {}", entry)), entry_(entry) {}

RegisterFile::RegisterFile(Geometry geometry) : geometry_(geometry) {
  geometry_.validate();
  words_.assign(geometry_.entries, 0);
}

void RegisterFile::check_entry(unsigned entry) const {
  if (entry >= geometry_.entries)
    throw std::out_of_range(fmt::format("entry {} out of range", entry));
}

void RegisterFile::write(unsigned port, unsigned entry, Word data) {
  if (port >= geometry_.write_ports)
    throw std::out_of_range(fmt::format("write port {} out of range", port));
  check_entry(entry);
  const bool taken = std::any_of(pending_.begin(), pending_.end(),
                                 [entry](const PendingWrite &w) { return w.entry == entry; });
  if (taken)
    throw WriteConflict(entry);
  pending_.push_back({port, entry, data & geometry_.word_mask()});
}

Word RegisterFile::resolve(unsigned entry) const {
  check_entry(entry);
  for (const auto &w : pending_)
    if (w.entry == entry)
      return w.data;
  return words_[entry];
}

Word RegisterFile::read(unsigned port, unsigned entry, const ReadFilter *filter) const {
  if (port >= geometry_.read_ports)
    throw std::out_of_range(fmt::format("read port {} out of range", port));
  const Word raw = resolve(entry);
  if (filter == nullptr)
    return raw;
  return filter->filter_read(port, entry, raw, cycle_) & geometry_.word_mask();
}

void RegisterFile::force_bits(unsigned entry, Word mask, bool ones) {
  check_entry(entry);
  mask &= geometry_.word_mask();
  if (ones)
    words_[entry] |= mask;
  else
    words_[entry] &= ~mask;
}

std::vector<PendingWrite> RegisterFile::commit() {
  std::vector<PendingWrite> done;
  done.swap(pending_);
  for (const auto &w : done)
    words_[w.entry] = w.data;
  ++cycle_;
  return done;
}

} // namespace rft::regfile
