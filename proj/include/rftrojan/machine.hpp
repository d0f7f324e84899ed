#pragma once

// Minimal CPU and memory model around the register file: architectural
// registers mapped to RF entries, CPL in the CS entry, per-process page tables
// behind a fully associative TLB, a virtually indexed L1 whose write bus feeds
// the trigger and payload control logic, and processes with fork and context
// switch.
//
// Page-table convention: us_bit = 1 marks a KERNEL page (the reverse of x86's
// U/S encoding), and an access to such a page at CPL != 0 is a segfault.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rftrojan/common.hpp"
#include "rftrojan/defense.hpp"
#include "rftrojan/payload.hpp"
#include "rftrojan/regfile.hpp"
#include "rftrojan/trace.hpp"
#include "rftrojan/trigger.hpp"

namespace rft::machine {

inline constexpr unsigned kPageShift = 12;
inline constexpr std::uint64_t kPageSize = std::uint64_t{1} << kPageShift;

struct Pte {
  std::uint64_t vpn = 0;
  std::uint64_t pfn = 0;
  bool present = true;
  bool us_bit = false; ///< 1 = kernel page
  bool rw_bit = true;  ///< 0 = read-only
};

class PageTable {
public:
  void map(const Pte &pte) { entries_[pte.vpn] = pte; }
  const Pte *find(std::uint64_t vpn) const;
  const std::map<std::uint64_t, Pte> &entries() const noexcept { return entries_; }

private:
  std::map<std::uint64_t, Pte> entries_;
};

/// Fully associative, LRU. Capacity 0 disables it.
class Tlb {
public:
  explicit Tlb(unsigned capacity = 16) : capacity_(capacity) {}

  std::optional<Pte> lookup(std::uint64_t vpn);
  void insert(const Pte &pte);
  void flush() { lines_.clear(); }

  bool enabled() const noexcept { return capacity_ != 0; }
  std::uint64_t hits() const noexcept { return hits_; }
  std::uint64_t misses() const noexcept { return misses_; }

private:
  struct Line {
    Pte pte;
    std::uint64_t last_use;
  };
  unsigned capacity_;
  std::vector<Line> lines_;
  std::uint64_t clock_ = 0;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

enum class AccessStatus { ok, seg_fault, page_fault };
enum class FaultReason { none, kernel_page, read_only, not_present, invalid_cpl };
std::string_view to_string(FaultReason reason) noexcept;

struct Translation {
  AccessStatus status = AccessStatus::ok;
  FaultReason reason = FaultReason::none;
  std::uint64_t pfn = 0;
  std::uint64_t offset = 0;
  bool kernel_page = false;
  bool tlb_hit = false;
};

/// Page walk (through the TLB when enabled) plus the CPL x U/S x R/W check.
/// Throws std::invalid_argument unless cpl is 0 or 3.
Translation translate_and_check(const PageTable &table, Tlb &tlb, VAddr vaddr, bool is_write,
                                unsigned cpl);

enum class RegisterClass { segment, control, gpr };

struct RegisterSlot {
  std::string name;
  unsigned entry = 0;
  RegisterClass cls = RegisterClass::gpr;
};

struct RegisterMap {
  std::vector<RegisterSlot> slots;
  /// The CPL occupies CS bits [cpl_shift + 1 : cpl_shift].
  unsigned cpl_shift = 0;

  /// cs/ss/ds/es/fs/gs in entries 0-5, cr0-cr4 in 16-20, GPRs from 32.
  static RegisterMap x86_default();

  const RegisterSlot *find(std::string_view name) const noexcept;
  unsigned cs_entry() const;
  /// Segment and control entries.
  std::set<unsigned> protected_entries() const;
  std::vector<std::string> problems(const regfile::Geometry &geometry) const;
};

/// Boot value of a register for a process running at `cpl`.
Word default_register_value(const RegisterSlot &slot, unsigned cpl, Pid pid);

struct L1Config {
  unsigned num_sets = 64;
  unsigned line_size = 64;
};

class L1Cache {
public:
  L1Cache(L1Config config, std::optional<defense::ObfuscationMap> obfuscation);

  /// (vaddr / line_size) mod num_sets.
  unsigned set_index(VAddr vaddr) const noexcept {
    return static_cast<unsigned>((vaddr / config_.line_size) % config_.num_sets);
  }
  /// Set actually used after the optional per-boot permutation.
  unsigned physical_set(VAddr vaddr) const;

  const L1Config &config() const noexcept { return config_; }
  const std::optional<defense::ObfuscationMap> &obfuscation() const noexcept { return obfuscation_; }

private:
  L1Config config_;
  std::optional<defense::ObfuscationMap> obfuscation_;
};

enum class CplPortPolicy { fixed, per_process };
enum class ObfuscationMode { off, identity, seeded };

struct HashConfig {
  bool enabled = false;
  std::uint64_t puf_seed = 0;
  unsigned response_width = 32;
};

struct ObfuscationConfig {
  ObfuscationMode mode = ObfuscationMode::off;
  std::uint64_t boot_seed = 0;
};

struct DefenseConfig {
  defense::VerifyConfig verify;
  HashConfig hash;
  ObfuscationConfig obfuscation;
};

struct MachineConfig {
  regfile::Geometry geometry;
  VAddr kernel_base = 0xC0000000;
  unsigned address_bits = 32;
  L1Config l1;
  unsigned tlb_entries = 16;
  unsigned paging_port = 0;
  CplPortPolicy cpl_port_policy = CplPortPolicy::fixed;
  RegisterMap registers = RegisterMap::x86_default();
  DefenseConfig defense;
  /// ChargeSample period in cycles; 0 disables sampling.
  unsigned charge_sample_interval = 100;
  /// Seeds the background port-pressure draws.
  std::uint64_t seed = 1;
};

struct PageSpec {
  VAddr vaddr = 0;
  std::uint64_t count = 1;
  bool writable = true;
};

struct ProcessSpec {
  Pid pid = 1;
  unsigned cpl = 3;
  std::map<std::string, Word> registers;
  std::vector<PageSpec> pages;
};

enum class ProcessStatus { runnable, faulted, exited };
std::string_view to_string(ProcessStatus status) noexcept;

struct Process {
  Pid pid = 0;
  /// Privilege the OS assigned; CS is restored from it on every switch-in.
  unsigned cpl = 3;
  PageTable page_table;
  /// Segment and control values kept by the OS.
  std::map<unsigned, Word> os_record;
  /// GPR values saved at the last switch-out.
  std::map<unsigned, Word> saved;
  ProcessStatus status = ProcessStatus::runnable;
  unsigned read_port = 0;
  std::optional<Pid> parent;

  std::uint64_t kernel_bytes_read = 0;
  std::uint64_t seg_faults = 0;
  std::uint64_t page_faults = 0;
  FaultReason fault_reason = FaultReason::none;
};

struct AccessOutcome {
  AccessStatus status = AccessStatus::ok;
  FaultReason reason = FaultReason::none;
  unsigned cpl = 3;
  Word data = 0;
  bool kernel_page = false;
};

struct MachineStats {
  std::uint64_t verified_reads = 0;
  std::uint64_t skipped_verifications = 0;
  std::uint64_t read_mismatch_detections = 0;
  std::uint64_t hash_detections = 0;
  std::uint64_t bc_fires = 0;
  std::uint64_t activations = 0;
  std::uint64_t rf_reads = 0;
  double max_charge_v = 0.0;
  std::optional<std::uint64_t> hammers_at_latch;
  std::optional<Cycle> latch_cycle;
  std::uint64_t resets = 0;
  std::uint64_t total_set_hammers = 0;
};

class Machine {
public:
  Machine(MachineConfig config, trigger::TriggerConfig trigger_config,
          std::vector<payload::Attachment> attachments, std::vector<PageSpec> kernel_pages,
          trace::Trace &trace);

  Machine(const Machine &) = delete;
  Machine &operator=(const Machine &) = delete;

  Process &add_process(const ProcessSpec &spec);
  /// Stores an initial memory word. Kernel addresses resolve through the
  /// shared kernel mapping, user addresses through `pid`.
  void poke(VAddr vaddr, Word value, std::optional<Pid> pid = std::nullopt);
  std::optional<Word> peek(VAddr vaddr, Pid pid) const;

  /// Trigger and payload-control phases: consumes last cycle's bus write.
  void begin_cycle(Cycle cycle);
  /// Write-commit and defense phases.
  void end_cycle();

  void context_switch(Pid next);
  AccessOutcome cpu_write(Pid pid, VAddr vaddr, Word data);
  AccessOutcome cpu_read(Pid pid, VAddr vaddr);
  /// CS read on the process's paging port, payload filters applied.
  unsigned read_cpl(Pid pid);
  Word read_register(Pid pid, std::string_view name, std::optional<Word> expect = std::nullopt);
  std::vector<Pid> fork(Pid parent, unsigned n);
  void exit_process(Pid pid);

  Process &process(Pid pid);
  const Process &process(Pid pid) const;
  const std::vector<Process> &processes() const noexcept { return processes_; }
  std::optional<Pid> resident() const noexcept { return resident_; }
  bool switched_this_cycle() const noexcept { return switched_this_cycle_; }
  bool bus_pending() const noexcept { return bus_.has_value(); }
  Cycle cycle() const noexcept { return cycle_; }

  const trigger::TriggerCell &trigger() const noexcept { return trigger_; }
  const regfile::RegisterFile &regfile() const noexcept { return rf_; }
  const payload::PayloadSet &payloads() const noexcept { return payloads_; }
  const L1Cache &l1() const noexcept { return l1_; }
  const Tlb &tlb() const noexcept { return tlb_; }
  const MachineConfig &config() const noexcept { return config_; }
  const MachineStats &stats() const noexcept { return stats_; }
  unsigned monitored_set() const noexcept { return monitored_set_; }
  std::span<const unsigned> schedulable_ports() const noexcept { return ports_; }

private:
  struct BusWrite {
    VAddr vaddr;
    Word data;
    std::uint64_t paddr;
  };

  void emit(trace::Kind kind, std::vector<trace::Field> fields);
  Word checked_read(Pid pid, unsigned port, unsigned entry);
  AccessOutcome access(Pid pid, VAddr vaddr, bool is_write, Word data);
  void restore_registers(const Process &next);
  std::uint64_t allocate_frame() { return next_frame_++; }
  void map_pages(PageTable &table, const std::vector<PageSpec> &pages);

  MachineConfig config_;
  trace::Trace &trace_;
  regfile::RegisterFile rf_;
  trigger::TriggerCell trigger_;
  payload::PayloadSet payloads_;
  L1Cache l1_;
  Tlb tlb_;
  std::optional<defense::PufModel> puf_;
  std::optional<defense::HashShadowStore> shadow_;
  SplitMix64 pressure_rng_;

  std::vector<PageSpec> kernel_pages_;
  PageTable kernel_table_;
  std::vector<Process> processes_;
  std::unordered_map<std::uint64_t, Word> memory_;
  std::uint64_t next_frame_ = 0x100;
  Pid next_pid_ = 1;

  std::vector<unsigned> ports_;
  unsigned monitored_set_ = 0;
  std::optional<unsigned> reset_set_;
  std::optional<Pid> resident_;
  std::optional<BusWrite> bus_;
  std::vector<std::uint8_t> busy_;
  std::vector<trace::Event> defense_events_;
  bool switched_this_cycle_ = false;
  Cycle cycle_ = 0;
  MachineStats stats_;
};

} // namespace rft::machine
