#include "rftrojan/machine.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

namespace rft::machine {

using trace::Field;
using trace::Hex;
using trace::Kind;

const Pte *PageTable::find(std::uint64_t vpn) const {
  auto it = entries_.find(vpn);
  return it == entries_.end() ? nullptr : &it->second;
}

std::optional<Pte> Tlb::lookup(std::uint64_t vpn) {
  if (!enabled())
    return std::nullopt;
  ++clock_;
  for (auto &line : lines_) {
    if (line.pte.vpn == vpn) {
      line.last_use = clock_;
      ++hits_;
      return line.pte;
    }
  }
  ++misses_;
  return std::nullopt;
}

void Tlb::insert(const Pte &pte) {
  if (!enabled())
    return;
  ++clock_;
  if (lines_.size() < capacity_) {
    lines_.push_back({pte, clock_});
    return;
  }
  auto victim = std::min_element(lines_.begin(), lines_.end(),
                                 [](const Line &a, const Line &b) { return a.last_use < b.last_use; });
  *victim = {pte, clock_};
}

std::string_view to_string(FaultReason reason) noexcept {
  switch (reason) {
  case FaultReason::none: return "none";
  case FaultReason::kernel_page: return "kernel_page";
  case FaultReason::read_only: return "read_only";
  case FaultReason::not_present: return "not_present";
  case FaultReason::invalid_cpl: return "invalid_cpl";
  }
  return "?";
}

std::string_view to_string(ProcessStatus status) noexcept {
  switch (status) {
  case ProcessStatus::runnable: return "runnable";
  case ProcessStatus::faulted: return "faulted";
  case ProcessStatus::exited: return "exited";
  }
  return "?";
}

Translation translate_and_check(const PageTable &table, Tlb &tlb, VAddr vaddr, bool is_write,
                                unsigned cpl) {
  if (cpl != 0 && cpl != 3)
    throw std::invalid_argument(fmt::format("cpl {} is not a modeled ring", cpl));
  Translation t;
  const std::uint64_t vpn = vaddr >> kPageShift;
  t.offset = vaddr & (kPageSize - 1);

  std::optional<Pte> pte = tlb.lookup(vpn);
  t.tlb_hit = pte.has_value();
  if (!pte) {
    const Pte *walked = table.find(vpn);
    if (walked == nullptr || !walked->present) {
      t.status = AccessStatus::page_fault;
      t.reason = FaultReason::not_present;
      return t;
    }
    pte = *walked;
    tlb.insert(*pte);
  }
  t.kernel_page = pte->us_bit;
  t.pfn = pte->pfn;
  if (pte->us_bit && cpl != 0) {
    t.status = AccessStatus::seg_fault;
    t.reason = FaultReason::kernel_page;
  } else if (is_write && !pte->rw_bit) {
    t.status = AccessStatus::seg_fault;
    t.reason = FaultReason::read_only;
  }
  return t;
}

RegisterMap RegisterMap::x86_default() {
  RegisterMap m;
  unsigned e = 0;
  for (const char *name : {"cs", "ss", "ds", "es", "fs", "gs"})
    m.slots.push_back({name, e++, RegisterClass::segment});
  e = 16;
  for (const char *name : {"cr0", "cr1", "cr2", "cr3", "cr4"})
    m.slots.push_back({name, e++, RegisterClass::control});
  e = 32;
  for (const char *name : {"eax", "ebx", "ecx", "edx", "esi", "edi", "esp", "ebp", "eip"})
    m.slots.push_back({name, e++, RegisterClass::gpr});
  return m;
}

const RegisterSlot *RegisterMap::find(std::string_view name) const noexcept {
  for (const auto &s : slots)
    if (s.name == name)
      return &s;
  return nullptr;
}

unsigned RegisterMap::cs_entry() const {
  const RegisterSlot *cs = find("cs");
  if (cs == nullptr)
    throw std::logic_error("register map has no cs entry");
  return cs->entry;
}

std::set<unsigned> RegisterMap::protected_entries() const {
  std::set<unsigned> out;
  for (const auto &s : slots)
    if (s.cls != RegisterClass::gpr)
      out.insert(s.entry);
  return out;
}

std::vector<std::string> RegisterMap::problems(const regfile::Geometry &geometry) const {
  std::vector<std::string> out;
  std::set<unsigned> seen_entries;
  std::set<std::string> seen_names;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto &s = slots[i];
    if (s.entry >= geometry.entries)
      out.push_back(fmt::format("{}: entry {} >= {}", s.name, s.entry, geometry.entries));
    if (!seen_entries.insert(s.entry).second)
      out.push_back(fmt::format("{}: entry {} mapped twice", s.name, s.entry));
    if (!seen_names.insert(s.name).second)
      out.push_back(fmt::format("{}: name mapped twice", s.name));
  }
  if (find("cs") == nullptr)
    out.emplace_back("cs is not mapped");
  else if (const RegisterSlot *cs = find("cs"); cs->cls != RegisterClass::segment)
    out.emplace_back("cs must be a segment register");
  if (cpl_shift + 2 > geometry.word_bits)
    out.push_back(fmt::format("cpl field at bit {} does not fit the word", cpl_shift));
  return out;
}

Word default_register_value(const RegisterSlot &slot, unsigned cpl, Pid pid) {
  const bool user = cpl == 3;
  if (slot.name == "cs")
    return user ? 0x23 : 0x10;
  if (slot.cls == RegisterClass::segment)
    return user ? 0x2b : 0x18;
  if (slot.name == "cr0")
    return 0x80050033;
  if (slot.name == "cr3")
    return 0x00100000u + static_cast<Word>(pid) * 0x1000u;
  if (slot.name == "cr4")
    return 0x000006f0;
  if (slot.name == "esp")
    return 0xbffff000;
  if (slot.name == "eip")
    return 0x08048000;
  return 0;
}

L1Cache::L1Cache(L1Config config, std::optional<defense::ObfuscationMap> obfuscation)
    : config_(config), obfuscation_(std::move(obfuscation)) {
  auto pow2 = [](unsigned v) { return v != 0 && (v & (v - 1)) == 0; };
  if (!pow2(config_.num_sets) || !pow2(config_.line_size))
    throw std::invalid_argument("L1 num_sets and line_size must be powers of two");
  if (obfuscation_ && obfuscation_->num_sets() != config_.num_sets)
    throw std::invalid_argument("obfuscation map size differs from L1 set count");
}

unsigned L1Cache::physical_set(VAddr vaddr) const {
  const unsigned s = set_index(vaddr);
  return obfuscation_ ? obfuscation_->obfuscate_index(s) : s;
}

namespace {

std::optional<defense::ObfuscationMap> make_obfuscation(const MachineConfig &c) {
  switch (c.defense.obfuscation.mode) {
  case ObfuscationMode::off: return std::nullopt;
  case ObfuscationMode::identity: return defense::ObfuscationMap::identity(c.l1.num_sets);
  case ObfuscationMode::seeded:
    return defense::ObfuscationMap::from_seed(c.l1.num_sets, c.defense.obfuscation.boot_seed);
  }
  return std::nullopt;
}

std::int64_t i64(std::uint64_t v) { return static_cast<std::int64_t>(v); }

} // namespace

Machine::Machine(MachineConfig config, trigger::TriggerConfig trigger_config,
                 std::vector<payload::Attachment> attachments, std::vector<PageSpec> kernel_pages,
                 trace::Trace &trace)
    : config_(std::move(config)), trace_(trace), rf_(config_.geometry),
      trigger_(std::move(trigger_config)), payloads_(std::move(attachments), config_.geometry),
      l1_(config_.l1, make_obfuscation(config_)), tlb_(config_.tlb_entries),
      pressure_rng_(derive_seed(config_.seed, 3)), kernel_pages_(std::move(kernel_pages)) {
  const auto &g = config_.geometry;
  auto errs = config_.registers.problems(g);
  if (!errs.empty())
    throw std::invalid_argument("register map: " + errs.front());
  if (config_.paging_port >= g.read_ports)
    throw std::invalid_argument("paging_port out of range");
  const auto &verify = config_.defense.verify;
  if (verify.mode == defense::VerifyMode::dedicated) {
    if (verify.reserved_port >= g.read_ports)
      throw std::invalid_argument("reserved_port out of range");
    if (verify.reserved_port == config_.paging_port)
      throw std::invalid_argument("reserved_port must differ from paging_port");
  }
  ports_ = defense::schedulable_ports(verify, g.read_ports);
  busy_.assign(g.read_ports, 0);

  if (config_.defense.hash.enabled) {
    puf_.emplace(config_.defense.hash.puf_seed, 8, config_.defense.hash.response_width);
    shadow_.emplace(config_.registers.protected_entries());
  }

  map_pages(kernel_table_, kernel_pages_);
  monitored_set_ = l1_.set_index(trigger_.config().set_address);
  if (trigger_.config().reset_address)
    reset_set_ = l1_.set_index(*trigger_.config().reset_address);
}

void Machine::map_pages(PageTable &table, const std::vector<PageSpec> &pages) {
  for (const auto &spec : pages) {
    for (std::uint64_t i = 0; i < spec.count; ++i) {
      const VAddr va = (spec.vaddr & ~(kPageSize - 1)) + i * kPageSize;
      const std::uint64_t vpn = va >> kPageShift;
      if (table.find(vpn) != nullptr)
        continue;
      table.map({vpn, allocate_frame(), true, va >= config_.kernel_base, spec.writable});
    }
  }
}

Process &Machine::add_process(const ProcessSpec &spec) {
  if (spec.cpl != 0 && spec.cpl != 3)
    throw std::invalid_argument("process cpl must be 0 or 3");
  for (const auto &p : processes_)
    if (p.pid == spec.pid)
      throw std::invalid_argument(fmt::format("duplicate pid {}", spec.pid));
  Process p;
  p.pid = spec.pid;
  p.cpl = spec.cpl;
  p.read_port = config_.paging_port;
  p.page_table = kernel_table_;
  map_pages(p.page_table, spec.pages);
  for (const auto &slot : config_.registers.slots) {
    Word v = default_register_value(slot, spec.cpl, spec.pid);
    if (auto it = spec.registers.find(slot.name); it != spec.registers.end())
      v = it->second;
    if (slot.cls == RegisterClass::gpr)
      p.saved[slot.entry] = v;
    else
      p.os_record[slot.entry] = v;
  }
  for (const auto &[name, _] : spec.registers)
    if (config_.registers.find(name) == nullptr)
      throw std::invalid_argument(fmt::format("pid {}: unknown register {}", spec.pid, name));
  next_pid_ = std::max(next_pid_, spec.pid + 1);
  processes_.push_back(std::move(p));
  return processes_.back();
}

Process &Machine::process(Pid pid) {
  for (auto &p : processes_)
    if (p.pid == pid)
      return p;
  throw std::out_of_range(fmt::format("no process {}", pid));
}

const Process &Machine::process(Pid pid) const {
  for (const auto &p : processes_)
    if (p.pid == pid)
      return p;
  throw std::out_of_range(fmt::format("no process {}", pid));
}

void Machine::poke(VAddr vaddr, Word value, std::optional<Pid> pid) {
  const PageTable &table = pid ? process(*pid).page_table : kernel_table_;
  const Pte *pte = table.find(vaddr >> kPageShift);
  if (pte == nullptr)
    throw std::invalid_argument(fmt::format("memory init at {:#x}: address not mapped", vaddr));
  memory_[(pte->pfn << kPageShift) | (vaddr & (kPageSize - 4))] = value;
}

std::optional<Word> Machine::peek(VAddr vaddr, Pid pid) const {
  const Pte *pte = process(pid).page_table.find(vaddr >> kPageShift);
  if (pte == nullptr)
    return std::nullopt;
  auto it = memory_.find((pte->pfn << kPageShift) | (vaddr & (kPageSize - 4)));
  return it == memory_.end() ? Word{0} : it->second;
}

void Machine::emit(Kind kind, std::vector<Field> fields) {
  trace_.push({cycle_, kind, std::move(fields)});
}

void Machine::begin_cycle(Cycle cycle) {
  if (cycle != rf_.cycle())
    throw std::logic_error(fmt::format("cycle {} out of step with register file cycle {}", cycle,
                                       rf_.cycle()));
  cycle_ = cycle;
  switched_this_cycle_ = false;
  std::fill(busy_.begin(), busy_.end(), 0);
  const bool rec = trace_.recording();

  // Trigger phase.
  const auto &tc = trigger_.config();
  trigger::CycleEvent ev = trigger::CycleEvent::idle;
  if (bus_) {
    const unsigned set = l1_.physical_set(bus_->vaddr);
    if (set == monitored_set_ && tc.set_pattern.matches(bus_->data))
      ev = trigger::CycleEvent::hammer_set;
    else if (reset_set_ && set == *reset_set_ && tc.reset_pattern.matches(bus_->data))
      ev = trigger::CycleEvent::hammer_reset;
  }
  const bool latched_before = trigger_.latched();
  const std::uint32_t resets_before = trigger_.reset_hammers();
  auto transition = trigger_.observe_cycle(ev);
  if (ev == trigger::CycleEvent::hammer_set) {
    ++stats_.total_set_hammers;
    if (rec)
      emit(Kind::HammerObserved, {{"cell", std::string("set")},
                                  {"vaddr", Hex{static_cast<Word>(bus_->vaddr)}},
                                  {"count", i64(trigger_.hammers())},
                                  {"charge", trigger_.charge_v()}});
  } else if (ev == trigger::CycleEvent::hammer_reset && rec) {
    emit(Kind::HammerObserved,
         {{"cell", std::string("reset")},
          {"vaddr", Hex{static_cast<Word>(bus_->vaddr)}},
          {"count", i64(transition ? resets_before + 1 : trigger_.reset_hammers())},
          {"charge", trigger_.reset_charge_v()}});
  }
  if (transition == trigger::Transition::triggered) {
    stats_.hammers_at_latch = trigger_.hammers();
    stats_.latch_cycle = cycle;
    if (rec)
      emit(Kind::Triggered, {{"hammers", i64(trigger_.hammers())}, {"charge", trigger_.charge_v()}});
  } else if (transition == trigger::Transition::reset) {
    ++stats_.resets;
    if (rec)
      emit(Kind::Reset, {{"reset_hammers", i64(resets_before + 1)}});
  }
  stats_.max_charge_v = std::max(stats_.max_charge_v, trigger_.charge_v());
  if (rec && config_.charge_sample_interval != 0 && cycle % config_.charge_sample_interval == 0)
    emit(Kind::ChargeSample, {{"charge", trigger_.charge_v()},
                              {"reset_charge", trigger_.reset_charge_v()},
                              {"latched", i64(trigger_.latched())}});

  // Payload-control phase.
  for (std::size_t idx : payloads_.expire(cycle))
    if (rec)
      emit(Kind::WindowClose,
           {{"payload", i64(idx)},
            {"kind", std::string(payload::to_string(payloads_.attachments()[idx].kind()))}});
  if (bus_) {
    for (const auto &act : payloads_.on_bus_write(latched_before, bus_->vaddr, bus_->data, cycle)) {
      ++stats_.activations;
      const std::string kind(payload::to_string(act.kind));
      if (rec)
        emit(Kind::PayloadArmed, {{"payload", i64(act.index)},
                                  {"kind", kind},
                                  {"vaddr", Hex{static_cast<Word>(act.addr)}},
                                  {"level", i64(act.level)}});
      if (act.kind == payload::Kind::bc) {
        ++stats_.bc_fires;
        auto fire = payload::PayloadSet::apply_bc(payloads_.attachments()[act.index], act, rf_);
        if (rec)
          emit(Kind::PayloadFired, {{"payload", i64(fire.index)},
                                    {"entry", i64(fire.entry)},
                                    {"before", Hex{fire.before}},
                                    {"after", Hex{fire.after}}});
      } else if (rec) {
        emit(Kind::WindowOpen, {{"payload", i64(act.index)}, {"kind", kind}, {"until", i64(act.until)}});
      }
    }
    memory_[bus_->paddr] = bus_->data;
    bus_.reset();
  }
}

void Machine::end_cycle() {
  const bool rec = trace_.recording();
  for (const auto &w : rf_.commit())
    if (rec)
      emit(Kind::RfWrite, {{"port", i64(w.port)}, {"entry", i64(w.entry)}, {"value", Hex{w.data}}});
  for (auto &e : defense_events_)
    trace_.push(std::move(e));
  defense_events_.clear();
}

Word Machine::checked_read(Pid pid, unsigned port, unsigned entry) {
  busy_[port] = 1;
  ++stats_.rf_reads;
  const Word raw = rf_.resolve(entry);
  const Word value = rf_.read(port, entry, &payloads_);
  const bool rec = trace_.recording();
  if (rec)
    emit(Kind::RfRead, {{"pid", i64(pid)},
                        {"port", i64(port)},
                        {"entry", i64(entry)},
                        {"raw", Hex{raw}},
                        {"value", Hex{value}}});

  auto detection_event = [&](const defense::DetectionEvent &d) {
    trace::Event ev{cycle_, Kind::Detection, {}};
    ev.fields = {{"defense", std::string(defense::to_string(d.kind))},
                 {"pid", i64(pid)},
                 {"port", i64(d.port)},
                 {"entry", i64(d.entry)},
                 {"value", Hex{d.primary}}};
    if (d.kind == defense::DetectionKind::rf_read_mismatch) {
      ev.fields.push_back({"verify_port", i64(d.other_port)});
      ev.fields.push_back({"verify_value", Hex{static_cast<Word>(d.other)}});
    }
    return ev;
  };

  const auto &verify = config_.defense.verify;
  if (verify.mode != defense::VerifyMode::off) {
    auto out = defense::verified_read(rf_, &payloads_, verify, port, entry, value, busy_, pressure_rng_);
    if (out.verified)
      ++stats_.verified_reads;
    if (out.skipped) {
      ++stats_.skipped_verifications;
      if (rec)
        defense_events_.push_back(
            {cycle_, Kind::Skipped, {{"pid", i64(pid)}, {"port", i64(port)}, {"entry", i64(entry)}}});
    }
    if (out.detection) {
      ++stats_.read_mismatch_detections;
      if (rec)
        defense_events_.push_back(detection_event(*out.detection));
    }
  }
  if (shadow_) {
    if (auto d = shadow_->check_on_read(*puf_, entry, value, port)) {
      ++stats_.hash_detections;
      if (rec)
        defense_events_.push_back(detection_event(*d));
    }
  }
  return value;
}

unsigned Machine::read_cpl(Pid pid) {
  const Process &p = process(pid);
  const unsigned port = p.read_port;
  const Word cs = checked_read(pid, port, config_.registers.cs_entry());
  const unsigned cpl = (cs >> config_.registers.cpl_shift) & 0x3u;
  if (trace_.recording())
    emit(Kind::CplRead, {{"pid", i64(pid)}, {"port", i64(port)}, {"cpl", i64(cpl)}});
  return cpl;
}

Word Machine::read_register(Pid pid, std::string_view name, std::optional<Word> expect) {
  const RegisterSlot *slot = config_.registers.find(name);
  if (slot == nullptr)
    throw std::invalid_argument(fmt::format("unknown register {}", name));
  const Word v = checked_read(pid, process(pid).read_port, slot->entry);
  if (trace_.recording()) {
    std::vector<Field> f{{"pid", i64(pid)}, {"name", std::string(name)}, {"value", Hex{v}}};
    if (expect) {
      f.push_back({"expect", Hex{*expect}});
      f.push_back({"match", i64(v == *expect)});
    }
    emit(Kind::RegisterRead, std::move(f));
  }
  return v;
}

AccessOutcome Machine::access(Pid pid, VAddr vaddr, bool is_write, Word data) {
  AccessOutcome out;
  out.cpl = read_cpl(pid);
  Process &p = process(pid);
  const bool rec = trace_.recording();
  auto fault = [&](AccessStatus status, FaultReason reason) {
    out.status = status;
    out.reason = reason;
    p.status = ProcessStatus::faulted;
    p.fault_reason = reason;
    if (status == AccessStatus::page_fault) {
      ++p.page_faults;
      if (rec)
        emit(Kind::PageFault, {{"pid", i64(pid)}, {"vaddr", Hex{static_cast<Word>(vaddr)}}});
    } else {
      ++p.seg_faults;
      if (rec)
        emit(Kind::SegFault, {{"pid", i64(pid)},
                              {"vaddr", Hex{static_cast<Word>(vaddr)}},
                              {"reason", std::string(to_string(reason))},
                              {"cpl", i64(out.cpl)}});
    }
    return out;
  };

  if (out.cpl != 0 && out.cpl != 3)
    return fault(AccessStatus::seg_fault, FaultReason::invalid_cpl);
  const Translation t = translate_and_check(p.page_table, tlb_, vaddr, is_write, out.cpl);
  if (t.status != AccessStatus::ok)
    return fault(t.status, t.reason);

  out.kernel_page = t.kernel_page;
  const std::uint64_t paddr = (t.pfn << kPageShift) | (t.offset & ~std::uint64_t{3});
  if (is_write) {
    if (bus_)
      throw std::logic_error("two L1 writes issued in one cycle");
    bus_ = BusWrite{vaddr, data, paddr};
    out.data = data;
  } else {
    auto it = memory_.find(paddr);
    out.data = it == memory_.end() ? 0 : it->second;
    if (t.kernel_page && p.cpl == 3)
      p.kernel_bytes_read += 4;
  }
  if (rec)
    emit(Kind::AccessOk, {{"pid", i64(pid)},
                          {"op", std::string(is_write ? "write" : "read")},
                          {"vaddr", Hex{static_cast<Word>(vaddr)}},
                          {"data", Hex{out.data}},
                          {"kernel", i64(t.kernel_page)},
                          {"tlb", std::string(!tlb_.enabled() ? "off" : t.tlb_hit ? "hit" : "miss")}});
  return out;
}

AccessOutcome Machine::cpu_write(Pid pid, VAddr vaddr, Word data) {
  if (process(pid).status != ProcessStatus::runnable)
    throw std::logic_error(fmt::format("pid {} is not runnable", pid));
  return access(pid, vaddr, true, data);
}

AccessOutcome Machine::cpu_read(Pid pid, VAddr vaddr) {
  if (process(pid).status != ProcessStatus::runnable)
    throw std::logic_error(fmt::format("pid {} is not runnable", pid));
  return access(pid, vaddr, false, 0);
}

void Machine::restore_registers(const Process &next) {
  unsigned i = 0;
  for (const auto &slot : config_.registers.slots) {
    const Word v = slot.cls == RegisterClass::gpr ? next.saved.at(slot.entry)
                                                  : next.os_record.at(slot.entry);
    rf_.write(i++ % config_.geometry.write_ports, slot.entry, v);
    if (shadow_)
      shadow_->hash_on_write(*puf_, slot.entry, v);
  }
}

void Machine::context_switch(Pid next) {
  if (switched_this_cycle_)
    throw std::logic_error("second context switch in one cycle");
  Process &to = process(next);
  if (to.status != ProcessStatus::runnable)
    throw std::logic_error(fmt::format("pid {} is not runnable", next));
  if (resident_) {
    Process &from = process(*resident_);
    for (const auto &slot : config_.registers.slots)
      if (slot.cls == RegisterClass::gpr)
        from.saved[slot.entry] = rf_.resolve(slot.entry);
  }
  if (trace_.recording())
    emit(Kind::ContextSwitch, {{"from", i64(resident_ ? *resident_ : 0)}, {"to", i64(next)}});
  restore_registers(to);
  tlb_.flush();
  resident_ = next;
  switched_this_cycle_ = true;
}

std::vector<Pid> Machine::fork(Pid parent, unsigned n) {
  if (n == 0)
    throw std::invalid_argument("fork count must be >= 1");
  const Process &par = process(parent);
  std::map<unsigned, Word> gprs = par.saved;
  if (resident_ == parent)
    for (const auto &slot : config_.registers.slots)
      if (slot.cls == RegisterClass::gpr)
        gprs[slot.entry] = rf_.resolve(slot.entry);

  std::vector<Pid> children;
  std::vector<Process> fresh;
  for (unsigned i = 0; i < n; ++i) {
    Process c;
    c.pid = next_pid_++;
    c.cpl = par.cpl;
    c.page_table = par.page_table;
    c.os_record = par.os_record;
    c.saved = gprs;
    c.parent = parent;
    c.read_port = config_.cpl_port_policy == CplPortPolicy::per_process ? ports_[i % ports_.size()]
                                                                        : config_.paging_port;
    children.push_back(c.pid);
    fresh.push_back(std::move(c));
  }
  for (auto &c : fresh)
    processes_.push_back(std::move(c));
  if (trace_.recording()) {
    std::string ports;
    for (Pid c : children)
      ports += fmt::format("{}{}", ports.empty() ? "" : ",", process(c).read_port);
    emit(Kind::Fork, {{"parent", i64(parent)},
                      {"children", i64(n)},
                      {"first_pid", i64(children.front())},
                      {"ports", ports}});
  }
  exit_process(parent);
  return children;
}

void Machine::exit_process(Pid pid) {
  Process &p = process(pid);
  if (p.status == ProcessStatus::runnable)
    p.status = ProcessStatus::exited;
  if (trace_.recording())
    emit(Kind::Exit, {{"pid", i64(pid)}});
}

} // namespace rft::machine
