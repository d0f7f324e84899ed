#include "rftrojan/simulator.hpp"

#include <map>

#include <fmt/format.h>

#include "rftrojan/machine.hpp"

namespace rft::harness {

namespace {

template <class... Ts> struct overloaded : Ts... { using Ts::operator()...; };
template <class... Ts> overloaded(Ts...) -> overloaded<Ts...>;

struct Cursor {
  const std::vector<Step> *program = nullptr;
  std::size_t pc = 0;
  std::uint64_t done = 0;

  bool at_end() const { return pc >= program->size(); }
  void advance() {
    ++pc;
    done = 0;
  }
};

class Loop {
public:
  Loop(const Scenario &s, machine::Machine &m, Report &report) : s_(s), m_(m), report_(report) {
    for (const auto &def : s.processes)
      cursors_[def.spec.pid] = Cursor{&def.program};
  }

  bool any_runnable() const {
    for (const auto &p : m_.processes())
      if (p.status == machine::ProcessStatus::runnable)
        return true;
    return false;
  }

  void cycle() {
    while (true) {
      auto r = m_.resident();
      if (r && runnable(*r) && cursors_.at(*r).at_end())
        m_.exit_process(*r);
      if (!r || !runnable(*r)) {
        if (m_.switched_this_cycle())
          return;
        auto next = next_runnable(r);
        if (!next)
          return;
        m_.context_switch(*next);
        continue;
      }
      if (!execute(*r))
        return;
    }
  }

private:
  bool runnable(Pid pid) const { return m_.process(pid).status == machine::ProcessStatus::runnable; }

  std::optional<Pid> next_runnable(std::optional<Pid> after) const {
    const auto &ps = m_.processes();
    std::size_t start = 0;
    if (after)
      for (std::size_t i = 0; i < ps.size(); ++i)
        if (ps[i].pid == *after)
          start = i + 1;
    for (std::size_t k = 0; k < ps.size(); ++k) {
      const auto &p = ps[(start + k) % ps.size()];
      if (p.status == machine::ProcessStatus::runnable)
        return p.pid;
    }
    return std::nullopt;
  }

  void expect(Pid pid, const Cursor &c, const Step &st, std::string expected, std::string observed) {
    ExpectationResult e;
    e.pid = pid;
    e.step = c.pc;
    e.label = st.label;
    e.op = std::string(step_name(st));
    e.met = expected == observed;
    e.expected = std::move(expected);
    e.observed = std::move(observed);
    e.cycle = m_.cycle();
    report_.expectations.push_back(std::move(e));
  }

  // Runs one step unit of `pid`. Returns true when control should pass to
  // another process in this cycle.
  bool execute(Pid pid) {
    Cursor &c = cursors_.at(pid);
    const Step &st = (*c.program)[c.pc];
    return std::visit(
        overloaded{
            [&](const WriteStep &w) {
              auto out = m_.cpu_write(pid, w.vaddr, w.data);
              if (out.status != machine::AccessStatus::ok)
                return true;
              if (++c.done == w.repeat)
                c.advance();
              return false;
            },
            [&](const ReadStep &rd) {
              auto out = m_.cpu_read(pid, rd.vaddr);
              const bool ok = out.status == machine::AccessStatus::ok;
              if (rd.expect)
                expect(pid, c, st, *rd.expect == Expect::ok ? "ok" : "fault", ok ? "ok" : "fault");
              if (!ok)
                return true;
              c.advance();
              return false;
            },
            [&](const IdleStep &i) {
              if (++c.done == i.cycles)
                c.advance();
              return false;
            },
            [&](const ForkStep &f) {
              const std::size_t resume = c.pc + 1;
              const auto *program = c.program;
              for (Pid child : m_.fork(pid, f.n))
                cursors_[child] = Cursor{program, resume};
              return true;
            },
            [&](const SwitchToStep &sw) {
              if (m_.switched_this_cycle())
                return false;
              c.advance();
              bool exists = false;
              for (const auto &p : m_.processes())
                exists = exists || p.pid == sw.pid;
              if (exists && runnable(sw.pid) && sw.pid != pid)
                m_.context_switch(sw.pid);
              return false;
            },
            [&](const ReadRegisterStep &rr) {
              const Word v = m_.read_register(pid, rr.name, rr.expect);
              if (rr.expect)
                expect(pid, c, st, fmt::format("0x{:08x}", *rr.expect), fmt::format("0x{:08x}", v));
              c.advance();
              return false;
            },
        },
        st.op);
  }

  const Scenario &s_;
  machine::Machine &m_;
  Report &report_;
  std::map<Pid, Cursor> cursors_;
};

} // namespace

std::uint64_t effective_puf_seed(const Scenario &scenario, std::uint64_t seed) {
  const auto v = scenario.machine.defense.hash.puf_seed;
  return v != 0 ? v : derive_seed(seed, 1);
}

std::uint64_t effective_boot_seed(const Scenario &scenario, std::uint64_t seed) {
  const auto v = scenario.machine.defense.obfuscation.boot_seed;
  return v != 0 ? v : derive_seed(seed, 2);
}

RunResult run(const Scenario &s, const RunOptions &options) {
  RunResult result{trace::Trace(options.trace_mode), {}};
  Report &rep = result.report;
  const std::uint64_t seed = options.seed.value_or(s.seed);
  const Cycle max_cycles = options.max_cycles.value_or(s.max_cycles);

  machine::MachineConfig mc = s.machine;
  mc.seed = seed;
  mc.defense.hash.puf_seed = effective_puf_seed(s, seed);
  mc.defense.obfuscation.boot_seed = effective_boot_seed(s, seed);

  machine::Machine m(mc, s.trigger, s.payloads, s.kernel_pages, result.trace);
  for (const auto &def : s.processes)
    m.add_process(def.spec);
  for (const auto &init : s.memory)
    m.poke(init.vaddr, init.value, init.pid);

  Loop loop(s, m, rep);
  Cycle c = 0;
  for (; c < max_cycles; ++c) {
    if (!loop.any_runnable() && !m.bus_pending())
      break;
    m.begin_cycle(c);
    loop.cycle();
    m.end_cycle();
    if (options.stop_when_latched && m.trigger().latched()) {
      rep.stopped_on_latch = true;
      ++c;
      break;
    }
  }

  rep.scenario = s.name;
  rep.seed = seed;
  rep.cycles = c;
  rep.max_cycles = max_cycles;
  rep.cycle_budget_exceeded = !rep.stopped_on_latch && c == max_cycles && (loop.any_runnable() || m.bus_pending());

  const auto &st = m.stats();
  auto &t = rep.trigger;
  t.n_set = s.trigger.n_set;
  t.hammers_at_latch = st.hammers_at_latch;
  t.latch_cycle = st.latch_cycle;
  t.latched_at_end = m.trigger().latched();
  t.final_charge_v = m.trigger().charge_v();
  t.max_charge_v = st.max_charge_v;
  t.total_set_hammers = st.total_set_hammers;
  t.resets = st.resets;
  t.calibration = m.trigger().calibration();
  rep.activations = st.activations;
  rep.bc_fires = st.bc_fires;

  for (const auto &p : m.processes()) {
    ProcessOutcome o;
    o.pid = p.pid;
    o.parent = p.parent;
    o.cpl = p.cpl;
    o.read_port = p.read_port;
    o.status = std::string(machine::to_string(p.status));
    o.fault_reason = std::string(machine::to_string(p.fault_reason));
    o.kernel_bytes_read = p.kernel_bytes_read;
    o.seg_faults = p.seg_faults;
    o.page_faults = p.page_faults;
    rep.kernel_leak = rep.kernel_leak || p.kernel_bytes_read > 0;
    rep.denial_of_service = rep.denial_of_service || p.fault_reason == machine::FaultReason::invalid_cpl;
    rep.processes.push_back(std::move(o));
  }
  for (const auto &e : rep.expectations)
    if (e.op == "read_register" && !e.met)
      rep.register_corruption = true;

  rep.rf_read_mismatch = st.read_mismatch_detections;
  rep.register_hash_mismatch = st.hash_detections;
  const auto &vc = mc.defense.verify;
  rep.verification.mode = vc.mode == defense::VerifyMode::off         ? "off"
                          : vc.mode == defense::VerifyMode::dedicated ? "dedicated"
                                                                      : "opportunistic";
  rep.verification.verified = st.verified_reads;
  rep.verification.skipped = st.skipped_verifications;
  auto ports = m.schedulable_ports();
  rep.verification.schedulable_ports.assign(ports.begin(), ports.end());
  rep.hash_enabled = mc.defense.hash.enabled;
  rep.obfuscation = mc.defense.obfuscation.mode == machine::ObfuscationMode::off        ? "off"
                    : mc.defense.obfuscation.mode == machine::ObfuscationMode::identity ? "identity"
                                                                                        : "seeded";
  rep.overhead = payload::overhead_report(s.payloads);
  rep.trace_events = result.trace.count();
  rep.digest = result.trace.digest();
  return result;
}

} // namespace rft::harness
