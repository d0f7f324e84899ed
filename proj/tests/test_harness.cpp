#include <gtest/gtest.h>

#include <tuple>

#include "rftrojan/batch.hpp"
#include "rftrojan/builtin.hpp"
#include "rftrojan/simulator.hpp"
#include "support.hpp"

using namespace rft;
using namespace rft::harness;
using trace::Kind;

namespace {

std::vector<const trace::Event *> of_kind(const RunResult &r, Kind k) {
  std::vector<const trace::Event *> out;
  for (const auto &e : r.trace.events())
    if (e.kind == k)
      out.push_back(&e);
  return out;
}

std::vector<std::string> lines_without_samples(const RunResult &r) {
  std::vector<std::string> out;
  for (const auto &e : r.trace.events())
    if (e.kind != Kind::ChargeSample)
      out.push_back(e.to_line());
  return out;
}

Scenario without_payloads(Scenario s) {
  s.payloads.clear();
  return s;
}

using ReadKey = std::tuple<Cycle, std::int64_t, std::int64_t, std::int64_t, std::uint32_t>;

std::vector<ReadKey> reads_where(const RunResult &r, const std::function<bool(const trace::Event &)> &keep) {
  std::vector<ReadKey> out;
  for (const auto *e : of_kind(r, Kind::RfRead))
    if (keep(*e))
      out.emplace_back(e->cycle, e->num("pid"), e->num("port"), e->num("entry"), e->word("value"));
  return out;
}

} // namespace

TEST(Harness, Deterministic) {
  for (const auto &name : builtin_names()) {
    auto s = builtin_scenario(name);
    auto a = run(s), b = run(s);
    EXPECT_EQ(a.report.digest, b.report.digest) << name;
    EXPECT_EQ(a.report.digest, trace::digest_of(a.trace.events())) << name;
  }
}

TEST(Harness, DigestOnlyMatchesFull) {
  auto s = builtin_scenario("rp_fork_leak");
  RunOptions o;
  o.trace_mode = trace::Mode::digest_only;
  auto d = run(s, o);
  EXPECT_EQ(d.report.digest, run(s).report.digest);
  EXPECT_TRUE(d.trace.events().empty());
}

TEST(Harness, PrivilegeEscalationFlow) {
  auto r = run(builtin_scenario("bc_privilege_escalation"));
  EXPECT_TRUE(r.report.kernel_leak);
  EXPECT_EQ(r.report.trigger.hammers_at_latch, 1837u);
  auto cpl = of_kind(r, Kind::CplRead);
  auto fired = of_kind(r, Kind::PayloadFired);
  ASSERT_EQ(fired.size(), 1u);
  EXPECT_EQ(fired[0]->word("after") & 0x3, 0u);
  // The CPL read right after the fire sees ring 0 and the kernel read lands.
  bool saw_ring0_kernel = false, saw_ring3_after_switch = false, switched = false;
  for (const auto &e : r.trace.events()) {
    if (e.kind == Kind::AccessOk && e.num("kernel") == 1 && e.text("op") == "read")
      saw_ring0_kernel = e.word("data") == 0x5EC2E75E;
    if (e.kind == Kind::ContextSwitch && saw_ring0_kernel)
      switched = true;
    if (switched && e.kind == Kind::SegFault && e.num("pid") == 1)
      saw_ring3_after_switch = e.num("cpl") == 3 && e.text("reason") == "kernel_page";
  }
  EXPECT_TRUE(saw_ring0_kernel);
  EXPECT_TRUE(saw_ring3_after_switch);
  for (const auto &x : r.report.expectations) {
    EXPECT_TRUE(x.met) << x.label;
  }
  (void)cpl;
}

TEST(Harness, WithoutDeployKernelReadFaults) {
  auto s = without_label(builtin_scenario("bc_privilege_escalation"), "deploy");
  auto r = run(s);
  EXPECT_FALSE(r.report.kernel_leak);
  EXPECT_TRUE(r.report.trigger.hammers_at_latch.has_value());
  EXPECT_TRUE(of_kind(r, Kind::PayloadFired).empty());
  auto faults = of_kind(r, Kind::SegFault);
  ASSERT_FALSE(faults.empty());
  EXPECT_EQ(faults[0]->text("reason"), "kernel_page");
  EXPECT_EQ(faults[0]->num("cpl"), 3);
}

TEST(Harness, RpForkLeak) {
  auto s = builtin_scenario("rp_fork_leak");
  auto r = run(s);
  int leaked = 0, faulted = 0;
  for (const auto &p : r.report.processes) {
    if (!p.parent)
      continue;
    leaked += p.kernel_bytes_read > 0;
    faulted += p.fault_reason == "kernel_page";
    if (p.kernel_bytes_read > 0) {
      EXPECT_EQ(p.read_port, 2u);
    }
  }
  EXPECT_EQ(leaked, 1);
  EXPECT_EQ(faulted, 3);

  auto clean = run(without_payloads(s));
  auto off_port = [](const trace::Event &e) { return e.num("port") != 2; };
  EXPECT_EQ(reads_where(r, off_port), reads_where(clean, off_port));
  for (const auto *e : of_kind(r, Kind::RfRead))
    if (e->num("port") != 2) {
      EXPECT_EQ(e->word("raw"), e->word("value"));
    }
}

TEST(Harness, LblDenialOfService) {
  auto s = builtin_scenario("lbl_dos");
  auto r = run(s);
  auto open = of_kind(r, Kind::WindowOpen);
  ASSERT_EQ(open.size(), 1u);
  const Cycle from = open[0]->cycle, until = static_cast<Cycle>(open[0]->num("until"));
  unsigned corrupted = 0;
  for (const auto *e : of_kind(r, Kind::RfRead)) {
    const bool in_group = e->num("port") == 0 && e->num("entry") < 16;
    if (in_group && e->cycle >= from && e->cycle < until) {
      EXPECT_EQ(e->word("raw") ^ e->word("value"), e->word("raw") & 0x2u);
      EXPECT_EQ(e->word("value") & 0x2u, 0u);
      corrupted += e->word("raw") != e->word("value");
    } else {
      EXPECT_EQ(e->word("raw"), e->word("value"));
    }
  }
  EXPECT_GE(corrupted, 3u);
  for (const auto &p : r.report.processes)
    if (p.pid != 1) {
      EXPECT_EQ(p.fault_reason, "invalid_cpl") << p.pid;
    }
  EXPECT_TRUE(r.report.denial_of_service);

  auto clean = run(without_payloads(s));
  auto outside = [&](const trace::Event &e) { return !(e.num("port") == 0 && e.num("entry") < 16); };
  EXPECT_EQ(reads_where(r, outside), reads_where(clean, outside));
  EXPECT_FALSE(clean.report.denial_of_service);
}

TEST(Harness, GprCorruption) {
  auto r = run(builtin_scenario("gpr_corrupt"));
  ASSERT_EQ(r.report.expectations.size(), 3u);
  EXPECT_TRUE(r.report.expectations[0].met);
  EXPECT_FALSE(r.report.expectations[1].met);
  EXPECT_EQ(r.report.expectations[1].observed, "0x00001001");
  EXPECT_TRUE(r.report.expectations[2].met);
  EXPECT_TRUE(r.report.register_corruption);
}

// Trigger never latches: payload attachments must be invisible.
TEST(Property, DormancyDifferential) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto with = test::random_scenario(seed, true, 1836);
    auto bare = test::random_scenario(seed, false, 1836);
    auto a = run(with), b = run(bare);
    ASSERT_FALSE(a.report.trigger.latched_at_end) << seed;
    ASSERT_EQ(a.report.activations, 0u) << seed;
    ASSERT_EQ(lines_without_samples(a), lines_without_samples(b)) << "seed " << seed;
  }
}

TEST(Property, NoTrojanNoKernelData) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto s = test::random_scenario(seed, false, 1000);
    s.trigger.n_set = 5;
    auto r = run(s);
    ASSERT_FALSE(r.report.kernel_leak) << seed;
    for (const auto *e : of_kind(r, Kind::AccessOk))
      ASSERT_EQ(e->num("kernel"), 0) << seed;
    for (const auto *e : of_kind(r, Kind::CplRead))
      ASSERT_EQ(e->num("cpl"), 3) << seed;
  }
}

TEST(Property, PhaseOrderWithinEachCycle) {
  std::vector<Scenario> all;
  for (const auto &n : builtin_names())
    if (n != "duty_cycle_sweep")
      all.push_back(builtin_scenario(n));
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto s = test::random_scenario(seed, true, 5000);
    s.trigger.n_set = 20;
    all.push_back(s);
  }
  for (const auto &s : all) {
    auto r = run(s);
    Cycle cycle = 0;
    int phase = 0;
    for (const auto &e : r.trace.events()) {
      const int p = static_cast<int>(trace::phase_of(e.kind));
      if (e.cycle != cycle) {
        ASSERT_GT(e.cycle, cycle) << s.name;
        cycle = e.cycle;
        phase = 0;
      }
      // Context switches and process bookkeeping sit in the reads phase.
      ASSERT_GE(p, phase) << s.name << " cycle " << e.cycle << " " << e.to_line();
      phase = p;
    }
  }
}

TEST(Batch, SerialEqualsParallel) {
  std::vector<Job> jobs;
  for (std::uint64_t seed = 1; seed <= 24; ++seed) {
    auto s = test::random_scenario(seed, true, 3000);
    s.trigger.n_set = 40;
    jobs.push_back({s, {}});
  }
  for (const auto &n : builtin_names())
    if (n != "duty_cycle_sweep")
      jobs.push_back({builtin_scenario(n), {}});
  auto a = run_jobs(jobs, Exec::serial);
  auto b = run_jobs(jobs, Exec::parallel);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].report.digest, b[i].report.digest) << i;
  }

  auto m1 = countermeasure_matrix(builtin_scenario("countermeasure_matrix"), Exec::serial);
  auto m2 = countermeasure_matrix(builtin_scenario("countermeasure_matrix"), Exec::parallel);
  EXPECT_EQ(matrix_json(m1), matrix_json(m2));

  auto base = builtin_scenario("duty_cycle_sweep");
  EXPECT_EQ(sweep_json(sweep_duty(base, {0.3, 0.5, 1.0}, 100, Exec::serial)),
            sweep_json(sweep_duty(base, {0.3, 0.5, 1.0}, 100, Exec::parallel)));

  auto o1 = obfuscation_defeat(builtin_scenario("bc_privilege_escalation"), 64, 1, Exec::serial);
  auto o2 = obfuscation_defeat(builtin_scenario("bc_privilege_escalation"), 64, 1, Exec::parallel);
  EXPECT_EQ(o1.defeated, o2.defeated);
}

TEST(Batch, JobErrorsPropagate) {
  auto s = builtin_scenario("bc_privilege_escalation");
  s.processes[0].spec.cpl = 2;
  EXPECT_THROW(run_jobs({{s, {}}}, Exec::parallel), std::invalid_argument);
}

TEST(Batch, SweepShape) {
  auto pts = sweep_duty(builtin_scenario("duty_cycle_sweep"), {0.2, 0.3, 1.0});
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_FALSE(pts[0].latched);
  EXPECT_EQ(pts[0].on_cycles, 20u);
  EXPECT_TRUE(pts[1].latched);
  EXPECT_EQ(pts[1].hammers_to_latch, 36180u);
  EXPECT_EQ(pts[2].hammers_to_latch, 1837u);
  EXPECT_THROW(duty_scenario(builtin_scenario("lbl_dos"), 0.5, 100).processes.at(5), std::out_of_range);
}

TEST(Batch, MatrixCells) {
  auto cells = countermeasure_matrix(builtin_scenario("countermeasure_matrix"));
  ASSERT_EQ(cells.size(), 15u);
  const std::map<std::pair<std::string, std::string>, std::string> want = {
      {{"bc_privilege_escalation", "none"}, "undetected"},
      {{"bc_privilege_escalation", "verify_dedicated"}, "undetected"},
      {{"bc_privilege_escalation", "verify_opportunistic"}, "undetected"},
      {{"bc_privilege_escalation", "puf_hash"}, "detected"},
      {{"bc_privilege_escalation", "l1_obfuscation"}, "prevented"},
      {{"rp_fork_leak", "none"}, "undetected"},
      {{"rp_fork_leak", "verify_dedicated"}, "detected"},
      {{"rp_fork_leak", "verify_opportunistic"}, "detected"},
      {{"rp_fork_leak", "puf_hash"}, "detected"},
      {{"rp_fork_leak", "l1_obfuscation"}, "prevented"},
      {{"lbl_dos", "none"}, "undetected"},
      {{"lbl_dos", "verify_dedicated"}, "detected"},
      {{"lbl_dos", "verify_opportunistic"}, "detected"},
      {{"lbl_dos", "puf_hash"}, "detected"},
      {{"lbl_dos", "l1_obfuscation"}, "prevented"},
  };
  for (const auto &c : cells) {
    EXPECT_EQ(c.outcome, want.at({c.attack, c.defense})) << c.attack << "/" << c.defense;
    EXPECT_FALSE(c.evidence.empty());
    EXPECT_NE(std::find(c.excerpt.begin(), c.excerpt.end(), c.evidence), c.excerpt.end());
    if (c.outcome == "detected") {
      EXPECT_NE(c.evidence.find("Detection"), std::string::npos);
    }
  }
  EXPECT_THROW(with_defense(builtin_scenario("lbl_dos"), "moat"), std::invalid_argument);
}

TEST(Batch, BaselineHasNoCompromise) {
  auto r = run(builtin_scenario("countermeasure_matrix"));
  EXPECT_FALSE(r.report.compromised());
  for (const auto &x : r.report.expectations) {
    EXPECT_TRUE(x.met);
  }
}
