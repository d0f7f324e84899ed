#include "rftrojan/batch.hpp"

#include <cmath>
#include <exception>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

#include "rftrojan/builtin.hpp"

namespace rft::harness {

std::vector<RunResult> run_jobs(const std::vector<Job> &jobs, Exec exec) {
  std::vector<RunResult> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  const auto n = static_cast<std::int64_t>(jobs.size());
  auto one = [&](std::int64_t i) {
    try {
      results[i] = run(jobs[i].scenario, jobs[i].options);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i)
      one(i);
  } else {
    for (std::int64_t i = 0; i < n; ++i)
      one(i);
  }
  for (auto &e : errors)
    if (e)
      std::rethrow_exception(e);
  return results;
}

Scenario duty_scenario(const Scenario &base, double duty, std::uint64_t period) {
  if (!(duty > 0.0 && duty <= 1.0))
    throw std::invalid_argument(fmt::format("duty {} outside (0, 1]", duty));
  if (period == 0)
    throw std::invalid_argument("period must be >= 1");
  const ProcessDef *owner = nullptr;
  const WriteStep *hammer = nullptr;
  for (const auto &def : base.processes)
    for (const auto &st : def.program)
      if (const auto *w = std::get_if<WriteStep>(&st.op)) {
        if (st.label == "hammer") {
          owner = &def;
          hammer = w;
          break;
        }
        if (hammer == nullptr) {
          owner = &def;
          hammer = w;
        }
      }
  if (hammer == nullptr)
    throw std::invalid_argument(fmt::format("scenario {} has no hammer write", base.name));

  Scenario s = base;
  ProcessDef def = *owner;
  const WriteStep w{hammer->vaddr, hammer->data, 1};
  def.program.clear();
  const auto on = static_cast<std::uint64_t>(std::llround(duty * static_cast<double>(period)));
  const std::uint64_t blocks = (s.max_cycles + period - 1) / period;
  for (std::uint64_t b = 0; b < blocks; ++b) {
    if (on > 0)
      def.program.push_back({WriteStep{w.vaddr, w.data, on}, "hammer"});
    if (on < period)
      def.program.push_back({IdleStep{period - on}, "off"});
  }
  s.processes = {std::move(def)};
  s.name = fmt::format("{}@duty={:.2f}", base.name, duty);
  return s;
}

std::vector<SweepPoint> sweep_duty(const Scenario &base, const std::vector<double> &duties, std::uint64_t period,
                                   Exec exec) {
  std::vector<Job> jobs;
  for (double d : duties)
    jobs.push_back({duty_scenario(base, d, period), RunOptions{trace::Mode::off, {}, {}, true}});
  auto results = run_jobs(jobs, exec);
  std::vector<SweepPoint> out;
  for (std::size_t i = 0; i < duties.size(); ++i) {
    const auto &t = results[i].report.trigger;
    SweepPoint p;
    p.duty = duties[i];
    p.period = period;
    p.on_cycles = static_cast<std::uint64_t>(std::llround(duties[i] * static_cast<double>(period)));
    p.latched = t.hammers_at_latch.has_value();
    p.hammers_to_latch = t.hammers_at_latch;
    p.latch_cycle = t.latch_cycle;
    p.max_charge_v = t.max_charge_v;
    p.cycles = results[i].report.cycles;
    out.push_back(p);
  }
  return out;
}

const std::vector<std::string> &defense_names() {
  static const std::vector<std::string> names{"none", "verify_dedicated", "verify_opportunistic", "puf_hash",
                                              "l1_obfuscation"};
  return names;
}

Scenario with_defense(Scenario s, std::string_view defense) {
  machine::DefenseConfig d;
  d.verify.port_pressure = s.machine.defense.verify.port_pressure;
  if (defense == "none") {
  } else if (defense == "verify_dedicated") {
    d.verify.mode = defense::VerifyMode::dedicated;
    d.verify.reserved_port = s.machine.geometry.read_ports - 1;
  } else if (defense == "verify_opportunistic") {
    d.verify.mode = defense::VerifyMode::opportunistic;
  } else if (defense == "puf_hash") {
    d.hash.enabled = true;
  } else if (defense == "l1_obfuscation") {
    d.obfuscation.mode = machine::ObfuscationMode::seeded;
  } else {
    throw std::invalid_argument(fmt::format("unknown defense '{}'", defense));
  }
  s.machine.defense = d;
  return s;
}

namespace {

std::vector<std::string> excerpt(const RunResult &r) {
  std::vector<std::string> lines;
  const trace::Event *trig = nullptr, *arm = nullptr, *det = nullptr, *leak = nullptr, *fault = nullptr;
  for (const auto &e : r.trace.events()) {
    switch (e.kind) {
    case trace::Kind::Triggered: trig = trig ? trig : &e; break;
    case trace::Kind::PayloadFired:
    case trace::Kind::WindowOpen: arm = arm ? arm : &e; break;
    case trace::Kind::Detection: det = det ? det : &e; break;
    case trace::Kind::AccessOk:
      if (!leak && e.num("kernel") == 1)
        leak = &e;
      break;
    case trace::Kind::SegFault: fault = fault ? fault : &e; break;
    default: break;
    }
  }
  if (trig == nullptr)
    lines.push_back(fmt::format("no Triggered event: max charge {:.9f} V after {} set hammers",
                                r.report.trigger.max_charge_v, r.report.trigger.total_set_hammers));
  for (const auto *e : {trig, arm, det, leak, fault})
    if (e != nullptr)
      lines.push_back(e->to_line());
  return lines;
}

std::string evidence(const MatrixCell &c) {
  auto find = [&](std::string_view needle) -> std::string {
    for (const auto &l : c.excerpt)
      if (l.find(needle) != std::string::npos)
        return l;
    return {};
  };
  std::string line;
  if (c.outcome == "detected")
    line = find("\tDetection\t");
  else if (c.outcome == "undetected")
    line = find("kernel=1");
  if (line.empty())
    line = find("reason=invalid_cpl");
  if (line.empty() && !c.excerpt.empty())
    line = c.excerpt.front();
  return line;
}

std::string payload_kinds(const Scenario &s) {
  std::string out;
  for (const auto &a : s.payloads)
    out += fmt::format("{}{}", out.empty() ? "" : "+", payload::to_string(a.kind()));
  return out.empty() ? "none" : out;
}

} // namespace

std::vector<MatrixCell> countermeasure_matrix(const std::vector<Scenario> &attacks,
                                              const std::vector<std::string> &defenses, Exec exec) {
  std::vector<Job> jobs;
  std::vector<MatrixCell> cells;
  for (const auto &a : attacks)
    for (const auto &d : defenses) {
      jobs.push_back({with_defense(a, d), RunOptions{}});
      MatrixCell c;
      c.attack = a.name;
      c.payloads = payload_kinds(a);
      c.defense = d;
      cells.push_back(std::move(c));
    }
  auto results = run_jobs(jobs, exec);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Report &rep = results[i].report;
    auto &c = cells[i];
    c.latched = rep.trigger.hammers_at_latch.has_value();
    c.compromised = rep.compromised();
    c.rf_read_mismatch = rep.rf_read_mismatch;
    c.register_hash_mismatch = rep.register_hash_mismatch;
    c.outcome = rep.detections() > 0 ? "detected" : !rep.compromised() ? "prevented" : "undetected";
    c.excerpt = excerpt(results[i]);
    c.evidence = evidence(c);
    c.digest = rep.digest;
  }
  return cells;
}

std::vector<MatrixCell> countermeasure_matrix(const Scenario &scenario, Exec exec) {
  std::vector<Scenario> attacks;
  std::vector<std::string> defenses = defense_names();
  if (scenario.matrix) {
    for (const auto &a : scenario.matrix->attacks)
      attacks.push_back(resolve_scenario(a, scenario.base_dir));
    if (!scenario.matrix->defenses.empty())
      defenses = scenario.matrix->defenses;
  }
  if (attacks.empty())
    attacks.push_back(scenario);
  return countermeasure_matrix(attacks, defenses, exec);
}

ObfuscationStudy obfuscation_defeat(const Scenario &attack, std::uint64_t boots, std::uint64_t first_seed,
                                    Exec exec) {
  Scenario s = with_defense(attack, "l1_obfuscation");
  s.machine.defense.obfuscation.boot_seed = 0;
  std::vector<Job> jobs;
  jobs.reserve(boots);
  for (std::uint64_t i = 0; i < boots; ++i)
    jobs.push_back({s, RunOptions{trace::Mode::off, first_seed + i, {}, true}});
  auto results = run_jobs(jobs, exec);
  ObfuscationStudy st;
  st.boots = boots;
  for (const auto &r : results)
    if (!r.report.trigger.hammers_at_latch)
      ++st.defeated;
  st.rate = boots ? static_cast<double>(st.defeated) / static_cast<double>(boots) : 0.0;
  st.expected = 1.0 - 1.0 / s.machine.l1.num_sets;
  st.sigma = boots ? std::sqrt(st.expected * (1.0 - st.expected) / static_cast<double>(boots)) : 0.0;
  return st;
}

std::string sweep_json(const std::vector<SweepPoint> &points, int indent) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto &p : points) {
    nlohmann::ordered_json row;
    row["duty"] = p.duty;
    row["on_cycles"] = p.on_cycles;
    row["period"] = p.period;
    row["latched"] = p.latched;
    row["hammers_to_latch"] = p.hammers_to_latch ? nlohmann::ordered_json(*p.hammers_to_latch) : nullptr;
    row["latch_cycle"] = p.latch_cycle ? nlohmann::ordered_json(*p.latch_cycle) : nullptr;
    row["max_charge_v"] = p.max_charge_v;
    row["cycles"] = p.cycles;
    j.push_back(std::move(row));
  }
  return j.dump(indent);
}

std::string matrix_json(const std::vector<MatrixCell> &cells, int indent) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto &c : cells) {
    nlohmann::ordered_json row;
    row["attack"] = c.attack;
    row["payloads"] = c.payloads;
    row["defense"] = c.defense;
    row["outcome"] = c.outcome;
    row["latched"] = c.latched;
    row["compromised"] = c.compromised;
    row["detections"] = {{"RF_READ_MISMATCH", c.rf_read_mismatch},
                         {"REGISTER_HASH_MISMATCH", c.register_hash_mismatch}};
    row["evidence"] = c.evidence;
    row["trace_excerpt"] = c.excerpt;
    row["digest"] = hex_digest(c.digest);
    j.push_back(std::move(row));
  }
  return j.dump(indent);
}

} // namespace rft::harness
