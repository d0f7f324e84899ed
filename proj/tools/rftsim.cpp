// rftsim: command-line front end for the register-file Trojan simulator.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "rftrojan/batch.hpp"
#include "rftrojan/builtin.hpp"
#include "rftrojan/simulator.hpp"

using namespace rft;
using namespace rft::harness;

namespace {

constexpr int kExitLoadError = 2;
constexpr int kExitRuntimeError = 3;

void write_file(const std::string &path, const std::string &text) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error(fmt::format("cannot write {}", path));
  out << text;
  if (!text.empty() && text.back() != '\n')
    out << '\n';
}

int cmd_run(const std::string &name, const std::string &trace_path, const std::string &report_path,
            std::optional<std::uint64_t> seed, std::optional<Cycle> max_cycles) {
  Scenario s = resolve_scenario(name);
  RunOptions opt;
  opt.trace_mode = trace_path.empty() ? trace::Mode::digest_only : trace::Mode::full;
  opt.seed = seed;
  opt.max_cycles = max_cycles;
  RunResult r = run(s, opt);
  if (!trace_path.empty()) {
    std::ofstream out(trace_path);
    if (!out)
      throw std::runtime_error(fmt::format("cannot write {}", trace_path));
    r.trace.write_tsv(out);
  }
  const std::string json = to_json(r.report);
  if (!report_path.empty())
    write_file(report_path, json);
  else
    std::cout << json << '\n';

  const auto &t = r.report.trigger;
  std::cerr << fmt::format("{}: {} cycles, trigger {}, {}{}, digest {}\n", r.report.scenario, r.report.cycles,
                           t.hammers_at_latch ? fmt::format("latched at hammer {}", *t.hammers_at_latch)
                                              : std::string("not latched"),
                           r.report.compromised() ? "compromised" : "not compromised",
                           r.report.cycle_budget_exceeded ? ", cycle budget exceeded" : "",
                           hex_digest(r.report.digest));
  return 0;
}

int cmd_list() {
  for (const auto &name : builtin_names()) {
    const Scenario s = builtin_scenario(name);
    std::cout << fmt::format("{:<26} {}\n", name, s.description);
  }
  return 0;
}

int cmd_sweep(const std::string &name, std::vector<double> duties, std::optional<std::uint64_t> period,
              const std::string &json_path, bool serial) {
  Scenario s = resolve_scenario(name);
  if (duties.empty() && s.sweep)
    duties = s.sweep->duties;
  if (duties.empty())
    throw ValidationError(std::vector<Issue>{{"--duty", "no duty fractions given and the scenario has no sweep block"}});
  for (std::size_t i = 0; i < duties.size(); ++i)
    if (!(duties[i] > 0.0 && duties[i] <= 1.0))
      throw ValidationError(std::vector<Issue>{{fmt::format("--duty[{}]", i), "must lie in (0, 1]"}});
  const std::uint64_t p = period.value_or(s.sweep ? s.sweep->period : 100);
  if (p == 0)
    throw ValidationError(std::vector<Issue>{{"--period", "must be >= 1"}});
  auto points = sweep_duty(s, duties, p, serial ? Exec::serial : Exec::parallel);
  std::cout << fmt::format("{:>6} {:>8} {:>8} {:>17} {:>14} {:>10}\n", "duty", "on/per", "latched",
                           "hammers_to_latch", "max_charge_V", "cycles");
  for (const auto &pt : points)
    std::cout << fmt::format("{:>6.2f} {:>8} {:>8} {:>17} {:>14.9f} {:>10}\n", pt.duty,
                             fmt::format("{}/{}", pt.on_cycles, pt.period), pt.latched ? "yes" : "no",
                             pt.hammers_to_latch ? std::to_string(*pt.hammers_to_latch) : "-", pt.max_charge_v,
                             pt.cycles);
  if (!json_path.empty())
    write_file(json_path, sweep_json(points));
  return 0;
}

int cmd_matrix(const std::string &name, const std::string &json_path, bool serial) {
  Scenario s = resolve_scenario(name);
  auto cells = countermeasure_matrix(s, serial ? Exec::serial : Exec::parallel);
  std::cout << fmt::format("{:<26} {:<8} {:<22} {:<11} {}\n", "attack", "payload", "defense", "outcome",
                           "evidence");
  for (const auto &c : cells)
    std::cout << fmt::format("{:<26} {:<8} {:<22} {:<11} {}\n", c.attack, c.payloads, c.defense, c.outcome,
                             c.evidence);
  if (!json_path.empty())
    write_file(json_path, matrix_json(cells));
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Register-file hardware Trojan simulator"};
  app.require_subcommand(1);

  std::string scenario, trace_path, report_path, json_path;
  std::optional<std::uint64_t> seed, period;
  std::optional<Cycle> max_cycles;
  std::vector<double> duties;
  bool serial = false;

  auto *run_cmd = app.add_subcommand("run", "Run a scenario file or builtin");
  run_cmd->add_option("scenario", scenario, "Builtin name or scenario file")->required();
  run_cmd->add_option("--trace", trace_path, "Write the TSV event trace here");
  run_cmd->add_option("--report", report_path, "Write the JSON report here (default: stdout)");
  run_cmd->add_option("--seed", seed, "Override the scenario seed");
  run_cmd->add_option("--max-cycles", max_cycles, "Override the cycle budget");

  auto *list_cmd = app.add_subcommand("list", "List builtin scenarios");

  auto *sweep_cmd = app.add_subcommand("sweep", "Trigger latch versus hammer duty cycle");
  sweep_cmd->add_option("scenario", scenario, "Builtin name or scenario file")->required();
  sweep_cmd->add_option("--duty", duties, "Duty fractions, e.g. 0.2,0.3,1.0")->delimiter(',');
  sweep_cmd->add_option("--period", period, "ON/OFF block length in cycles");
  sweep_cmd->add_option("--json", json_path, "Write the sweep table as JSON");
  sweep_cmd->add_flag("--serial", serial, "Run points one after another");

  auto *matrix_cmd = app.add_subcommand("matrix", "Payload x defense countermeasure matrix");
  matrix_cmd->add_option("scenario", scenario, "Builtin name or scenario file")->required();
  matrix_cmd->add_option("--json", json_path, "Write the matrix with trace excerpts as JSON");
  matrix_cmd->add_flag("--serial", serial, "Run cells one after another");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed())
      return cmd_run(scenario, trace_path, report_path, seed, max_cycles);
    if (list_cmd->parsed())
      return cmd_list();
    if (sweep_cmd->parsed())
      return cmd_sweep(scenario, duties, period, json_path, serial);
    if (matrix_cmd->parsed())
      return cmd_matrix(scenario, json_path, serial);
  } catch (const ParseError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitLoadError;
  } catch (const ValidationError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitLoadError;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
  return 0;
}
