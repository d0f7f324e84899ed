#pragma once

// Scenario model and loader. A scenario fixes the machine, trigger, payloads,
// defenses, initial memory and one step program per process. The file grammar
// is documented in docs/scenario-format.md.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rftrojan/machine.hpp"
#include "rftrojan/payload.hpp"
#include "rftrojan/trigger.hpp"

namespace rft::harness {

struct WriteStep {
  VAddr vaddr = 0;
  Word data = 0;
  std::uint64_t repeat = 1;
};

enum class Expect { ok, fault };

struct ReadStep {
  VAddr vaddr = 0;
  std::optional<Expect> expect;
};

struct IdleStep {
  std::uint64_t cycles = 1;
};

struct ForkStep {
  unsigned n = 1;
};

struct SwitchToStep {
  Pid pid = 0;
};

struct ReadRegisterStep {
  std::string name;
  std::optional<Word> expect;
};

struct Step {
  std::variant<WriteStep, ReadStep, IdleStep, ForkStep, SwitchToStep, ReadRegisterStep> op;
  std::string label;
};

std::string_view step_name(const Step &step) noexcept;

struct ProcessDef {
  machine::ProcessSpec spec;
  std::vector<Step> program;
};

struct MemoryInit {
  VAddr vaddr = 0;
  Word value = 0;
  std::optional<Pid> pid;
};

struct SweepSpec {
  std::vector<double> duties;
  std::uint64_t period = 100;
};

struct MatrixSpec {
  /// Builtin scenario names or paths relative to the scenario file.
  std::vector<std::string> attacks;
  std::vector<std::string> defenses;
};

struct Scenario {
  std::string name;
  std::string description;
  std::uint64_t seed = 1;
  Cycle max_cycles = 100000;

  machine::MachineConfig machine;
  trigger::TriggerConfig trigger;
  std::vector<payload::Attachment> payloads;
  std::vector<machine::PageSpec> kernel_pages;
  std::vector<MemoryInit> memory;
  std::vector<ProcessDef> processes;

  std::optional<SweepSpec> sweep;
  std::optional<MatrixSpec> matrix;
  /// Directory the scenario was loaded from, for resolving matrix paths.
  std::filesystem::path base_dir;
};

class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Issue {
  std::string path;
  std::string message;
};

class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(std::vector<Issue> issues);
  const std::vector<Issue> &issues() const noexcept { return issues_; }

private:
  std::vector<Issue> issues_;
};

/// Cross-reference and invariant checks. Empty when the scenario is valid.
std::vector<Issue> validate(const Scenario &scenario);

/// Parses scenario text. Throws ParseError on malformed text and
/// ValidationError (all issues, with field paths) on invalid content.
Scenario parse_scenario(const std::string &text, const std::filesystem::path &base_dir = {});

/// Reads and parses a scenario file.
Scenario load_scenario(const std::filesystem::path &path);

/// Drops every step labelled `label` from every program.
Scenario without_label(Scenario scenario, std::string_view label);

/// Number of steps, over all programs, carrying `label`.
std::size_t count_label(const Scenario &scenario, std::string_view label);

} // namespace rft::harness
