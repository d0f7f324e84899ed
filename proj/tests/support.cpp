#include "support.hpp"

#include <fmt/format.h>

namespace rft::test {

std::string base_yaml(bool with_payloads, std::uint32_t n_set) {
  std::string s = fmt::format(R"(
name: random
seed: 7
max_cycles: 20000
trigger:
  set_address: 0x602010
  set_pattern: "10"
  n_set: {}
kernel:
  pages:
    - {{vaddr: 0xC0100000, count: 1}}
memory:
  - {{vaddr: 0xC0100000, value: 0x5EC2E75E}}
)",
                              n_set);
  if (with_payloads)
    s += R"(
payloads:
  - {kind: bc, target: cs, bit_mask: 0x3, force_to: zeros, addr_x: 0x602010, pattern: "10"}
  - {kind: bc, target: eax, bit_mask: 0x1, force_to: ones, addr_y: 0x602040, pattern: "10"}
  - {kind: rp, target: cs, bit_mask: 0x3, infected_port: 1, window_cycles: 4, addr_x: 0x602080, pattern: "10"}
  - {kind: lbl, infected_port: 0, bit_position: 1, group_index: 0, forced_value: false, window_cycles: 4, addr_y: 0x6020C0, pattern: "10"}
)";
  s += R"(
processes:
  - {pid: 1, cpl: 3, pages: [{vaddr: 0x602000}, {vaddr: 0x700000}]}
)";
  return s;
}

std::vector<harness::Step> ScriptGen::program(std::size_t count, int max_pid) {
  using namespace harness;
  static constexpr VAddr kControl[] = {0x602010, 0x602040, 0x602080, 0x6020C0};
  static constexpr const char *kRegs[] = {"cs", "ss", "cr0", "cr3", "eax", "ebx", "esp", "eip"};
  std::vector<Step> out;
  auto pick = [&](std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng); };
  bool forked = false;
  for (std::size_t i = 0; i < count; ++i) {
    switch (pick(9)) {
    case 0:
    case 1: {
      const VAddr a = kControl[pick(4)];
      const Word data = pick(2) ? 0x2 : static_cast<Word>(pick(1u << 16));
      std::uint64_t repeat = 1 + pick(40);
      if (a == 0x602010) {
        repeat = std::min<std::uint64_t>(repeat, hammers_left);
        if (repeat == 0)
          break;
        hammers_left -= repeat;
      }
      out.push_back({WriteStep{a, data, repeat}, ""});
      break;
    }
    case 2:
      out.push_back({WriteStep{0x700000 + 4 * pick(64), static_cast<Word>(rng()), 1}, ""});
      break;
    case 3:
      out.push_back({ReadStep{0x700000 + 4 * pick(64), std::nullopt}, ""});
      break;
    case 4:
      // Kernel reads fault at ring 3, so keep them rare.
      if (pick(4) == 0)
        out.push_back({ReadStep{0xC0100000 + 4 * pick(8), std::nullopt}, ""});
      break;
    case 5:
      out.push_back({IdleStep{1 + pick(30)}, ""});
      break;
    case 6:
      out.push_back({SwitchToStep{static_cast<Pid>(1 + pick(static_cast<std::uint64_t>(max_pid)))}, ""});
      break;
    case 7:
      out.push_back({ReadRegisterStep{kRegs[pick(8)], std::nullopt}, ""});
      break;
    case 8:
      if (!forked && pick(3) == 0) {
        forked = true;
        out.push_back({ForkStep{static_cast<unsigned>(1 + pick(3))}, ""});
      }
      break;
    }
  }
  return out;
}

harness::Scenario random_scenario(std::uint64_t seed, bool with_payloads, std::uint64_t max_hammers) {
  harness::Scenario s = harness::parse_scenario(base_yaml(with_payloads));
  ScriptGen gen(seed, max_hammers);
  s.seed = seed;
  s.processes.clear();
  for (Pid pid = 1; pid <= 3; ++pid) {
    harness::ProcessDef def;
    def.spec.pid = pid;
    def.spec.cpl = 3;
    def.spec.pages = {{0x602000, 1, true}, {0x700000, 1, true}};
    if (pid == 1 && gen.hammers_left > 100) {
      // Bring the charge close to the threshold before the random part.
      const std::uint64_t burst = gen.hammers_left - 60;
      gen.hammers_left -= burst;
      def.program.push_back({harness::WriteStep{0x602010, 0x2, burst}, "hammer"});
    }
    auto rest = gen.program(16, 8);
    def.program.insert(def.program.end(), rest.begin(), rest.end());
    s.processes.push_back(std::move(def));
  }
  return s;
}

} // namespace rft::test
