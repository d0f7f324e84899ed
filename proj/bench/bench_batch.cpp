// Serial versus OpenMP batch runner on the three batch workloads.

#include <chrono>
#include <cstdlib>
#include <iostream>

#include <fmt/format.h>
#include <omp.h>

#include "rftrojan/batch.hpp"
#include "rftrojan/builtin.hpp"

using namespace rft::harness;

namespace {

template <class F> double seconds(F &&f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class F> void compare(const char *name, F &&f) {
  decltype(f(Exec::serial)) serial, parallel;
  const double ts = seconds([&] { serial = f(Exec::serial); });
  const double tp = seconds([&] { parallel = f(Exec::parallel); });
  std::cout << fmt::format("{:<28} serial {:8.3f} s   parallel {:8.3f} s   speedup {:5.2f}x   {}\n", name, ts, tp,
                           tp > 0 ? ts / tp : 0.0, serial == parallel ? "identical" : "MISMATCH");
}

} // namespace

int main(int argc, char **argv) {
  const std::uint64_t boots = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1000;
  std::cout << fmt::format("OpenMP threads: {}\n", omp_get_max_threads());

  const Scenario bc = builtin_scenario("bc_privilege_escalation");
  compare("obfuscation Monte Carlo", [&](Exec e) {
    auto st = obfuscation_defeat(bc, boots, 1, e);
    return st.defeated;
  });

  const Scenario sweep = builtin_scenario("duty_cycle_sweep");
  compare("duty sweep (4 points)", [&](Exec e) { return sweep_json(sweep_duty(sweep, {0.2, 0.3, 0.5, 1.0}, 100, e)); });

  const Scenario matrix = builtin_scenario("countermeasure_matrix");
  compare("countermeasure matrix", [&](Exec e) { return matrix_json(countermeasure_matrix(matrix, e)); });
  return 0;
}
