#include "rftrojan/report.hpp"

#include <fmt/format.h>
#include <json.hpp>

namespace rft::harness {

using nlohmann::ordered_json;

std::string hex_digest(std::uint64_t digest) { return fmt::format("0x{:016x}", digest); }

namespace {

template <class T> ordered_json opt(const std::optional<T> &v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

} // namespace

std::string to_json(const Report &r, int indent) {
  ordered_json j;
  j["scenario"] = r.scenario;
  j["seed"] = r.seed;
  j["cycles"] = r.cycles;
  j["max_cycles"] = r.max_cycles;
  j["cycle_budget_exceeded"] = r.cycle_budget_exceeded;
  j["stopped_on_latch"] = r.stopped_on_latch;

  const auto &t = r.trigger;
  j["trigger"] = {
      {"n_set", t.n_set},
      {"hammers_at_latch", opt(t.hammers_at_latch)},
      {"latch_cycle", opt(t.latch_cycle)},
      {"latched_at_end", t.latched_at_end},
      {"final_charge_v", t.final_charge_v},
      {"max_charge_v", t.max_charge_v},
      {"total_set_hammers", t.total_set_hammers},
      {"resets", t.resets},
      {"delta_per_hammer_v", t.calibration.delta_per_hammer},
      {"leak_per_idle_cycle_v", t.calibration.leak_per_idle_cycle},
  };
  j["payload_activations"] = r.activations;
  j["bc_fires"] = r.bc_fires;

  j["attack"] = {
      {"compromised", r.compromised()},
      {"kernel_leak", r.kernel_leak},
      {"denial_of_service", r.denial_of_service},
      {"register_corruption", r.register_corruption},
  };
  auto &procs = j["processes"] = ordered_json::array();
  for (const auto &p : r.processes)
    procs.push_back({
        {"pid", p.pid},
        {"parent", opt(p.parent)},
        {"cpl", p.cpl},
        {"read_port", p.read_port},
        {"status", p.status},
        {"fault_reason", p.fault_reason},
        {"kernel_bytes_read", p.kernel_bytes_read},
        {"seg_faults", p.seg_faults},
        {"page_faults", p.page_faults},
    });
  auto &exps = j["expectations"] = ordered_json::array();
  for (const auto &e : r.expectations)
    exps.push_back({
        {"pid", e.pid},
        {"step", e.step},
        {"label", e.label},
        {"op", e.op},
        {"cycle", e.cycle},
        {"expected", e.expected},
        {"observed", e.observed},
        {"met", e.met},
    });

  j["detections"] = {
      {"RF_READ_MISMATCH", r.rf_read_mismatch},
      {"REGISTER_HASH_MISMATCH", r.register_hash_mismatch},
  };
  j["defense"] = {
      {"verify",
       {{"mode", r.verification.mode},
        {"verified_reads", r.verification.verified},
        {"skipped_verifications", r.verification.skipped},
        {"schedulable_read_ports", r.verification.schedulable_ports}}},
      {"hash_enabled", r.hash_enabled},
      {"l1_obfuscation", r.obfuscation},
  };

  auto &ov = j["overhead"] = ordered_json::array();
  for (const auto &o : r.overhead)
    ov.push_back({
        {"payload", payload::to_string(o.kind)},
        {"polarity", payload::to_string(o.polarity)},
        {"static_power_nW", o.static_power_nW},
        {"dynamic_power_uW", o.dynamic_power_uW},
        {"area_um2", o.area_um2},
        {"use_case", o.use_case},
        {"min_w_over_l", o.min_w_over_l},
    });

  j["trace"] = {{"events", r.trace_events}, {"digest", hex_digest(r.digest)}};
  return j.dump(indent);
}

} // namespace rft::harness
