#include "rftrojan/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace rft::harness {

namespace {

template <class... Ts> struct overloaded : Ts... { using Ts::operator()...; };
template <class... Ts> overloaded(Ts...) -> overloaded<Ts...>;

std::string join_issues(const std::vector<Issue> &issues) {
  std::string out = "scenario validation failed:";
  for (const auto &i : issues)
    out += fmt::format("\n  {}: {}", i.path.empty() ? "<root>" : i.path, i.message);
  return out;
}

// Walks a YAML tree recording type errors against field paths instead of
// throwing at the first one.
class Reader {
public:
  explicit Reader(std::vector<Issue> &issues) : issues_(issues) {}

  void issue(const std::string &path, std::string message) {
    issues_.push_back({path, std::move(message)});
  }

  bool is_map(const YAML::Node &n, const std::string &path) {
    if (n.IsMap())
      return true;
    issue(path, "expected a mapping");
    return false;
  }

  bool is_seq(const YAML::Node &n, const std::string &path) {
    if (n.IsSequence())
      return true;
    issue(path, "expected a list");
    return false;
  }

  void allow_keys(const YAML::Node &n, const std::string &path, std::initializer_list<std::string_view> keys) {
    for (const auto &kv : n) {
      const std::string key = kv.first.Scalar();
      bool known = false;
      for (auto k : keys)
        known = known || key == k;
      if (!known)
        issue(join(path, key), "unknown key");
    }
  }

  static std::string join(const std::string &path, std::string_view key) {
    return path.empty() ? std::string(key) : fmt::format("{}.{}", path, key);
  }
  static std::string index(const std::string &path, std::size_t i) { return fmt::format("{}[{}]", path, i); }

  std::optional<std::uint64_t> u64(const YAML::Node &n, const std::string &path) {
    if (!n.IsScalar()) {
      issue(path, "expected an integer");
      return std::nullopt;
    }
    std::string s = n.Scalar();
    int base = 10;
    std::string_view digits = s;
    if (digits.size() > 2 && digits[0] == '0' && (digits[1] == 'x' || digits[1] == 'X')) {
      base = 16;
      digits.remove_prefix(2);
    } else if (digits.size() > 2 && digits[0] == '0' && (digits[1] == 'b' || digits[1] == 'B')) {
      base = 2;
      digits.remove_prefix(2);
    }
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v, base);
    if (digits.empty() || ec != std::errc{} || ptr != digits.data() + digits.size()) {
      issue(path, fmt::format("'{}' is not a non-negative integer", s));
      return std::nullopt;
    }
    return v;
  }

  template <class T> void uint_field(const YAML::Node &map, const std::string &path, std::string_view key, T &out) {
    const YAML::Node n = map[std::string(key)];
    if (!n)
      return;
    const std::string p = join(path, key);
    if (auto v = u64(n, p)) {
      if (*v > std::numeric_limits<T>::max())
        issue(p, fmt::format("{} is out of range", *v));
      else
        out = static_cast<T>(*v);
    }
  }

  template <class T>
  void uint_field(const YAML::Node &map, const std::string &path, std::string_view key, std::optional<T> &out) {
    if (!map[std::string(key)])
      return;
    T v{};
    uint_field(map, path, key, v);
    out = v;
  }

  void real_field(const YAML::Node &map, const std::string &path, std::string_view key, double &out) {
    const YAML::Node n = map[std::string(key)];
    if (!n)
      return;
    try {
      out = n.as<double>();
    } catch (const YAML::Exception &) {
      issue(join(path, key), "expected a number");
    }
  }

  void bool_field(const YAML::Node &map, const std::string &path, std::string_view key, bool &out) {
    const YAML::Node n = map[std::string(key)];
    if (!n)
      return;
    try {
      out = n.as<bool>();
    } catch (const YAML::Exception &) {
      issue(join(path, key), "expected true or false");
    }
  }

  void string_field(const YAML::Node &map, const std::string &path, std::string_view key, std::string &out) {
    const YAML::Node n = map[std::string(key)];
    if (!n)
      return;
    if (!n.IsScalar())
      issue(join(path, key), "expected a string");
    else
      out = n.Scalar();
  }

  template <class E>
  void enum_field(const YAML::Node &map, const std::string &path, std::string_view key, E &out,
                  std::initializer_list<std::pair<std::string_view, E>> names) {
    const YAML::Node n = map[std::string(key)];
    if (!n)
      return;
    const std::string p = join(path, key);
    if (!n.IsScalar()) {
      issue(p, "expected a string");
      return;
    }
    for (const auto &[name, value] : names)
      if (n.Scalar() == name) {
        out = value;
        return;
      }
    std::string allowed;
    for (const auto &[name, _] : names)
      allowed += fmt::format("{}{}", allowed.empty() ? "" : ", ", name);
    issue(p, fmt::format("'{}' is not one of: {}", n.Scalar(), allowed));
  }

  // Either a bit string, most significant first ("10", "x1x0"), or a
  // mapping from bit index to value.
  std::optional<std::vector<trigger::PatternTerm>> pattern(const YAML::Node &n, const std::string &path) {
    std::vector<trigger::PatternTerm> terms;
    if (n.IsScalar()) {
      const std::string s = n.Scalar();
      for (std::size_t i = 0; i < s.size(); ++i) {
        const unsigned bit = static_cast<unsigned>(s.size() - 1 - i);
        if (s[i] == '0' || s[i] == '1')
          terms.push_back({bit, s[i] == '1'});
        else if (s[i] != 'x' && s[i] != 'X') {
          issue(path, fmt::format("pattern character '{}' is not 0, 1 or x", s[i]));
          return std::nullopt;
        }
      }
      return terms;
    }
    if (n.IsMap()) {
      for (const auto &kv : n) {
        auto bit = u64(kv.first, path);
        auto value = u64(kv.second, fmt::format("{}.{}", path, kv.first.Scalar()));
        if (!bit || !value)
          return std::nullopt;
        if (*value > 1) {
          issue(fmt::format("{}.{}", path, *bit), "bit value must be 0 or 1");
          return std::nullopt;
        }
        terms.push_back({static_cast<unsigned>(std::min<std::uint64_t>(*bit, 1u << 20)), *value == 1});
      }
      return terms;
    }
    issue(path, "expected a bit string or a bit-to-value mapping");
    return std::nullopt;
  }

private:
  std::vector<Issue> &issues_;
};

// Patterns cannot be built before the bus width is known; they are kept as
// raw terms until the whole file has been read.
struct PendingPattern {
  std::string path;
  std::vector<trigger::PatternTerm> terms;
  std::function<void(trigger::PatternSpec)> assign;
};

struct Loader {
  Reader r;
  Scenario s;
  std::vector<PendingPattern> patterns;
  // Payload targets given by register name, resolved once the map is known.
  std::vector<std::tuple<std::string, std::string, unsigned *>> named_targets;

  explicit Loader(std::vector<Issue> &issues) : r(issues) {}

  void pattern(const YAML::Node &map, const std::string &path, std::string_view key,
               std::function<void(trigger::PatternSpec)> assign) {
    const YAML::Node n = map[std::string(key)];
    if (!n)
      return;
    const std::string p = Reader::join(path, key);
    if (auto terms = r.pattern(n, p))
      patterns.push_back({p, std::move(*terms), std::move(assign)});
  }

  void pages(const YAML::Node &n, const std::string &path, std::vector<machine::PageSpec> &out) {
    if (!r.is_seq(n, path))
      return;
    for (std::size_t i = 0; i < n.size(); ++i) {
      const std::string p = Reader::index(path, i);
      if (!r.is_map(n[i], p))
        continue;
      r.allow_keys(n[i], p, {"vaddr", "count", "writable"});
      machine::PageSpec spec;
      if (!n[i]["vaddr"])
        r.issue(Reader::join(p, "vaddr"), "required");
      r.uint_field(n[i], p, "vaddr", spec.vaddr);
      r.uint_field(n[i], p, "count", spec.count);
      r.bool_field(n[i], p, "writable", spec.writable);
      out.push_back(spec);
    }
  }

  void machine_block(const YAML::Node &n, const std::string &path) {
    if (!r.is_map(n, path))
      return;
    r.allow_keys(n, path,
                 {"geometry", "kernel_base", "address_bits", "l1", "tlb_entries", "paging_port",
                  "cpl_port_policy", "charge_sample_interval", "registers"});
    auto &m = s.machine;
    if (const auto g = n["geometry"]) {
      const std::string p = Reader::join(path, "geometry");
      if (r.is_map(g, p)) {
        r.allow_keys(g, p, {"entries", "word_bits", "read_ports", "write_ports", "cells_per_lbl", "lbls_per_gbl"});
        r.uint_field(g, p, "entries", m.geometry.entries);
        r.uint_field(g, p, "word_bits", m.geometry.word_bits);
        r.uint_field(g, p, "read_ports", m.geometry.read_ports);
        r.uint_field(g, p, "write_ports", m.geometry.write_ports);
        r.uint_field(g, p, "cells_per_lbl", m.geometry.cells_per_lbl);
        r.uint_field(g, p, "lbls_per_gbl", m.geometry.lbls_per_gbl);
      }
    }
    r.uint_field(n, path, "kernel_base", m.kernel_base);
    r.uint_field(n, path, "address_bits", m.address_bits);
    if (const auto l1 = n["l1"]) {
      const std::string p = Reader::join(path, "l1");
      if (r.is_map(l1, p)) {
        r.allow_keys(l1, p, {"num_sets", "line_size"});
        r.uint_field(l1, p, "num_sets", m.l1.num_sets);
        r.uint_field(l1, p, "line_size", m.l1.line_size);
      }
    }
    r.uint_field(n, path, "tlb_entries", m.tlb_entries);
    r.uint_field(n, path, "paging_port", m.paging_port);
    r.enum_field(n, path, "cpl_port_policy", m.cpl_port_policy,
                 {{"fixed", machine::CplPortPolicy::fixed}, {"per_process", machine::CplPortPolicy::per_process}});
    r.uint_field(n, path, "charge_sample_interval", m.charge_sample_interval);
    if (const auto regs = n["registers"]) {
      const std::string p = Reader::join(path, "registers");
      if (r.is_map(regs, p)) {
        r.allow_keys(regs, p, {"cpl_shift", "slots"});
        r.uint_field(regs, p, "cpl_shift", m.registers.cpl_shift);
        if (const auto slots = regs["slots"]) {
          const std::string sp = Reader::join(p, "slots");
          if (r.is_seq(slots, sp)) {
            m.registers.slots.clear();
            for (std::size_t i = 0; i < slots.size(); ++i) {
              const std::string ip = Reader::index(sp, i);
              if (!r.is_map(slots[i], ip))
                continue;
              r.allow_keys(slots[i], ip, {"name", "entry", "class"});
              machine::RegisterSlot slot;
              r.string_field(slots[i], ip, "name", slot.name);
              r.uint_field(slots[i], ip, "entry", slot.entry);
              r.enum_field(slots[i], ip, "class", slot.cls,
                           {{"segment", machine::RegisterClass::segment},
                            {"control", machine::RegisterClass::control},
                            {"gpr", machine::RegisterClass::gpr}});
              if (slot.name.empty())
                r.issue(Reader::join(ip, "name"), "required");
              m.registers.slots.push_back(slot);
            }
          }
        }
      }
    }
  }

  void trigger_block(const YAML::Node &n, const std::string &path) {
    if (!r.is_map(n, path))
      return;
    r.allow_keys(n, path,
                 {"set_address", "set_pattern", "reset_address", "reset_pattern", "reset_mode", "v_max",
                  "v_threshold", "epsilon", "n_set", "n_reset"});
    auto &t = s.trigger;
    r.uint_field(n, path, "set_address", t.set_address);
    pattern(n, path, "set_pattern", [this](trigger::PatternSpec p) { s.trigger.set_pattern = std::move(p); });
    r.uint_field(n, path, "reset_address", t.reset_address);
    pattern(n, path, "reset_pattern", [this](trigger::PatternSpec p) { s.trigger.reset_pattern = std::move(p); });
    r.enum_field(n, path, "reset_mode", t.reset_mode,
                 {{"counted", trigger::ResetMode::counted}, {"immediate", trigger::ResetMode::immediate}});
    r.real_field(n, path, "v_max", t.v_max);
    r.real_field(n, path, "v_threshold", t.v_threshold);
    r.real_field(n, path, "epsilon", t.epsilon);
    r.uint_field(n, path, "n_set", t.n_set);
    r.uint_field(n, path, "n_reset", t.n_reset);
    if (!n["set_pattern"])
      r.issue(Reader::join(path, "set_pattern"), "required");
  }

  void target(const YAML::Node &n, const std::string &path, unsigned &out) {
    const YAML::Node t = n["target"];
    const std::string p = Reader::join(path, "target");
    if (!t) {
      r.issue(p, "required");
      return;
    }
    if (t.IsScalar() && !t.Scalar().empty() && std::isdigit(static_cast<unsigned char>(t.Scalar()[0]))) {
      r.uint_field(n, path, "target", out);
      return;
    }
    if (!t.IsScalar()) {
      r.issue(p, "expected a register name or entry index");
      return;
    }
    named_targets.emplace_back(p, t.Scalar(), &out);
  }

  void payload_block(const YAML::Node &n, const std::string &path) {
    if (!r.is_seq(n, path))
      return;
    s.payloads.reserve(n.size());
    for (std::size_t i = 0; i < n.size(); ++i) {
      const std::string p = Reader::index(path, i);
      const YAML::Node a = n[i];
      if (!r.is_map(a, p))
        continue;
      std::string kind;
      r.string_field(a, p, "kind", kind);
      payload::Attachment att;
      if (kind == "bc") {
        r.allow_keys(a, p, {"kind", "target", "bit_mask", "force_to", "addr_x", "addr_y", "pattern"});
        att.params = payload::BcParams{};
      } else if (kind == "rp") {
        r.allow_keys(a, p, {"kind", "target", "bit_mask", "infected_port", "window_cycles", "overhead", "addr_x", "pattern"});
        att.params = payload::RpParams{};
      } else if (kind == "lbl") {
        r.allow_keys(a, p, {"kind", "infected_port", "bit_position", "group_index", "forced_value", "window_cycles", "addr_y", "pattern"});
        att.params = payload::LblParams{};
      } else {
        r.issue(Reader::join(p, "kind"), fmt::format("'{}' is not one of: bc, rp, lbl", kind));
        continue;
      }
      s.payloads.push_back(std::move(att));
      auto &stored = s.payloads.back();
      r.uint_field(a, p, "addr_x", stored.control.addr_x);
      r.uint_field(a, p, "addr_y", stored.control.addr_y);
      const std::size_t idx = s.payloads.size() - 1;
      pattern(a, p, "pattern", [this, idx](trigger::PatternSpec ps) { s.payloads[idx].control.pattern = std::move(ps); });
      if (!a["pattern"])
        r.issue(Reader::join(p, "pattern"), "required");
      if (auto *bc = std::get_if<payload::BcParams>(&stored.params)) {
        target(a, p, bc->target_entry);
        r.uint_field(a, p, "bit_mask", bc->bit_mask);
        r.enum_field(a, p, "force_to", bc->force_to,
                     {{"zeros", payload::BcForce::zeros}, {"ones", payload::BcForce::ones}, {"both", payload::BcForce::both}});
        if (!a["addr_x"] && bc->force_to != payload::BcForce::ones)
          r.issue(Reader::join(p, "addr_x"), "required");
        if (!a["addr_y"] && bc->force_to != payload::BcForce::zeros)
          r.issue(Reader::join(p, "addr_y"), "required");
      } else if (auto *rp = std::get_if<payload::RpParams>(&stored.params)) {
        target(a, p, rp->target_entry);
        r.uint_field(a, p, "bit_mask", rp->bit_mask);
        r.uint_field(a, p, "infected_port", rp->infected_port);
        r.uint_field(a, p, "window_cycles", rp->window_cycles);
        if (!a["addr_x"])
          r.issue(Reader::join(p, "addr_x"), "required");
        if (const auto ov = a["overhead"]) {
          const std::string op = Reader::join(p, "overhead");
          if (r.is_seq(ov, op)) {
            rp->overhead.clear();
            for (std::size_t j = 0; j < ov.size(); ++j) {
              const std::string v = ov[j].IsScalar() ? ov[j].Scalar() : "";
              if (v == "0->1")
                rp->overhead.push_back(payload::Polarity::zero_to_one);
              else if (v == "1->0")
                rp->overhead.push_back(payload::Polarity::one_to_zero);
              else
                r.issue(Reader::index(op, j), "expected 0->1 or 1->0");
            }
          }
        }
      } else if (auto *lbl = std::get_if<payload::LblParams>(&stored.params)) {
        r.uint_field(a, p, "infected_port", lbl->infected_port);
        r.uint_field(a, p, "bit_position", lbl->bit_position);
        r.uint_field(a, p, "group_index", lbl->group_index);
        r.bool_field(a, p, "forced_value", lbl->forced_value);
        r.uint_field(a, p, "window_cycles", lbl->window_cycles);
        if (!a["addr_y"])
          r.issue(Reader::join(p, "addr_y"), "required");
      }
    }
  }

  void defense_block(const YAML::Node &n, const std::string &path) {
    if (!r.is_map(n, path))
      return;
    r.allow_keys(n, path, {"verify", "hash", "obfuscation"});
    auto &d = s.machine.defense;
    if (const auto v = n["verify"]) {
      const std::string p = Reader::join(path, "verify");
      if (r.is_map(v, p)) {
        r.allow_keys(v, p, {"mode", "reserved_port", "port_pressure"});
        r.enum_field(v, p, "mode", d.verify.mode,
                     {{"off", defense::VerifyMode::off},
                      {"dedicated", defense::VerifyMode::dedicated},
                      {"opportunistic", defense::VerifyMode::opportunistic}});
        r.uint_field(v, p, "reserved_port", d.verify.reserved_port);
        r.real_field(v, p, "port_pressure", d.verify.port_pressure);
      }
    }
    if (const auto h = n["hash"]) {
      const std::string p = Reader::join(path, "hash");
      if (r.is_map(h, p)) {
        r.allow_keys(h, p, {"enabled", "puf_seed", "response_width"});
        r.bool_field(h, p, "enabled", d.hash.enabled);
        r.uint_field(h, p, "puf_seed", d.hash.puf_seed);
        r.uint_field(h, p, "response_width", d.hash.response_width);
      }
    }
    if (const auto o = n["obfuscation"]) {
      const std::string p = Reader::join(path, "obfuscation");
      if (r.is_map(o, p)) {
        r.allow_keys(o, p, {"mode", "boot_seed"});
        r.enum_field(o, p, "mode", d.obfuscation.mode,
                     {{"off", machine::ObfuscationMode::off},
                      {"identity", machine::ObfuscationMode::identity},
                      {"seeded", machine::ObfuscationMode::seeded}});
        r.uint_field(o, p, "boot_seed", d.obfuscation.boot_seed);
      }
    }
  }

  void step(const YAML::Node &n, const std::string &p, std::vector<Step> &out) {
    if (!r.is_map(n, p))
      return;
    std::string op;
    r.string_field(n, p, "op", op);
    Step st;
    r.string_field(n, p, "label", st.label);
    auto need = [&](std::string_view key) {
      if (!n[std::string(key)])
        r.issue(Reader::join(p, key), "required");
    };
    if (op == "write") {
      r.allow_keys(n, p, {"op", "label", "vaddr", "data", "repeat"});
      WriteStep w;
      need("vaddr");
      need("data");
      r.uint_field(n, p, "vaddr", w.vaddr);
      r.uint_field(n, p, "data", w.data);
      r.uint_field(n, p, "repeat", w.repeat);
      st.op = w;
    } else if (op == "read") {
      r.allow_keys(n, p, {"op", "label", "vaddr", "expect"});
      ReadStep rd;
      need("vaddr");
      r.uint_field(n, p, "vaddr", rd.vaddr);
      if (n["expect"]) {
        Expect e = Expect::ok;
        r.enum_field(n, p, "expect", e, {{"ok", Expect::ok}, {"fault", Expect::fault}});
        rd.expect = e;
      }
      st.op = rd;
    } else if (op == "idle") {
      r.allow_keys(n, p, {"op", "label", "cycles"});
      IdleStep i;
      r.uint_field(n, p, "cycles", i.cycles);
      st.op = i;
    } else if (op == "fork") {
      r.allow_keys(n, p, {"op", "label", "n"});
      ForkStep f;
      need("n");
      r.uint_field(n, p, "n", f.n);
      st.op = f;
    } else if (op == "switch_to") {
      r.allow_keys(n, p, {"op", "label", "pid"});
      SwitchToStep sw;
      need("pid");
      r.uint_field(n, p, "pid", sw.pid);
      st.op = sw;
    } else if (op == "read_register") {
      r.allow_keys(n, p, {"op", "label", "name", "expect"});
      ReadRegisterStep rr;
      need("name");
      r.string_field(n, p, "name", rr.name);
      r.uint_field(n, p, "expect", rr.expect);
      st.op = rr;
    } else {
      r.issue(Reader::join(p, "op"),
              fmt::format("'{}' is not one of: write, read, idle, fork, switch_to, read_register", op));
      return;
    }
    out.push_back(std::move(st));
  }

  void processes_block(const YAML::Node &n, const std::string &path) {
    if (!r.is_seq(n, path))
      return;
    for (std::size_t i = 0; i < n.size(); ++i) {
      const std::string p = Reader::index(path, i);
      const YAML::Node pn = n[i];
      if (!r.is_map(pn, p))
        continue;
      r.allow_keys(pn, p, {"pid", "cpl", "registers", "pages", "program"});
      ProcessDef def;
      if (!pn["pid"])
        r.issue(Reader::join(p, "pid"), "required");
      r.uint_field(pn, p, "pid", def.spec.pid);
      r.uint_field(pn, p, "cpl", def.spec.cpl);
      if (const auto regs = pn["registers"]) {
        const std::string rp = Reader::join(p, "registers");
        if (r.is_map(regs, rp))
          for (const auto &kv : regs)
            if (auto v = r.u64(kv.second, Reader::join(rp, kv.first.Scalar()))) {
              if (*v > 0xffffffffull)
                r.issue(Reader::join(rp, kv.first.Scalar()), "value exceeds 32 bits");
              def.spec.registers[kv.first.Scalar()] = static_cast<Word>(*v);
            }
      }
      if (const auto pg = pn["pages"])
        pages(pg, Reader::join(p, "pages"), def.spec.pages);
      if (const auto prog = pn["program"]) {
        const std::string pp = Reader::join(p, "program");
        if (r.is_seq(prog, pp))
          for (std::size_t j = 0; j < prog.size(); ++j)
            step(prog[j], Reader::index(pp, j), def.program);
      }
      s.processes.push_back(std::move(def));
    }
  }

  void load(const YAML::Node &root) {
    if (!r.is_map(root, ""))
      return;
    r.allow_keys(root, "",
                 {"name", "description", "seed", "max_cycles", "machine", "trigger", "payloads", "defense",
                  "kernel", "memory", "processes", "sweep", "matrix"});
    r.string_field(root, "", "name", s.name);
    r.string_field(root, "", "description", s.description);
    r.uint_field(root, "", "seed", s.seed);
    r.uint_field(root, "", "max_cycles", s.max_cycles);
    if (const auto m = root["machine"])
      machine_block(m, "machine");
    if (const auto t = root["trigger"])
      trigger_block(t, "trigger");
    else
      r.issue("trigger", "required");
    if (const auto p = root["payloads"])
      payload_block(p, "payloads");
    if (const auto d = root["defense"])
      defense_block(d, "defense");
    if (const auto k = root["kernel"]) {
      if (r.is_map(k, "kernel")) {
        r.allow_keys(k, "kernel", {"pages"});
        if (const auto pg = k["pages"])
          pages(pg, "kernel.pages", s.kernel_pages);
      }
    }
    if (const auto mem = root["memory"]) {
      if (r.is_seq(mem, "memory"))
        for (std::size_t i = 0; i < mem.size(); ++i) {
          const std::string p = Reader::index("memory", i);
          if (!r.is_map(mem[i], p))
            continue;
          r.allow_keys(mem[i], p, {"vaddr", "value", "pid"});
          MemoryInit init;
          r.uint_field(mem[i], p, "vaddr", init.vaddr);
          r.uint_field(mem[i], p, "value", init.value);
          r.uint_field(mem[i], p, "pid", init.pid);
          s.memory.push_back(init);
        }
    }
    if (const auto pr = root["processes"])
      processes_block(pr, "processes");
    else
      r.issue("processes", "required");
    if (const auto sw = root["sweep"]) {
      if (r.is_map(sw, "sweep")) {
        r.allow_keys(sw, "sweep", {"duties", "period"});
        SweepSpec spec;
        r.uint_field(sw, "sweep", "period", spec.period);
        if (const auto d = sw["duties"]) {
          if (r.is_seq(d, "sweep.duties"))
            for (std::size_t i = 0; i < d.size(); ++i) {
              try {
                spec.duties.push_back(d[i].as<double>());
              } catch (const YAML::Exception &) {
                r.issue(Reader::index("sweep.duties", i), "expected a number");
              }
            }
        }
        s.sweep = spec;
      }
    }
    if (const auto mx = root["matrix"]) {
      if (r.is_map(mx, "matrix")) {
        r.allow_keys(mx, "matrix", {"attacks", "defenses"});
        MatrixSpec spec;
        for (const char *key : {"attacks", "defenses"}) {
          const std::string p = Reader::join("matrix", key);
          auto &out = std::string_view(key) == "attacks" ? spec.attacks : spec.defenses;
          if (const auto l = mx[key]) {
            if (r.is_seq(l, p))
              for (std::size_t i = 0; i < l.size(); ++i) {
                if (l[i].IsScalar())
                  out.push_back(l[i].Scalar());
                else
                  r.issue(Reader::index(p, i), "expected a string");
              }
          }
        }
        s.matrix = spec;
      }
    }
  }

  void finish() {
    const unsigned width = s.machine.geometry.word_bits;
    for (auto &pp : patterns) {
      auto errs = trigger::PatternSpec::problems(width, pp.terms);
      if (!errs.empty()) {
        for (auto &e : errs)
          r.issue(pp.path, e);
        continue;
      }
      pp.assign(trigger::PatternSpec(width, std::move(pp.terms)));
    }
    for (auto &[path, name, out] : named_targets) {
      if (const auto *slot = s.machine.registers.find(name))
        *out = slot->entry;
      else
        r.issue(path, fmt::format("unknown register '{}'", name));
    }
  }
};

bool pow2(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

} // namespace

std::string_view step_name(const Step &step) noexcept {
  static constexpr std::string_view names[] = {"write", "read", "idle", "fork", "switch_to", "read_register"};
  return names[step.op.index()];
}

ValidationError::ValidationError(std::vector<Issue> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

std::vector<Issue> validate(const Scenario &s) {
  std::vector<Issue> out;
  auto add = [&](std::string path, std::string msg) { out.push_back({std::move(path), std::move(msg)}); };
  const auto &m = s.machine;
  const auto &g = m.geometry;

  try {
    g.validate();
  } catch (const std::invalid_argument &e) {
    add("machine.geometry", e.what());
    return out;
  }
  for (auto &e : m.registers.problems(g))
    add("machine.registers", e);
  if (m.address_bits == 0 || m.address_bits > 48)
    add("machine.address_bits", "must lie in [1, 48]");
  const VAddr limit = VAddr{1} << std::min(m.address_bits, 48u);
  auto in_space = [&](VAddr a, const std::string &path) {
    if (a >= limit)
      add(path, fmt::format("address {:#x} outside the {}-bit address space", a, m.address_bits));
  };
  in_space(m.kernel_base, "machine.kernel_base");
  if (!pow2(m.l1.num_sets))
    add("machine.l1.num_sets", "must be a power of two");
  if (!pow2(m.l1.line_size))
    add("machine.l1.line_size", "must be a power of two");
  if (m.paging_port >= g.read_ports)
    add("machine.paging_port", fmt::format("port {} >= {}", m.paging_port, g.read_ports));
  if (s.max_cycles == 0)
    add("max_cycles", "must be >= 1");

  const auto &t = s.trigger;
  try {
    (void)trigger::calibrate(t);
  } catch (const std::invalid_argument &e) {
    add("trigger", e.what());
  }
  if (t.n_reset == 0)
    add("trigger.n_reset", "must be >= 1");
  in_space(t.set_address, "trigger.set_address");
  if (t.reset_address) {
    in_space(*t.reset_address, "trigger.reset_address");
    if (t.reset_pattern.empty())
      add("trigger.reset_pattern", "required when reset_address is set");
    else if (pow2(m.l1.num_sets) && pow2(m.l1.line_size)) {
      auto set_of = [&](VAddr a) { return (a / m.l1.line_size) % m.l1.num_sets; };
      if (set_of(*t.reset_address) == set_of(t.set_address) && t.set_pattern.overlaps(t.reset_pattern))
        add("trigger.reset_address",
            fmt::format("set and reset addresses share L1 set {} and their patterns overlap, so one write "
                        "could hammer both cells",
                        set_of(t.set_address)));
    }
  }

  for (std::size_t i = 0; i < s.payloads.size(); ++i) {
    const std::string p = fmt::format("payloads[{}]", i);
    for (auto &e : payload::problems(s.payloads[i], g))
      add(p, e);
    in_space(s.payloads[i].control.addr_x, p + ".addr_x");
    in_space(s.payloads[i].control.addr_y, p + ".addr_y");
  }

  const auto &d = m.defense;
  if (d.verify.mode == defense::VerifyMode::dedicated) {
    if (d.verify.reserved_port >= g.read_ports)
      add("defense.verify.reserved_port", fmt::format("port {} >= {}", d.verify.reserved_port, g.read_ports));
    else if (d.verify.reserved_port == m.paging_port)
      add("defense.verify.reserved_port", "must differ from machine.paging_port");
  }
  if (!(d.verify.port_pressure >= 0.0 && d.verify.port_pressure <= 1.0))
    add("defense.verify.port_pressure", "must lie in [0, 1]");
  if (d.hash.response_width == 0 || d.hash.response_width > 64)
    add("defense.hash.response_width", "must lie in [1, 64]");
  if (d.hash.enabled && g.entries > 256)
    add("defense.hash", "PUF challenges are 8 bits; at most 256 entries can be protected");

  if (s.processes.empty())
    add("processes", "at least one process is required");
  std::set<Pid> pids;
  for (std::size_t i = 0; i < s.processes.size(); ++i) {
    const auto &def = s.processes[i];
    const std::string p = fmt::format("processes[{}]", i);
    if (def.spec.pid <= 0)
      add(p + ".pid", "must be >= 1");
    if (!pids.insert(def.spec.pid).second)
      add(p + ".pid", fmt::format("duplicate pid {}", def.spec.pid));
    if (def.spec.cpl != 0 && def.spec.cpl != 3)
      add(p + ".cpl", "must be 0 or 3");
    for (const auto &[name, _] : def.spec.registers)
      if (m.registers.find(name) == nullptr)
        add(fmt::format("{}.registers.{}", p, name), "unknown register");
    for (std::size_t j = 0; j < def.spec.pages.size(); ++j)
      in_space(def.spec.pages[j].vaddr, fmt::format("{}.pages[{}].vaddr", p, j));
    for (std::size_t j = 0; j < def.program.size(); ++j) {
      const std::string sp = fmt::format("{}.program[{}]", p, j);
      std::visit(overloaded{
                     [&](const WriteStep &w) {
                       in_space(w.vaddr, sp + ".vaddr");
                       if (w.repeat == 0)
                         add(sp + ".repeat", "must be >= 1");
                     },
                     [&](const ReadStep &r) { in_space(r.vaddr, sp + ".vaddr"); },
                     [&](const IdleStep &i) {
                       if (i.cycles == 0)
                         add(sp + ".cycles", "must be >= 1");
                     },
                     [&](const ForkStep &f) {
                       if (f.n == 0)
                         add(sp + ".n", "must be >= 1");
                     },
                     [&](const SwitchToStep &sw) {
                       if (sw.pid <= 0)
                         add(sp + ".pid", "must be >= 1");
                     },
                     [&](const ReadRegisterStep &rr) {
                       if (m.registers.find(rr.name) == nullptr)
                         add(sp + ".name", fmt::format("unknown register '{}'", rr.name));
                     },
                 },
                 def.program[j].op);
    }
  }

  auto covered = [](const std::vector<machine::PageSpec> &pages, VAddr a) {
    for (const auto &pg : pages) {
      const VAddr base = pg.vaddr & ~(machine::kPageSize - 1);
      if (a >= base && a < base + pg.count * machine::kPageSize)
        return true;
    }
    return false;
  };
  for (std::size_t i = 0; i < s.memory.size(); ++i) {
    const auto &init = s.memory[i];
    const std::string p = fmt::format("memory[{}]", i);
    if (init.pid) {
      const ProcessDef *owner = nullptr;
      for (const auto &def : s.processes)
        if (def.spec.pid == *init.pid)
          owner = &def;
      if (owner == nullptr)
        add(p + ".pid", fmt::format("no process {}", *init.pid));
      else if (!covered(owner->spec.pages, init.vaddr) && !covered(s.kernel_pages, init.vaddr))
        add(p + ".vaddr", "address is not mapped for that process");
    } else if (!covered(s.kernel_pages, init.vaddr)) {
      add(p + ".vaddr", "address is not a kernel page (give pid for user memory)");
    }
  }

  if (s.sweep) {
    if (s.sweep->period == 0)
      add("sweep.period", "must be >= 1");
    for (std::size_t i = 0; i < s.sweep->duties.size(); ++i) {
      const double duty = s.sweep->duties[i];
      if (!(duty > 0.0 && duty <= 1.0))
        add(fmt::format("sweep.duties[{}]", i), "must lie in (0, 1]");
    }
  }
  if (s.matrix) {
    static constexpr std::string_view known[] = {"none", "verify_dedicated", "verify_opportunistic", "puf_hash",
                                                 "l1_obfuscation"};
    for (std::size_t i = 0; i < s.matrix->defenses.size(); ++i)
      if (std::find(std::begin(known), std::end(known), s.matrix->defenses[i]) == std::end(known))
        add(fmt::format("matrix.defenses[{}]", i), fmt::format("unknown defense '{}'", s.matrix->defenses[i]));
  }
  return out;
}

Scenario parse_scenario(const std::string &text, const std::filesystem::path &base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception &e) {
    throw ParseError(fmt::format("scenario is not valid YAML: {}", e.what()));
  }
  std::vector<Issue> issues;
  Loader loader(issues);
  loader.load(root);
  loader.finish();
  if (!issues.empty())
    throw ValidationError(std::move(issues));
  auto more = validate(loader.s);
  if (!more.empty())
    throw ValidationError(std::move(more));
  loader.s.base_dir = base_dir;
  return std::move(loader.s);
}

Scenario load_scenario(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw ParseError(fmt::format("cannot read scenario file {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  Scenario s = parse_scenario(buf.str(), path.parent_path());
  if (s.name.empty())
    s.name = path.stem().string();
  return s;
}

Scenario without_label(Scenario scenario, std::string_view label) {
  for (auto &def : scenario.processes)
    std::erase_if(def.program, [&](const Step &st) { return st.label == label; });
  return scenario;
}

std::size_t count_label(const Scenario &scenario, std::string_view label) {
  std::size_t n = 0;
  for (const auto &def : scenario.processes)
    n += static_cast<std::size_t>(
        std::count_if(def.program.begin(), def.program.end(), [&](const Step &st) { return st.label == label; }));
  return n;
}

} // namespace rft::harness
