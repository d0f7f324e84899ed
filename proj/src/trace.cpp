#include "rftrojan/trace.hpp"

#include <array>
#include <charconv>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace rft::trace {

namespace {

struct KindInfo {
  Kind kind;
  std::string_view name;
  Phase phase;
};

constexpr std::array<KindInfo, 20> kKinds{{
    {Kind::HammerObserved, "HammerObserved", Phase::trigger},
    {Kind::ChargeSample, "ChargeSample", Phase::trigger},
    {Kind::Triggered, "Triggered", Phase::trigger},
    {Kind::Reset, "Reset", Phase::trigger},
    {Kind::PayloadArmed, "PayloadArmed", Phase::payload_control},
    {Kind::PayloadFired, "PayloadFired", Phase::payload_control},
    {Kind::WindowOpen, "WindowOpen", Phase::payload_control},
    {Kind::WindowClose, "WindowClose", Phase::payload_control},
    {Kind::RfRead, "RfRead", Phase::reads},
    {Kind::RfWrite, "RfWrite", Phase::write_commit},
    {Kind::CplRead, "CplRead", Phase::reads},
    {Kind::RegisterRead, "RegisterRead", Phase::reads},
    {Kind::AccessOk, "AccessOk", Phase::reads},
    {Kind::SegFault, "SegFault", Phase::reads},
    {Kind::PageFault, "PageFault", Phase::reads},
    {Kind::ContextSwitch, "ContextSwitch", Phase::reads},
    {Kind::Fork, "Fork", Phase::reads},
    {Kind::Exit, "Exit", Phase::reads},
    {Kind::Detection, "Detection", Phase::defense},
    {Kind::Skipped, "Skipped", Phase::defense},
}};

const KindInfo &info(Kind kind) noexcept { return kKinds[static_cast<std::size_t>(kind)]; }

void append_value(std::string &out, const Value &v) {
  if (const auto *i = std::get_if<std::int64_t>(&v))
    fmt::format_to(std::back_inserter(out), "{}", *i);
  else if (const auto *h = std::get_if<Hex>(&v))
    fmt::format_to(std::back_inserter(out), "0x{:08x}", h->value);
  else if (const auto *d = std::get_if<double>(&v))
    fmt::format_to(std::back_inserter(out), "{:.9f}", *d);
  else
    out += std::get<std::string>(v);
}

} // namespace

std::string_view to_string(Kind kind) noexcept { return info(kind).name; }

Phase phase_of(Kind kind) noexcept { return info(kind).phase; }

std::optional<Kind> kind_from_string(std::string_view name) noexcept {
  for (const auto &k : kKinds)
    if (k.name == name)
      return k.kind;
  return std::nullopt;
}

const Value *Event::find(std::string_view key) const noexcept {
  for (const auto &f : fields)
    if (key == f.key)
      return &f.value;
  return nullptr;
}

std::int64_t Event::num(std::string_view key) const {
  const Value *v = find(key);
  if (v == nullptr)
    throw std::out_of_range(fmt::format("{} has no field {}", to_string(kind), key));
  if (const auto *h = std::get_if<Hex>(v))
    return h->value;
  return std::get<std::int64_t>(*v);
}

std::uint32_t Event::word(std::string_view key) const { return static_cast<std::uint32_t>(num(key)); }

double Event::real(std::string_view key) const {
  const Value *v = find(key);
  if (v == nullptr)
    throw std::out_of_range(fmt::format("{} has no field {}", to_string(kind), key));
  return std::get<double>(*v);
}

std::string Event::text(std::string_view key) const {
  const Value *v = find(key);
  if (v == nullptr)
    throw std::out_of_range(fmt::format("{} has no field {}", to_string(kind), key));
  std::string s;
  append_value(s, *v);
  return s;
}

std::string Event::to_line() const {
  std::string line = fmt::format("{}\t{}", cycle, to_string(kind));
  for (const auto &f : fields) {
    line += '\t';
    line += f.key;
    line += '=';
    append_value(line, f.value);
  }
  return line;
}

std::optional<ParsedLine> parse_line(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    cols.push_back(line.substr(start, tab - start));
    if (tab == std::string_view::npos)
      break;
    start = tab + 1;
  }
  if (cols.size() < 2)
    return std::nullopt;
  ParsedLine out;
  auto [ptr, ec] = std::from_chars(cols[0].data(), cols[0].data() + cols[0].size(), out.cycle);
  if (ec != std::errc{} || ptr != cols[0].data() + cols[0].size())
    return std::nullopt;
  auto kind = kind_from_string(cols[1]);
  if (!kind)
    return std::nullopt;
  out.kind = *kind;
  for (std::size_t i = 2; i < cols.size(); ++i) {
    auto eq = cols[i].find('=');
    if (eq == std::string_view::npos)
      return std::nullopt;
    out.fields.emplace_back(std::string(cols[i].substr(0, eq)), std::string(cols[i].substr(eq + 1)));
  }
  return out;
}

void Trace::push(Event event) {
  if (mode_ == Mode::off)
    return;
  ++count_;
  const std::string line = event.to_line();
  digest_ = fnv1a(line, digest_);
  digest_ = fnv1a("\n", digest_);
  if (mode_ == Mode::full)
    events_.push_back(std::move(event));
}

void Trace::write_tsv(std::ostream &out) const {
  for (const auto &e : events_)
    out << e.to_line() << '\n';
}

std::uint64_t digest_of(const std::vector<Event> &events, std::initializer_list<Kind> skip) {
  std::uint64_t h = kFnvOffset;
  for (const auto &e : events) {
    bool skipped = false;
    for (Kind k : skip)
      skipped = skipped || e.kind == k;
    if (skipped)
      continue;
    h = fnv1a(e.to_line(), h);
    h = fnv1a("\n", h);
  }
  return h;
}

} // namespace rft::trace
