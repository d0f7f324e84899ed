#include "rftrojan/builtin.hpp"

#include <stdexcept>

#include <fmt/format.h>

namespace rft::harness {

namespace detail {
extern const std::pair<std::string_view, std::string_view> kBuiltins[];
extern const std::size_t kBuiltinCount;
} // namespace detail

std::vector<std::string> builtin_names() {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < detail::kBuiltinCount; ++i)
    out.emplace_back(detail::kBuiltins[i].first);
  return out;
}

std::optional<std::string_view> builtin_text(std::string_view name) {
  for (std::size_t i = 0; i < detail::kBuiltinCount; ++i)
    if (detail::kBuiltins[i].first == name)
      return detail::kBuiltins[i].second;
  return std::nullopt;
}

Scenario builtin_scenario(std::string_view name) {
  auto text = builtin_text(name);
  if (!text)
    throw std::out_of_range(fmt::format("no builtin scenario '{}'", name));
  Scenario s = parse_scenario(std::string(*text));
  if (s.name.empty())
    s.name = std::string(name);
  return s;
}

Scenario resolve_scenario(const std::string &name_or_path, const std::filesystem::path &base_dir) {
  if (builtin_text(name_or_path))
    return builtin_scenario(name_or_path);
  std::filesystem::path p(name_or_path);
  if (p.is_relative() && !base_dir.empty())
    p = base_dir / p;
  return load_scenario(p);
}

} // namespace rft::harness
