#pragma once

// Scenarios compiled into the library from scenarios/*.yaml.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rftrojan/scenario.hpp"

namespace rft::harness {

std::vector<std::string> builtin_names();

/// Source text of a builtin, or nullopt for an unknown name.
std::optional<std::string_view> builtin_text(std::string_view name);

/// Throws std::out_of_range for an unknown name.
Scenario builtin_scenario(std::string_view name);

/// A builtin name, else a path (relative paths resolve against `base_dir`).
Scenario resolve_scenario(const std::string &name_or_path, const std::filesystem::path &base_dir = {});

} // namespace rft::harness
