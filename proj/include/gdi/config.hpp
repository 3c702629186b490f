#pragma once

#include <filesystem>
#include <string_view>

#include "json.hpp"

#include "gdi/simulate.hpp"

namespace gdi {

/// Reads the TOML subset used by study configs: [tables], dotted keys,
/// strings, numbers, booleans, arrays (nested, multi-line) and inline tables.
/// Throws ParseError naming the line.
nlohmann::json parse_toml(std::string_view text);

/// Builds a StudyConfig from its JSON form. Relative paths resolve against
/// `base_dir`. Throws ConfigInvalid listing every violation.
StudyConfig study_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});

/// `.json` files are read as JSON, anything else as TOML.
StudyConfig load_study_config(const std::filesystem::path& path);

/// Default grouping of the built-in designs.
Grouping builtin_grouping(std::string_view builtin);

}  // namespace gdi
