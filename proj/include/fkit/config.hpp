#ifndef FKIT_CONFIG_HPP
#define FKIT_CONFIG_HPP

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include <fkit/falsifier.hpp>

namespace fkit {

/// A run configuration file plus the settings that only matter to the CLI.
struct LoadedConfig {
    RunConfig run;
    std::string output_dir;
};

/// Every problem is reported as ConfigInvalid naming the offending field
/// ("sampler.kind: ...") or, for JSON syntax errors, the line and column.
LoadedConfig parse_config(std::string_view text);
LoadedConfig load_config(const std::filesystem::path& path);

/// The "space" object of a config: {"domain": ..., "distributions": ...,
/// "constraints": [...]}. `where` prefixes diagnostics.
FeatureSpace parse_space(const nlohmann::ordered_json& j, const std::string& where = "space",
                         std::size_t rejection_budget = FeatureSpace::kDefaultRejectionBudget);
DomainPtr parse_domain(const nlohmann::ordered_json& j, const std::string& where);

/// Accepts either a whole config file or a bare space object.
FeatureSpace load_space(const std::filesystem::path& path);

/// Point from {"leaf.path": value, ...}; missing or extra leaves are
/// PointSpaceMismatch.
Point parse_point(const FeatureSpace& space, const nlohmann::ordered_json& j);

/// Parses text, reporting syntax errors as ConfigInvalid with line:column.
nlohmann::ordered_json parse_json_text(std::string_view text, const std::string& what);

} // namespace fkit

#endif
