#pragma once

#include "obcov/experiments.hpp"
#include "obcov/quantize.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>

namespace obcov {

/// Resolved settings for one CLI command. The same flat key vocabulary is
/// used by `key = value` config files, `--set key=value` overrides and the
/// "config" object of every JSON sidecar.
struct Config {
    ExperimentSpec spec;

    // acquire
    DitherPolicy policy = DitherPolicy::GlobalAdaptive;
    double lambda = 1.0;

    // estimate
    std::string input;
    std::string mask;
    std::string truth;
    std::string kind = "auto";

    // grid-search: lambda | c1 | c1_entrywise
    std::string target = "lambda";
    LambdaGrid c1_grid{0.025, 1.0, 40};

    std::string out;
    /// The lambda grid follows 4 ||Sigma||_inf until lambda_min/lambda_max
    /// are given explicitly.
    bool lambda_grid_auto = true;
};

/// Defaults for `acquire`, `estimate`, `reproduce-1`..`reproduce-3`,
/// `rate-study` and `grid-search`.
Config default_config(std::string_view command);

/// Throws InvalidConfig for unknown keys or unparsable values.
void apply_setting(Config& config, std::string_view key, std::string_view value);

/// `key = value` lines (# comments) or a JSON object; a JSON sidecar is
/// accepted as-is and its "config" object applied.
void load_config_file(Config& config, const std::filesystem::path& path);
void load_config_text(Config& config, std::string_view text);

/// Fills the automatic lambda grid from the first sigma.
void resolve_config(Config& config);

/// Every key that affects results. Thread count and output path are left
/// out so that the sidecar does not change with them.
nlohmann::ordered_json config_to_json(const Config& config, std::string_view command);

std::optional<DitherPolicy> parse_policy(std::string_view name) noexcept;

} // namespace obcov
