#pragma once

#include "qevo/market_data.hpp"
#include "qevo/orchestrator.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace qevo {

struct AssetSpec {
    std::string symbol;
    std::filesystem::path path;  // absolute after loading
    AssetClass asset_class = AssetClass::equity;
    double point_value = 1.0;
    std::optional<double> shares;  // for market-cap weighting
};

/// A parsed run configuration file. Relative paths are resolved against the
/// file's directory.
struct LoadedConfig {
    std::filesystem::path source;
    RunConfig run;
    SplitSpec split;
    std::vector<AssetSpec> assets;
};

/// Throws ConfigError naming the offending key (e.g. "evolution.generations").
LoadedConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);
LoadedConfig load_config(const std::filesystem::path& path);

/// Loads and aligns the configured assets.
std::shared_ptr<const Universe> load_universe(const LoadedConfig& config);

}  // namespace qevo
