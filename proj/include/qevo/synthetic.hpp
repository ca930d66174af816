#pragma once

#include "qevo/market_data.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qevo {

struct SyntheticAsset {
    std::string symbol;
    double start_price = 100.0;
    double drift = 0.08;       // annualized
    double volatility = 0.20;  // annualized
    /// AR(1) coefficient on daily returns: > 0 trends, < 0 mean-reverts.
    double autocorrelation = 0.0;
    double mean_volume = 1'000'000.0;
};

struct SyntheticSpec {
    std::vector<SyntheticAsset> assets;
    Date first_day;
    std::size_t num_days = 2520;
    std::uint64_t seed = 7;

    /// Three assets (trending, mean-reverting, high-volatility) over ten
    /// years of weekdays from 2014-01-01.
    static SyntheticSpec three_asset_default();
};

/// Deterministic weekday OHLCV series with valid bar ordering.
std::vector<PriceSeries> generate_synthetic(const SyntheticSpec& spec);

}  // namespace qevo
