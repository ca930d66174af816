#include "qevo/taxonomy.hpp"

#include "qevo/error.hpp"

#include <set>

namespace qevo {

std::optional<std::size_t> Taxonomy::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < categories.size(); ++i)
        if (categories[i] == name) return i;
    return std::nullopt;
}

void Taxonomy::validate() const {
    if (categories.empty()) throw ConfigError("taxonomy", "must not be empty");
    std::set<std::string> seen;
    for (const auto& c : categories) {
        if (c.empty()) throw ConfigError("taxonomy", "empty category name");
        if (!seen.insert(c).second) throw ConfigError("taxonomy", "duplicate category '" + c + "'");
    }
}

Taxonomy Taxonomy::equities_default() {
    return {{"momentum_trend", "mean_reversion", "volatility", "volume_liquidity", "breakout_pattern",
             "correlation_pairs", "risk_allocation", "seasonal_calendar"}};
}

std::optional<std::string> CategoryTable::lookup(std::string_view key) const {
    auto it = entries.find(std::string(key));
    if (it == entries.end()) return std::nullopt;
    return it->second;
}

CategoryTable CategoryTable::defaults() {
    return {{
        {"sma", "momentum_trend"},
        {"ema", "momentum_trend"},
        {"macd_hist", "momentum_trend"},
        {"momentum", "momentum_trend"},
        {"rsi", "mean_reversion"},
        {"bollinger_z", "mean_reversion"},
        {"stochastic_kdj", "mean_reversion"},
        {"rolling_vol", "volatility"},
        {"volume_ratio", "volume_liquidity"},
        {"price:volume", "volume_liquidity"},
        {"highest", "breakout_pattern"},
        {"lowest", "breakout_pattern"},
        {"rel_momentum", "correlation_pairs"},
        {"sizing:inverse_volatility", "risk_allocation"},
        {"sizing:market_cap", "risk_allocation"},
        {"overlay:trailing_stop", "risk_allocation"},
        {"overlay:max_position_weight", "risk_allocation"},
        {"price:month", "seasonal_calendar"},
        {"price:weekday", "seasonal_calendar"},
        {"price:day_of_month", "seasonal_calendar"},
    }};
}

}  // namespace qevo
