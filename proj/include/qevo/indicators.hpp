#pragma once

#include "qevo/market_data.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qevo {

enum class IndicatorKind {
    sma,
    ema,
    rsi,
    macd_hist,
    bollinger_z,
    stochastic_kdj,
    rolling_vol,
    momentum,
    highest,
    lowest,
    volume_ratio,
    rel_momentum,
};

inline constexpr IndicatorKind all_indicator_kinds[] = {
    IndicatorKind::sma,         IndicatorKind::ema,          IndicatorKind::rsi,
    IndicatorKind::macd_hist,   IndicatorKind::bollinger_z,  IndicatorKind::stochastic_kdj,
    IndicatorKind::rolling_vol, IndicatorKind::momentum,     IndicatorKind::highest,
    IndicatorKind::lowest,      IndicatorKind::volume_ratio, IndicatorKind::rel_momentum,
};

std::string_view to_string(IndicatorKind kind);
std::optional<IndicatorKind> indicator_kind_from_string(std::string_view name);

/// Number of integer parameters the kind takes.
std::size_t param_count(IndicatorKind kind);
/// Default parameters, used by templates and the mutation operators.
std::vector<int> default_params(IndicatorKind kind);
/// Named outputs; the first one is what a bare reference resolves to.
std::span<const std::string_view> output_fields(IndicatorKind kind);

struct IndicatorSpec {
    IndicatorKind kind = IndicatorKind::sma;
    std::vector<int> params;

    bool operator==(const IndicatorSpec&) const = default;
};

struct ParamBounds {
    int min_lookback = 1;
    int max_lookback = 252;
};

/// Throws ParamOutOfRange on a wrong arity, a lookback outside the bounds,
/// or a kind-specific violation (macd fast >= slow, std-based windows < 2).
void check_params(const IndicatorSpec& spec, const ParamBounds& bounds);

/// Bars needed before the first defined value.
std::size_t warmup_bars(const IndicatorSpec& spec);

/// Full series over a view: one vector per output field, NaN while warming
/// up. Value t only reads bars [0, t] of the view.
std::vector<std::vector<double>> compute_series(const IndicatorSpec& spec, const DatasetView& view,
                                                std::size_t asset);

/// Single value at `t`; nullopt means Warmup.
std::optional<std::vector<double>> compute_indicator(const IndicatorSpec& spec,
                                                     const DatasetView& view, std::size_t asset,
                                                     std::size_t t);
std::optional<std::vector<double>> compute_indicator(const IndicatorSpec& spec,
                                                     const PriceSeries& series, std::size_t t);

/// Sample standard deviation of simple close-to-close returns over the
/// `lookback` returns ending at t. nullopt while warming up.
std::optional<double> trailing_volatility(std::span<const Bar> bars, std::size_t t,
                                          std::size_t lookback);

}  // namespace qevo
