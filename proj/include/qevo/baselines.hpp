#pragma once

#include "qevo/program.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qevo {

enum class BaselineKind { market_cap, equal_weight, risk_parity, rsi_kdj, macd_cross, buy_hold };

inline constexpr BaselineKind all_baselines[] = {BaselineKind::market_cap, BaselineKind::equal_weight,
                                                 BaselineKind::risk_parity, BaselineKind::rsi_kdj,
                                                 BaselineKind::macd_cross, BaselineKind::buy_hold};

std::string_view to_string(BaselineKind kind);
std::optional<BaselineKind> baseline_from_string(std::string_view name);

/// Reference strategies as DSL programs. `share_counts` (symbol, shares) is
/// required for market_cap and ignored otherwise.
Program builtin_baseline(BaselineKind kind,
                         const std::vector<std::pair<std::string, double>>& share_counts = {});

}  // namespace qevo
