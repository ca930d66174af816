#include "qevo/baselines.hpp"

#include "qevo/error.hpp"

#include <sstream>

namespace qevo {

namespace {

struct Entry {
    BaselineKind kind;
    std::string_view name;
    std::string_view text;
};

// Tags are left empty: baselines are reference points, not map residents.
constexpr Entry table[] = {
    {BaselineKind::equal_weight, "equal_weight",
     "program equal_weight\nsizing equal_weight\nrebalance daily\n"},
    {BaselineKind::risk_parity, "risk_parity",
     "program risk_parity\nsizing inverse_volatility(60)\nrebalance daily\n"},
    {BaselineKind::rsi_kdj, "rsi_kdj",
     "program rsi_kdj\n"
     "indicator rsi = rsi(14)\n"
     "indicator kdj = stochastic_kdj(14, 3)\n"
     "score if(rsi < 25 and kdj < 15, 2, if(rsi < 30 and kdj < 20 and kdj.d < 20, 1, "
     "if(rsi > 70 or kdj > 80 or kdj.d > 80, 0, 0.5)))\n"
     "sizing signal_proportional\nrebalance daily\n"},
    {BaselineKind::macd_cross, "macd_cross",
     "program macd_cross\n"
     "indicator macd = macd_hist(12, 26, 9)\n"
     "entry macd > 0\n"
     "sizing equal_weight\nrebalance daily\nfallback equal_weight_all\n"},
    {BaselineKind::market_cap, "market_cap", ""},
    {BaselineKind::buy_hold, "buy_hold", "program buy_hold\nsizing equal_weight\nrebalance once\n"},
};

}  // namespace

std::string_view to_string(BaselineKind kind) {
    for (const auto& e : table)
        if (e.kind == kind) return e.name;
    return "?";
}

std::optional<BaselineKind> baseline_from_string(std::string_view name) {
    for (const auto& e : table)
        if (e.name == name) return e.kind;
    return std::nullopt;
}

Program builtin_baseline(BaselineKind kind, const std::vector<std::pair<std::string, double>>& share_counts) {
    if (kind == BaselineKind::market_cap) {
        if (share_counts.empty()) throw ConfigError("share_counts", "market_cap baseline needs share counts");
        Program p;
        p.name = "market_cap";
        p.sizing.kind = SizingKind::market_cap;
        p.sizing.shares = share_counts;
        p.rebalance.kind = RebalanceKind::monthly;
        validate_program(p);
        return p;
    }
    for (const auto& e : table)
        if (e.kind == kind) return parse_program(e.text);
    throw Error("unknown baseline");
}

}  // namespace qevo
