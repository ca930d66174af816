#include "qevo/templates.hpp"

#include <cctype>
#include <map>

namespace qevo {

namespace {

const std::map<std::string, std::string>& bodies() {
    static const std::map<std::string, std::string> table = {
        {"momentum_trend",
         "indicator fast = sma(20)\nindicator slow = sma(50)\n"
         "entry fast > slow\nexit fast < slow\nsizing equal_weight\nrebalance daily\n"},
        {"mean_reversion",
         "indicator z = bollinger_z(20)\n"
         "entry z < -1\nexit z > 0\nsizing equal_weight\nrebalance daily\n"},
        {"volatility",
         "indicator short_vol = rolling_vol(20)\nindicator long_vol = rolling_vol(60)\n"
         "entry short_vol < long_vol\nsizing equal_weight\nrebalance daily\n"},
        {"volume_liquidity",
         "indicator vr = volume_ratio(20)\n"
         "entry vr > 1.2 and close > open\nexit vr < 0.8\nsizing equal_weight\nrebalance daily\n"},
        {"breakout_pattern",
         "indicator hi = highest(20)\nindicator lo = lowest(20)\n"
         "entry close >= hi\nexit close <= lo\nsizing equal_weight\nrebalance daily\n"},
        {"correlation_pairs",
         "indicator rel = rel_momentum(20)\n"
         "entry rel > 0\nsizing equal_weight\nrebalance daily\n"},
        {"risk_allocation", "sizing inverse_volatility(60)\nrebalance daily\n"},
        {"seasonal_calendar",
         "entry day_of_month <= 5 or day_of_month >= 25\nsizing equal_weight\nrebalance daily\n"},
    };
    return table;
}

std::string name_of(const std::string& category) {
    std::string out = "seed_";
    for (char c : category) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    return out;
}

}  // namespace

Program seed_program(const std::string& category) {
    auto it = bodies().find(category);
    const std::string& body = it != bodies().end() ? it->second : bodies().at("momentum_trend");
    Program p = parse_program("program " + name_of(category) + "\n" + body);
    p.tags = {category};
    return p;
}

Program buy_and_hold_seed() { return parse_program("program seed_buy_and_hold\nsizing equal_weight\nrebalance once\n"); }

Hypothesis seed_hypothesis(const std::string& category) {
    Hypothesis h;
    h.hypothesis = "A plain " + category + " rule earns a positive risk-adjusted return on this universe.";
    h.rationale = "Starting point for the " + category + " island; simple enough to read and to mutate.";
    h.objectives = "Establish a baseline score and behavior profile for the family.";
    h.expected_insights = "Whether the family has any edge before refinement.";
    h.risks_limitations = "Untuned parameters; no risk overlay.";
    h.experimentation_ideas = "Vary lookbacks, add filters, combine with risk sizing.";
    return h;
}

}  // namespace qevo
