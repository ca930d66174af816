#include "qevo/synthetic.hpp"

#include "qevo/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace qevo {

SyntheticSpec SyntheticSpec::three_asset_default() {
    SyntheticSpec s;
    s.assets = {{"TRND", 50.0, 0.10, 0.18, 0.08, 2'000'000.0},
                {"MREV", 80.0, 0.05, 0.22, -0.10, 1'500'000.0},
                {"VOLX", 30.0, 0.12, 0.40, 0.0, 3'000'000.0}};
    s.first_day = parse_date("2014-01-01");
    s.num_days = 2520;
    s.seed = 7;
    return s;
}

std::vector<PriceSeries> generate_synthetic(const SyntheticSpec& spec) {
    std::vector<Date> days;
    for (Date d = spec.first_day; days.size() < spec.num_days; d += std::chrono::days{1}) {
        const auto wd = std::chrono::weekday{d}.iso_encoding();
        if (wd <= 5) days.push_back(d);
    }
    std::vector<PriceSeries> out;
    for (std::size_t a = 0; a < spec.assets.size(); ++a) {
        const auto& asset = spec.assets[a];
        Rng rng = Rng::stream(spec.seed, a);
        PriceSeries s;
        s.symbol = asset.symbol;
        const double mu = asset.drift / 252.0;
        const double sigma = asset.volatility / std::sqrt(252.0);
        double close = asset.start_price;
        double prev_ret = 0.0;
        for (const auto& d : days) {
            // Slow volatility regime so windows differ in character.
            const double regime = 1.0 + 0.5 * std::sin(static_cast<double>(s.bars.size()) / 90.0 + static_cast<double>(a));
            const double ret = mu + asset.autocorrelation * prev_ret + sigma * regime * rng.normal(0.0, 1.0);
            prev_ret = ret;
            const double open = close * std::exp(0.2 * sigma * rng.normal(0.0, 1.0));
            close = std::max(0.01, close * std::exp(ret));
            const double hi = std::max(open, close) * (1.0 + 0.4 * sigma * std::abs(rng.normal(0.0, 1.0)));
            const double lo = std::min(open, close) * (1.0 - 0.4 * sigma * std::abs(rng.normal(0.0, 1.0)));
            const double vol = asset.mean_volume * std::exp(0.3 * rng.normal(0.0, 1.0) + 5.0 * std::abs(ret));
            auto r4 = [](double v) { return std::round(v * 10000.0) / 10000.0; };
            Bar b{d, r4(open), r4(hi), r4(std::max(lo, 0.0001)), r4(close), static_cast<std::int64_t>(vol)};
            b.high = std::max({b.high, b.open, b.close});
            b.low = std::min({b.low, b.open, b.close});
            s.bars.push_back(b);
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace qevo
