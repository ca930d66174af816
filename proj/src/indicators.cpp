#include "qevo/indicators.hpp"

#include "qevo/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>

namespace qevo {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

constexpr std::string_view value_field[] = {"value"};
constexpr std::string_view kdj_fields[] = {"k", "d", "j"};

struct KindInfo {
    IndicatorKind kind;
    std::string_view name;
    std::size_t arity;
};

constexpr KindInfo kind_table[] = {
    {IndicatorKind::sma, "sma", 1},
    {IndicatorKind::ema, "ema", 1},
    {IndicatorKind::rsi, "rsi", 1},
    {IndicatorKind::macd_hist, "macd_hist", 3},
    {IndicatorKind::bollinger_z, "bollinger_z", 1},
    {IndicatorKind::stochastic_kdj, "stochastic_kdj", 2},
    {IndicatorKind::rolling_vol, "rolling_vol", 1},
    {IndicatorKind::momentum, "momentum", 1},
    {IndicatorKind::highest, "highest", 1},
    {IndicatorKind::lowest, "lowest", 1},
    {IndicatorKind::volume_ratio, "volume_ratio", 1},
    {IndicatorKind::rel_momentum, "rel_momentum", 1},
};

const KindInfo& info(IndicatorKind kind) {
    for (const auto& k : kind_table)
        if (k.kind == kind) return k;
    throw Error("unknown indicator kind");
}

double window_mean(const std::vector<double>& x, std::size_t end, std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = end + 1 - n; i <= end; ++i) sum += x[i];
    return sum / static_cast<double>(n);
}

double window_sample_std(const std::vector<double>& x, std::size_t end, std::size_t n) {
    const double mean = window_mean(x, end, n);
    double ss = 0.0;
    for (std::size_t i = end + 1 - n; i <= end; ++i) ss += (x[i] - mean) * (x[i] - mean);
    return std::sqrt(ss / static_cast<double>(n - 1));
}

/// Adjusted exponential mean (weights (1-a)^i normalized over the observed
/// history), starting at `first`. Entries before `first` are NaN.
std::vector<double> adjusted_ema(const std::vector<double>& x, std::size_t first, int span) {
    std::vector<double> out(x.size(), nan);
    const double decay = 1.0 - 2.0 / (static_cast<double>(span) + 1.0);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t t = first; t < x.size(); ++t) {
        num = x[t] + decay * num;
        den = 1.0 + decay * den;
        out[t] = num / den;
    }
    return out;
}

std::vector<double> closes_of(std::span<const Bar> bars) {
    std::vector<double> c(bars.size());
    for (std::size_t i = 0; i < bars.size(); ++i) c[i] = bars[i].close;
    return c;
}

std::vector<double> momentum_series(const std::vector<double>& close, std::size_t n) {
    std::vector<double> out(close.size(), nan);
    for (std::size_t t = n; t < close.size(); ++t) out[t] = close[t] / close[t - n] - 1.0;
    return out;
}

}  // namespace

std::string_view to_string(IndicatorKind kind) { return info(kind).name; }

std::optional<IndicatorKind> indicator_kind_from_string(std::string_view name) {
    for (const auto& k : kind_table)
        if (k.name == name) return k.kind;
    return std::nullopt;
}

std::size_t param_count(IndicatorKind kind) { return info(kind).arity; }

std::vector<int> default_params(IndicatorKind kind) {
    switch (kind) {
        case IndicatorKind::sma: return {20};
        case IndicatorKind::ema: return {20};
        case IndicatorKind::rsi: return {14};
        case IndicatorKind::macd_hist: return {12, 26, 9};
        case IndicatorKind::bollinger_z: return {20};
        case IndicatorKind::stochastic_kdj: return {14, 3};
        case IndicatorKind::rolling_vol: return {20};
        case IndicatorKind::momentum: return {20};
        case IndicatorKind::highest: return {20};
        case IndicatorKind::lowest: return {20};
        case IndicatorKind::volume_ratio: return {20};
        case IndicatorKind::rel_momentum: return {20};
    }
    return {};
}

std::span<const std::string_view> output_fields(IndicatorKind kind) {
    if (kind == IndicatorKind::stochastic_kdj) return kdj_fields;
    return value_field;
}

void check_params(const IndicatorSpec& spec, const ParamBounds& bounds) {
    const auto name = std::string(to_string(spec.kind));
    if (spec.params.size() != param_count(spec.kind))
        throw ParamOutOfRange(name + " takes " + std::to_string(param_count(spec.kind)) +
                              " parameter(s), got " + std::to_string(spec.params.size()));
    for (int p : spec.params)
        if (p < std::max(1, bounds.min_lookback) || p > bounds.max_lookback)
            throw ParamOutOfRange(name + " parameter " + std::to_string(p) + " outside [" +
                                  std::to_string(std::max(1, bounds.min_lookback)) + ", " +
                                  std::to_string(bounds.max_lookback) + "]");
    if (spec.kind == IndicatorKind::macd_hist && spec.params[0] >= spec.params[1])
        throw ParamOutOfRange("macd_hist fast span must be below slow span");
    if ((spec.kind == IndicatorKind::bollinger_z || spec.kind == IndicatorKind::rolling_vol) &&
        spec.params[0] < 2)
        throw ParamOutOfRange(name + " needs a window of at least 2");
}

std::size_t warmup_bars(const IndicatorSpec& spec) {
    const auto p = [&](std::size_t i) { return static_cast<std::size_t>(spec.params.at(i)); };
    switch (spec.kind) {
        case IndicatorKind::sma:
        case IndicatorKind::ema:
        case IndicatorKind::bollinger_z:
        case IndicatorKind::volume_ratio: return p(0);
        case IndicatorKind::rsi:
        case IndicatorKind::rolling_vol:
        case IndicatorKind::momentum:
        case IndicatorKind::highest:
        case IndicatorKind::lowest:
        case IndicatorKind::rel_momentum: return p(0) + 1;
        case IndicatorKind::macd_hist: return p(1) + p(2);
        case IndicatorKind::stochastic_kdj: return p(0) + p(1) - 1;
    }
    return 0;
}

std::vector<std::vector<double>> compute_series(const IndicatorSpec& spec, const DatasetView& view,
                                                std::size_t asset) {
    const auto bars = view.bars(asset);
    const std::size_t n = bars.size();
    const std::size_t warm = warmup_bars(spec);
    const auto close = closes_of(bars);
    std::vector<double> out(n, nan);
    const auto p0 = static_cast<std::size_t>(spec.params.at(0));

    switch (spec.kind) {
        case IndicatorKind::sma:
            for (std::size_t t = warm - 1; t < n && warm >= 1; ++t) out[t] = window_mean(close, t, p0);
            break;
        case IndicatorKind::ema: {
            auto e = adjusted_ema(close, 0, spec.params[0]);
            for (std::size_t t = warm - 1; t < n; ++t) out[t] = e[t];
            break;
        }
        case IndicatorKind::rsi: {
            std::vector<double> gain(n, 0.0), loss(n, 0.0);
            for (std::size_t t = 1; t < n; ++t) {
                const double delta = close[t] - close[t - 1];
                gain[t] = delta > 0.0 ? delta : 0.0;
                loss[t] = delta < 0.0 ? -delta : 0.0;
            }
            for (std::size_t t = p0; t < n; ++t) {
                const double g = window_mean(gain, t, p0);
                const double l = window_mean(loss, t, p0);
                if (l == 0.0)
                    out[t] = g == 0.0 ? 50.0 : 100.0;
                else
                    out[t] = 100.0 - 100.0 / (1.0 + g / l);
            }
            break;
        }
        case IndicatorKind::macd_hist: {
            auto fast = adjusted_ema(close, 0, spec.params[0]);
            auto slow = adjusted_ema(close, 0, spec.params[1]);
            std::vector<double> line(n);
            for (std::size_t t = 0; t < n; ++t) line[t] = fast[t] - slow[t];
            auto signal = adjusted_ema(line, 0, spec.params[2]);
            for (std::size_t t = warm - 1; t < n; ++t) out[t] = line[t] - signal[t];
            break;
        }
        case IndicatorKind::bollinger_z:
            for (std::size_t t = warm - 1; t < n; ++t) {
                const double sd = window_sample_std(close, t, p0);
                out[t] = sd == 0.0 ? 0.0 : (close[t] - window_mean(close, t, p0)) / sd;
            }
            break;
        case IndicatorKind::stochastic_kdj: {
            const auto dp = static_cast<std::size_t>(spec.params[1]);
            std::vector<double> k(n, nan), d(n, nan), j(n, nan);
            for (std::size_t t = p0 - 1; t < n; ++t) {
                double hh = bars[t].high;
                double ll = bars[t].low;
                for (std::size_t i = t + 1 - p0; i <= t; ++i) {
                    hh = std::max(hh, bars[i].high);
                    ll = std::min(ll, bars[i].low);
                }
                k[t] = hh == ll ? 50.0 : 100.0 * (close[t] - ll) / (hh - ll);
            }
            for (std::size_t t = warm - 1; t < n; ++t) {
                d[t] = window_mean(k, t, dp);
                j[t] = 3.0 * k[t] - 2.0 * d[t];
            }
            for (std::size_t t = 0; t + 1 < warm && t < n; ++t) k[t] = nan;
            return {std::move(k), std::move(d), std::move(j)};
        }
        case IndicatorKind::rolling_vol: {
            std::vector<double> ret(n, 0.0);
            for (std::size_t t = 1; t < n; ++t) ret[t] = close[t] / close[t - 1] - 1.0;
            for (std::size_t t = p0; t < n; ++t) out[t] = window_sample_std(ret, t, p0);
            break;
        }
        case IndicatorKind::momentum: out = momentum_series(close, p0); break;
        case IndicatorKind::highest:
        case IndicatorKind::lowest:
            for (std::size_t t = p0; t < n; ++t) {
                double v = close[t - p0];
                for (std::size_t i = t - p0; i < t; ++i)
                    v = spec.kind == IndicatorKind::highest ? std::max(v, close[i]) : std::min(v, close[i]);
                out[t] = v;
            }
            break;
        case IndicatorKind::volume_ratio: {
            std::vector<double> vol(n);
            for (std::size_t t = 0; t < n; ++t) vol[t] = static_cast<double>(bars[t].volume);
            for (std::size_t t = warm - 1; t < n; ++t) {
                const double mean = window_mean(vol, t, p0);
                out[t] = mean == 0.0 ? 1.0 : vol[t] / mean;
            }
            break;
        }
        case IndicatorKind::rel_momentum: {
            const auto own = momentum_series(close, p0);
            std::vector<double> avg(n, 0.0);
            for (std::size_t a = 0; a < view.num_assets(); ++a) {
                const auto m = momentum_series(closes_of(view.bars(a)), p0);
                for (std::size_t t = 0; t < n; ++t) avg[t] += m[t];
            }
            for (std::size_t t = p0; t < n; ++t)
                out[t] = own[t] - avg[t] / static_cast<double>(view.num_assets());
            break;
        }
    }
    return {std::move(out)};
}

std::optional<std::vector<double>> compute_indicator(const IndicatorSpec& spec,
                                                     const DatasetView& view, std::size_t asset,
                                                     std::size_t t) {
    if (t >= view.size()) throw Error("date index outside view");
    if (t + 1 < warmup_bars(spec)) return std::nullopt;
    auto series = compute_series(spec, view.slice(0, t + 1), asset);
    std::vector<double> value;
    for (const auto& field : series) value.push_back(field[t]);
    return value;
}

std::optional<std::vector<double>> compute_indicator(const IndicatorSpec& spec,
                                                     const PriceSeries& series, std::size_t t) {
    auto u = std::make_shared<Universe>();
    u->series.push_back(series);
    for (const auto& b : series.bars) u->calendar.push_back(b.date);
    return compute_indicator(spec, DatasetView(std::move(u)), 0, t);
}

std::optional<double> trailing_volatility(std::span<const Bar> bars, std::size_t t,
                                          std::size_t lookback) {
    if (lookback < 2 || t < lookback || t >= bars.size()) return std::nullopt;
    std::vector<double> ret(lookback);
    for (std::size_t i = 0; i < lookback; ++i) {
        const std::size_t k = t - lookback + 1 + i;
        ret[i] = bars[k].close / bars[k - 1].close - 1.0;
    }
    return window_sample_std(ret, lookback - 1, lookback);
}

}  // namespace qevo
