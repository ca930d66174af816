#include "qevo/evaluator.hpp"

#include "qevo/error.hpp"
#include "qevo/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qevo {

int month_of(Date d) {
    return static_cast<int>(static_cast<unsigned>(std::chrono::year_month_day{d}.month()));
}

int weekday_of(Date d) { return static_cast<int>(std::chrono::weekday{d}.iso_encoding()); }

int day_of_month_of(Date d) {
    return static_cast<int>(static_cast<unsigned>(std::chrono::year_month_day{d}.day()));
}

Evaluator::Evaluator(const Program& program, DatasetView view, bool allow_short)
    : program_(program), view_(std::move(view)), allow_short_(allow_short) {
    const std::size_t n_assets = view_.num_assets();
    series_.reserve(program_.indicators.size());
    for (const auto& def : program_.indicators) {
        std::vector<std::vector<std::vector<double>>> per_asset;
        per_asset.reserve(n_assets);
        for (std::size_t a = 0; a < n_assets; ++a) per_asset.push_back(compute_series(def.spec, view_, a));
        series_.push_back(std::move(per_asset));
        warmup_.push_back(warmup_bars(def.spec));
    }
    state_.assign(n_assets, {});
    targets_.weights.assign(n_assets, 0.0);
}

bool Evaluator::warm(std::size_t asset, std::size_t t) const {
    for (std::size_t i = 0; i < series_.size(); ++i)
        if (std::isnan(series_[i][asset][0][t])) return false;
    if (program_.sizing.kind == SizingKind::inverse_volatility &&
        !trailing_volatility(view_.bars(asset), t, static_cast<std::size_t>(program_.sizing.lookback)))
        return false;
    return true;
}

double Evaluator::eval(const ExprPtr& e, std::size_t asset, std::size_t t, const std::string& path) const {
    auto arg = [&](std::size_t i) { return eval(e->args[i], asset, t, path + "/" + std::to_string(i)); };
    auto finite = [&](double v) {
        if (!std::isfinite(v)) throw EvaluationError(path, "non-finite value");
        return v;
    };
    switch (e->op) {
        case ExprOp::number: return e->number;
        case ExprOp::indicator: {
            std::size_t idx = 0;
            while (program_.indicators[idx].name != e->name) ++idx;
            std::size_t field = 0;
            if (!e->field.empty()) {
                auto fields = output_fields(program_.indicators[idx].spec.kind);
                field = static_cast<std::size_t>(std::find(fields.begin(), fields.end(), e->field) - fields.begin());
            }
            return series_[idx][asset][field][t];
        }
        case ExprOp::price: {
            const Bar& b = view_.bar(asset, t);
            const auto& f = e->name;
            if (f == "open") return b.open;
            if (f == "high") return b.high;
            if (f == "low") return b.low;
            if (f == "close") return b.close;
            if (f == "volume") return static_cast<double>(b.volume);
            if (f == "month") return month_of(b.date);
            if (f == "weekday") return weekday_of(b.date);
            return day_of_month_of(b.date);
        }
        case ExprOp::neg: return -arg(0);
        case ExprOp::not_: return arg(0) != 0.0 ? 0.0 : 1.0;
        case ExprOp::add: return finite(arg(0) + arg(1));
        case ExprOp::sub: return finite(arg(0) - arg(1));
        case ExprOp::mul: return finite(arg(0) * arg(1));
        case ExprOp::div: {
            const double num = arg(0);
            const double den = arg(1);
            if (den == 0.0) throw EvaluationError(path, "division by zero");
            return finite(num / den);
        }
        case ExprOp::lt: return arg(0) < arg(1) ? 1.0 : 0.0;
        case ExprOp::le: return arg(0) <= arg(1) ? 1.0 : 0.0;
        case ExprOp::gt: return arg(0) > arg(1) ? 1.0 : 0.0;
        case ExprOp::ge: return arg(0) >= arg(1) ? 1.0 : 0.0;
        case ExprOp::eq: return arg(0) == arg(1) ? 1.0 : 0.0;
        case ExprOp::ne: return arg(0) != arg(1) ? 1.0 : 0.0;
        // short-circuit so a guarded division only runs when its guard holds
        case ExprOp::and_: return arg(0) != 0.0 && arg(1) != 0.0 ? 1.0 : 0.0;
        case ExprOp::or_: return arg(0) != 0.0 || arg(1) != 0.0 ? 1.0 : 0.0;
        case ExprOp::if_: return arg(0) != 0.0 ? arg(1) : arg(2);
        case ExprOp::abs: return std::abs(arg(0));
        case ExprOp::min: return std::min(arg(0), arg(1));
        case ExprOp::max: return std::max(arg(0), arg(1));
    }
    throw EvaluationError(path, "unknown node");
}

bool Evaluator::test(const ExprPtr& e, std::size_t asset, std::size_t t, const char* rule) const {
    return eval(e, asset, t, rule) != 0.0;
}

// Advances one asset's position state for day t. The asset is warm.
void Evaluator::update_side(std::size_t a, std::size_t t) {
    AssetState& s = state_[a];
    const double close = view_.bar(a, t).close;
    const auto& p = program_;

    // Re-arm after a trailing stop: rule-driven sides wait for the entry
    // condition to drop, always-in longs wait for a new high.
    if (s.locked) {
        bool release = false;
        if (s.locked_side > 0)
            release = p.entry ? !test(p.entry, a, t, "entry") : close > s.lock_level;
        else
            release = !test(p.short_entry, a, t, "short_entry");
        if (!release) {
            s.side = 0;
            return;
        }
        s.locked = false;
    }

    int want = 0;
    if (allow_short_ && p.short_entry) {
        if (!p.short_exit)
            want = test(p.short_entry, a, t, "short_entry") ? -1 : 0;
        else if (s.side < 0)
            want = test(p.short_exit, a, t, "short_exit") ? 0 : -1;
        else
            want = test(p.short_entry, a, t, "short_entry") ? -1 : 0;
    }
    if (want == 0) {
        if (!p.entry)
            want = 1;
        else if (!p.exit)
            want = test(p.entry, a, t, "entry") ? 1 : 0;
        else if (s.side > 0)
            want = test(p.exit, a, t, "exit") ? 0 : 1;
        else
            want = test(p.entry, a, t, "entry") ? 1 : 0;
    }

    if (want != s.side) s.extreme = close;
    s.side = want;

    if (s.side != 0 && p.overlay.trailing_stop) {
        const double stop = *p.overlay.trailing_stop;
        bool hit = false;
        if (s.side > 0) {
            s.extreme = std::max(s.extreme, close);
            hit = close <= s.extreme * (1.0 - stop);
        } else {
            s.extreme = std::min(s.extreme, close);
            hit = close >= s.extreme * (1.0 + stop);
        }
        if (hit) {
            s.locked = true;
            s.locked_side = s.side;
            s.lock_level = s.extreme;
            s.side = 0;
        }
    }
}

bool Evaluator::is_rebalance_day(std::size_t t, bool any_warm) {
    switch (program_.rebalance.kind) {
        case RebalanceKind::daily: return true;
        case RebalanceKind::every_n_days: return t % static_cast<std::size_t>(program_.rebalance.every) == 0;
        case RebalanceKind::monthly:
            return t == 0 || month_of(view_.date(t)) != month_of(view_.date(t - 1));
        case RebalanceKind::once:
            if (!rebalanced_once_ && any_warm) {
                rebalanced_once_ = true;
                return true;
            }
            return false;
    }
    return false;
}

std::vector<double> Evaluator::size_positions(std::size_t t, const std::vector<bool>& warm_assets) {
    const std::size_t n = state_.size();
    std::vector<double> w(n, 0.0);
    std::vector<std::size_t> active;
    for (std::size_t a = 0; a < n; ++a)
        if (warm_assets[a] && state_[a].side != 0) active.push_back(a);

    if (active.empty()) {
        if (program_.fallback == Fallback::equal_weight_all) {
            std::size_t k = static_cast<std::size_t>(std::count(warm_assets.begin(), warm_assets.end(), true));
            for (std::size_t a = 0; a < n; ++a)
                if (warm_assets[a]) w[a] = 1.0 / static_cast<double>(k);
        }
    } else {
        std::vector<double> raw(n, 0.0);
        switch (program_.sizing.kind) {
            case SizingKind::equal_weight:
            case SizingKind::fixed_fraction:
                for (auto a : active) raw[a] = 1.0;
                break;
            case SizingKind::inverse_volatility: {
                std::vector<double> vol(n, 0.0);
                double sum = 0.0;
                std::size_t pos = 0;
                for (auto a : active) {
                    vol[a] = *trailing_volatility(view_.bars(a), t, static_cast<std::size_t>(program_.sizing.lookback));
                    if (vol[a] > 0.0) {
                        sum += vol[a];
                        ++pos;
                    }
                }
                // flat assets borrow the average volatility of the others
                const double fill = pos ? sum / static_cast<double>(pos) : 1.0;
                for (auto a : active) raw[a] = 1.0 / (vol[a] > 0.0 ? vol[a] : fill);
                break;
            }
            case SizingKind::signal_proportional:
                for (auto a : active) raw[a] = std::max(0.0, eval(program_.score, a, t, "score"));
                break;
            case SizingKind::market_cap:
                for (auto a : active)
                    for (const auto& [sym, shares] : program_.sizing.shares)
                        if (sym == view_.symbol(a)) raw[a] = shares * view_.bar(a, t).close;
                break;
        }
        if (program_.sizing.kind == SizingKind::fixed_fraction) {
            const double f = program_.sizing.fraction;
            const double total = f * static_cast<double>(active.size());
            const double each = total > 1.0 ? 1.0 / static_cast<double>(active.size()) : f;
            for (auto a : active) w[a] = each * state_[a].side;
        } else {
            double total = 0.0;
            for (auto a : active) total += raw[a];
            if (total > 0.0 && std::isfinite(total))
                for (auto a : active) w[a] = raw[a] / total * state_[a].side;
        }
    }

    if (program_.overlay.max_position_weight) {
        const double cap = *program_.overlay.max_position_weight;
        for (auto& x : w) x = std::clamp(x, -cap, cap);
    }
    return w;
}

const Targets& Evaluator::step(std::size_t t) {
    if (t != next_t_) throw Error("Evaluator::step called out of order");
    ++next_t_;
    const std::size_t n = state_.size();
    std::vector<bool> warm_assets(n, false);
    bool any_warm = false;
    for (std::size_t a = 0; a < n; ++a) {
        warm_assets[a] = warm(a, t);
        if (warm_assets[a]) {
            any_warm = true;
            update_side(a, t);
        } else {
            state_[a] = {};
        }
    }
    targets_.rebalance = is_rebalance_day(t, any_warm);
    if (targets_.rebalance) {
        targets_.weights = size_positions(t, warm_assets);
    } else {
        bool any_active = false;
        for (std::size_t a = 0; a < n; ++a) any_active = any_active || (warm_assets[a] && state_[a].side != 0);
        for (std::size_t a = 0; a < n; ++a) {
            const bool held = warm_assets[a] && state_[a].side != 0;
            const bool fallback_hold =
                program_.fallback == Fallback::equal_weight_all && !any_active && warm_assets[a];
            if (!held && !fallback_hold) targets_.weights[a] = 0.0;
            else if (held && targets_.weights[a] * state_[a].side < 0.0) targets_.weights[a] = 0.0;
        }
    }
    return targets_;
}

std::map<std::string, double> evaluate_targets(const Program& program, const DatasetView& view, std::size_t t,
                                               bool allow_short) {
    if (t >= view.size()) throw Error("evaluate_targets: date index out of range");
    Evaluator ev(program, view.slice(0, t + 1), allow_short);
    for (std::size_t i = 0; i < t; ++i) ev.step(i);
    const Targets& out = ev.step(t);
    std::map<std::string, double> result;
    for (std::size_t a = 0; a < view.num_assets(); ++a) result[view.symbol(a)] = out.weights[a];
    return result;
}

}  // namespace qevo
