#include "qevo/backtester.hpp"

#include "qevo/error.hpp"
#include "qevo/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace qevo {

CostModel CostModel::zero() {
    CostModel c;
    c.per_share_cost = 0.0;
    c.min_trade_cost = 0.0;
    c.slippage_impact = 0.0;
    c.cap_by_volume = false;
    c.commission_rate = 0.0;
    return c;
}

void CostModel::validate() const {
    if (per_share_cost < 0.0) throw ConfigError("cost.per_share_cost", "must be >= 0");
    if (min_trade_cost < 0.0) throw ConfigError("cost.min_trade_cost", "must be >= 0");
    if (slippage_impact < 0.0) throw ConfigError("cost.slippage_impact", "must be >= 0");
    if (!(volume_limit > 0.0 && volume_limit <= 1.0)) throw ConfigError("cost.volume_limit", "must be in (0, 1]");
    if (commission_rate < 0.0) throw ConfigError("cost.commission_rate", "must be >= 0");
}

double CostModel::commission(double quantity, double price, double point_value) const {
    if (quantity == 0.0) return 0.0;
    const double raw = commission_mode == CommissionMode::per_share
                           ? std::abs(quantity) * per_share_cost
                           : std::abs(quantity) * price * point_value * commission_rate;
    return std::max(raw, min_trade_cost);
}

SlippageResult slippage_fill(double order_qty, const Bar& bar, const CostModel& cost, std::optional<double> base_price) {
    const double base = base_price.value_or(bar.close);
    if (order_qty == 0.0 || bar.volume <= 0) return {0.0, base};
    const double volume = static_cast<double>(bar.volume);
    double q = order_qty;
    if (cost.cap_by_volume) {
        const double cap = cost.volume_limit * volume;
        q = std::clamp(q, -cap, cap);
    }
    const double share = std::abs(q) / volume;
    const double sign = q > 0.0 ? 1.0 : -1.0;
    return {q, base * (1.0 + sign * cost.slippage_impact * share * share)};
}

std::vector<double> average_buy_hold_returns(const DatasetView& view) {
    const std::size_t n = view.size();
    std::vector<double> out(n, 0.0);
    if (n == 0 || view.num_assets() == 0) return out;
    std::vector<double> value(n, 0.0);
    for (std::size_t a = 0; a < view.num_assets(); ++a) {
        const double p0 = view.bar(a, 0).close;
        for (std::size_t t = 0; t < n; ++t) value[t] += view.bar(a, t).close / p0;
    }
    for (std::size_t t = 1; t < n; ++t) out[t] = value[t] / value[t - 1] - 1.0;
    return out;
}

namespace {

struct Order {
    std::size_t asset;
    double quantity;
};

// Largest buy the cash can fund, commission included.
double affordable(double cash, double price, double pv, const CostModel& cost) {
    const double unit = price * pv;
    if (cash <= 0.0 || unit <= 0.0) return 0.0;
    double q = 0.0;
    if (cost.commission_mode == CommissionMode::per_share) {
        q = cash / (unit + cost.per_share_cost);
        if (q * cost.per_share_cost < cost.min_trade_cost) q = (cash - cost.min_trade_cost) / unit;
    } else {
        q = cash / (unit * (1.0 + cost.commission_rate));
        if (q * unit * cost.commission_rate < cost.min_trade_cost) q = (cash - cost.min_trade_cost) / unit;
    }
    return std::max(q, 0.0);
}

}  // namespace

BacktestReport run_backtest(const Program& program, const DatasetView& view, const BacktestOptions& options) {
    if (view.empty()) throw Error("run_backtest: empty view");
    if (!(options.initial_capital > 0.0)) throw ConfigError("initial_capital", "must be > 0");
    options.cost.validate();

    const std::size_t n = view.size();
    const std::size_t n_assets = view.num_assets();
    const CostModel& cost = options.cost;
    const bool long_only = !options.execution.allow_short;

    BacktestReport report;
    report.initial_capital = options.initial_capital;
    report.dates.reserve(n);
    report.equity.reserve(n);
    report.returns.reserve(n);

    Evaluator evaluator(program, view, options.execution.allow_short);
    std::vector<double> position(n_assets, 0.0);
    double cash = options.initial_capital;

    auto mark = [&](std::size_t t, bool at_open) {
        double v = cash;
        for (std::size_t a = 0; a < n_assets; ++a) {
            const Bar& b = view.bar(a, t);
            v += position[a] * (at_open ? b.open : b.close) * view.point_value(a);
        }
        return v;
    };

    // Trades toward `targets` at bar t, priced at the close or the open.
    auto execute = [&](std::size_t t, const Targets& targets, bool at_open) {
        const double value = mark(t, at_open);
        std::vector<Order> orders;
        for (std::size_t a = 0; a < n_assets; ++a) {
            const Bar& b = view.bar(a, t);
            const double price = at_open ? b.open : b.close;
            const double pv = view.point_value(a);
            double target_qty = position[a];
            if (targets.rebalance)
                target_qty = targets.weights[a] * value / (price * pv);
            else if (targets.weights[a] == 0.0)
                target_qty = 0.0;
            double q = target_qty - position[a];
            if (options.execution.whole_units) q = std::trunc(q);
            if (std::abs(q) * price * pv <= 1e-9 * std::max(1.0, std::abs(value))) continue;
            orders.push_back({a, q});
        }
        // sells first so their proceeds fund the buys
        std::stable_partition(orders.begin(), orders.end(), [](const Order& o) { return o.quantity < 0.0; });
        for (const auto& o : orders) {
            const Bar& b = view.bar(o.asset, t);
            const double pv = view.point_value(o.asset);
            auto fill = slippage_fill(o.quantity, b, cost, at_open ? std::optional<double>(b.open) : std::nullopt);
            double q = fill.quantity;
            if (q == 0.0) continue;
            if (long_only && q > 0.0) {
                double max_q = affordable(cash, fill.price, pv, cost);
                if (options.execution.whole_units) max_q = std::floor(max_q);
                if (q > max_q) {
                    // re-price the smaller order; slippage can only fall
                    q = max_q;
                    if (q <= 0.0) continue;
                    fill = slippage_fill(q, b, cost, at_open ? std::optional<double>(b.open) : std::nullopt);
                    q = fill.quantity;
                }
            }
            if (long_only && q < 0.0) q = std::max(q, -position[o.asset]);
            if (q == 0.0) continue;
            const double commission = cost.commission(q, fill.price, pv);
            cash -= q * fill.price * pv + commission;
            if (long_only && cash < 0.0) {
                // rounding residue of the affordability bound
                if (cash > -1e-6 * options.initial_capital) cash = 0.0;
                else throw CandidateFailure("cash went negative");
            }
            position[o.asset] += q;
            report.fills.push_back({view.date(t), view.symbol(o.asset), q, fill.price, commission});
        }
    };

    std::optional<Targets> pending;
    for (std::size_t t = 0; t < n; ++t) {
        if (options.execution.fill_mode == FillMode::next_open && pending) {
            execute(t, *pending, true);
            pending.reset();
        }
        const Targets* targets = nullptr;
        try {
            targets = &evaluator.step(t);
        } catch (const EvaluationError& e) {
            throw CandidateFailure(std::string("evaluation failed at ") + format_date(view.date(t)) + ": " + e.what());
        }
        if (options.execution.fill_mode == FillMode::same_close)
            execute(t, *targets, false);
        else
            pending = *targets;

        const double equity = mark(t, false);
        if (!(equity > 0.0) || !std::isfinite(equity))
            throw CandidateFailure("portfolio value fell to " + std::to_string(equity) + " on " + format_date(view.date(t)));
        // Day 0 is recorded at the initial capital; its trading costs show
        // up in the day 1 return.
        report.dates.push_back(view.date(t));
        if (t == 0) {
            report.equity.push_back(options.initial_capital);
            report.returns.push_back(0.0);
        } else {
            const double prev = report.equity.back();
            report.equity.push_back(equity);
            report.returns.push_back(equity / prev - 1.0);
        }
    }
    report.num_transactions = report.fills.size();

    const std::vector<double> bench = options.benchmark_returns ? *options.benchmark_returns : average_buy_hold_returns(view);
    if (bench.size() != n) throw ConfigError("benchmark", "benchmark length does not match the view");
    report.metrics = compute_metrics(report.equity, report.returns, bench, options.initial_capital, report.num_transactions);
    return report;
}

double replay_final_equity(const DatasetView& view, const std::vector<Fill>& fills, double initial_capital,
                           const CostModel& cost) {
    std::map<std::string, std::size_t> index;
    for (std::size_t a = 0; a < view.num_assets(); ++a) index[view.symbol(a)] = a;
    std::vector<double> position(view.num_assets(), 0.0);
    double cash = initial_capital;
    for (const auto& f : fills) {
        const std::size_t a = index.at(f.symbol);
        const double pv = view.point_value(a);
        cash -= f.quantity * f.price * pv + cost.commission(f.quantity, f.price, pv);
        position[a] += f.quantity;
    }
    double v = cash;
    for (std::size_t a = 0; a < view.num_assets(); ++a)
        v += position[a] * view.bar(a, view.size() - 1).close * view.point_value(a);
    return v;
}

void write_equity_csv(const BacktestReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out.precision(17);
    out << "date,equity,return\n";
    for (std::size_t t = 0; t < report.equity.size(); ++t)
        out << format_date(report.dates[t]) << ',' << report.equity[t] << ',' << report.returns[t] << '\n';
}

}  // namespace qevo
