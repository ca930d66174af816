#pragma once

#include "qevo/market_data.hpp"
#include "qevo/metrics.hpp"
#include "qevo/program.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace qevo {

enum class CommissionMode { per_share, percent_of_notional };

struct CostModel {
    double per_share_cost = 0.0075;
    double min_trade_cost = 1.00;
    double slippage_impact = 0.1;
    double volume_limit = 0.025;
    /// When false, orders are not capped by bar volume.
    bool cap_by_volume = true;
    CommissionMode commission_mode = CommissionMode::per_share;
    /// Fraction of notional in percent_of_notional mode.
    double commission_rate = 0.00075;

    /// No commission, no slippage, no volume cap.
    static CostModel zero();
    /// Throws ConfigError on a negative constant or volume_limit outside (0, 1].
    void validate() const;

    /// max(|q| * per_share_cost, min_trade_cost) for q != 0 (or the percent
    /// analogue); 0 for q == 0.
    double commission(double quantity, double price, double point_value = 1.0) const;

    bool operator==(const CostModel&) const = default;
};

enum class FillMode { same_close, next_open };

struct ExecutionConfig {
    FillMode fill_mode = FillMode::same_close;
    /// Round order sizes toward zero to whole shares / contracts.
    bool whole_units = false;
    bool allow_short = false;

    bool operator==(const ExecutionConfig&) const = default;
};

struct Fill {
    Date date;
    std::string symbol;
    double quantity = 0.0;  // signed
    double price = 0.0;
    double commission = 0.0;

    bool operator==(const Fill&) const = default;
};

struct SlippageResult {
    double quantity = 0.0;
    double price = 0.0;
};

/// Caps the order at volume_limit * volume (when enabled) and moves the
/// price against the trade by impact * (|q| / volume)^2. A zero-volume bar
/// fills nothing. `base_price` defaults to the bar close.
SlippageResult slippage_fill(double order_qty, const Bar& bar, const CostModel& cost,
                             std::optional<double> base_price = std::nullopt);

struct BacktestReport {
    std::vector<Date> dates;
    /// Post-trade mark-to-close value per day; equity[0] is the initial
    /// capital, so day-0 trading costs land in returns[1].
    std::vector<double> equity;
    /// returns[t] = equity[t] / equity[t - 1] - 1, returns[0] = 0.
    std::vector<double> returns;
    std::vector<Fill> fills;
    std::size_t num_transactions = 0;
    double initial_capital = 0.0;
    MetricSet metrics;
};

struct BacktestOptions {
    CostModel cost;
    ExecutionConfig execution;
    double initial_capital = 1'000'000.0;
    /// Benchmark for the information ratio. Defaults to the equal-notional
    /// buy-and-hold average of the view's assets.
    std::optional<std::vector<double>> benchmark_returns;
};

/// Daily returns of holding every asset with equal initial notional.
std::vector<double> average_buy_hold_returns(const DatasetView& view);

/// Simulates the program day by day. Throws CandidateFailure when the
/// program fails to evaluate or the portfolio value drops to zero or below.
BacktestReport run_backtest(const Program& program, const DatasetView& view,
                            const BacktestOptions& options = {});

/// Final equity of a fixed fill sequence re-costed under `cost` (prices and
/// quantities are kept, commissions are recomputed).
double replay_final_equity(const DatasetView& view, const std::vector<Fill>& fills,
                           double initial_capital, const CostModel& cost);

/// date,equity,return
void write_equity_csv(const BacktestReport& report, const std::filesystem::path& path);

}  // namespace qevo
