#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qevo {

/// Annualization factor for daily ratios.
inline constexpr double trading_days_per_year = 252.0;

struct MetricSet {
    std::optional<double> sharpe;
    std::optional<double> sortino;
    std::optional<double> information_ratio;
    double max_drawdown = 0.0;       // fraction in [-1, 0]
    double cumulative_return = 0.0;  // final / initial - 1
    std::size_t num_transactions = 0;
    /// False when any ratio is undefined on this series.
    bool valid = false;
    /// Why the set is invalid, empty otherwise.
    std::string invalid_reason;

    bool operator==(const MetricSet&) const = default;
};

/// Mean excess return over sample standard deviation, annualized.
/// Throws DegenerateSeries (zero std) or MetricError (< 2 returns).
double sharpe_ratio(std::span<const double> returns, double rf_daily = 0.0);

/// Mean excess return over downside deviation sqrt(mean of r^2 over r < 0),
/// annualized. Throws NoDownside when no return is negative.
double sortino_ratio(std::span<const double> returns, double rf_daily = 0.0);

/// Mean active return over its sample standard deviation, annualized.
/// Throws ZeroTrackingError when the active series has no dispersion.
double information_ratio(std::span<const double> returns, std::span<const double> benchmark);

/// Most negative (equity - running peak) / running peak; 0 for a curve that
/// never falls. Single pass.
double max_drawdown(std::span<const double> equity);

/// SR + IR + MDD. Throws InvalidMetrics when the set is not valid.
double combined_score(const MetricSet& m);
double combined_score(double sharpe, double information_ratio, double max_drawdown);

/// combined_score, or -infinity for an invalid set.
double ranking_score(const MetricSet& m);

/// Fills every field; degenerate ratios leave the set invalid instead of
/// throwing.
MetricSet compute_metrics(std::span<const double> equity, std::span<const double> returns,
                          std::span<const double> benchmark_returns, double initial_capital,
                          std::size_t num_transactions);

}  // namespace qevo
