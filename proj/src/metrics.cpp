#include "qevo/metrics.hpp"

#include "qevo/error.hpp"

#include <cmath>
#include <limits>

namespace qevo {

namespace {

const double annualize = std::sqrt(trading_days_per_year);
/// Daily-return deviations at or below this are rounding noise, not risk.
constexpr double degenerate_std = 1e-12;

double mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double sample_std(std::span<const double> x, double m) {
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

void require_length(std::span<const double> x, const char* what) {
    if (x.size() < 2) throw MetricError(std::string(what) + " needs at least 2 returns");
}

}  // namespace

double sharpe_ratio(std::span<const double> returns, double rf_daily) {
    require_length(returns, "sharpe");
    std::vector<double> excess(returns.begin(), returns.end());
    for (double& v : excess) v -= rf_daily;
    const double m = mean(excess);
    const double sd = sample_std(excess, m);
    if (!(sd > degenerate_std)) throw DegenerateSeries("sharpe: zero standard deviation");
    return m / sd * annualize;
}

double sortino_ratio(std::span<const double> returns, double rf_daily) {
    require_length(returns, "sortino");
    double sum = 0.0;
    double down_sq = 0.0;
    std::size_t down_n = 0;
    for (double r : returns) {
        const double x = r - rf_daily;
        sum += x;
        if (x < 0.0) {
            down_sq += x * x;
            ++down_n;
        }
    }
    if (down_n == 0) throw NoDownside("sortino: no negative returns");
    const double dd = std::sqrt(down_sq / static_cast<double>(down_n));
    return sum / static_cast<double>(returns.size()) / dd * annualize;
}

double information_ratio(std::span<const double> returns, std::span<const double> benchmark) {
    if (returns.size() != benchmark.size()) throw MetricError("information ratio: length mismatch");
    require_length(returns, "information ratio");
    std::vector<double> active(returns.size());
    for (std::size_t i = 0; i < returns.size(); ++i) active[i] = returns[i] - benchmark[i];
    const double m = mean(active);
    const double sd = sample_std(active, m);
    if (!(sd > degenerate_std)) throw ZeroTrackingError("information ratio: zero tracking error");
    return m / sd * annualize;
}

double max_drawdown(std::span<const double> equity) {
    if (equity.empty()) throw MetricError("max drawdown of an empty curve");
    double peak = equity[0];
    double worst = 0.0;
    for (double v : equity) {
        if (v > peak) peak = v;
        const double dd = (v - peak) / peak;
        if (dd < worst) worst = dd;
    }
    return worst;
}

double combined_score(double sharpe, double information_ratio, double max_drawdown) {
    return sharpe + information_ratio + max_drawdown;
}

double combined_score(const MetricSet& m) {
    if (!m.valid || !m.sharpe || !m.information_ratio)
        throw InvalidMetrics(m.invalid_reason.empty() ? "invalid metric set" : m.invalid_reason);
    return combined_score(*m.sharpe, *m.information_ratio, m.max_drawdown);
}

double ranking_score(const MetricSet& m) {
    if (!m.valid) return -std::numeric_limits<double>::infinity();
    return combined_score(m);
}

MetricSet compute_metrics(std::span<const double> equity, std::span<const double> returns,
                          std::span<const double> benchmark_returns, double initial_capital,
                          std::size_t num_transactions) {
    MetricSet m;
    m.num_transactions = num_transactions;
    if (!equity.empty()) {
        m.max_drawdown = std::max(-1.0, max_drawdown(equity));
        m.cumulative_return = equity.back() / initial_capital - 1.0;
    }
    std::string reason;
    auto attempt = [&](auto&& fn) -> std::optional<double> {
        try {
            double v = fn();
            if (!std::isfinite(v)) {
                if (reason.empty()) reason = "non-finite ratio";
                return std::nullopt;
            }
            return v;
        } catch (const MetricError& e) {
            if (reason.empty()) reason = e.what();
            return std::nullopt;
        }
    };
    m.sharpe = attempt([&] { return sharpe_ratio(returns); });
    m.sortino = attempt([&] { return sortino_ratio(returns); });
    m.information_ratio = attempt([&] { return information_ratio(returns, benchmark_returns); });
    m.valid = m.sharpe && m.sortino && m.information_ratio && std::isfinite(m.max_drawdown) &&
              std::isfinite(m.cumulative_return);
    if (!m.valid) m.invalid_reason = reason.empty() ? "non-finite equity" : reason;
    return m;
}

}  // namespace qevo
