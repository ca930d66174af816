#pragma once

#include "qevo/market_data.hpp"
#include "qevo/program.hpp"

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace qevo {

/// Output of one evaluation step.
struct Targets {
    /// One weight per asset, in [-1, 1]; negative means short.
    std::vector<double> weights;
    /// True on scheduled rebalance days. On other days the weights carry the
    /// previous targets with deactivated assets zeroed, and the backtester
    /// only closes positions.
    bool rebalance = false;
};

/// Day-by-day program interpreter over one view. Indicator series are
/// computed up front, but value t only depends on bars [0, t], so stepping
/// through the full view and evaluating a prefix view give the same targets.
///
/// `step` must be called with t = 0, 1, 2, ... in order because entry/exit
/// rules and trailing stops carry state between days.
class Evaluator {
public:
    Evaluator(const Program& program, DatasetView view, bool allow_short = false);

    /// Throws EvaluationError naming the failing rule node.
    const Targets& step(std::size_t t);

    std::size_t size() const noexcept { return view_.size(); }

private:
    struct AssetState {
        int side = 0;  // +1 long, -1 short, 0 flat
        double extreme = 0.0;  // peak (long) or trough (short) close since entry
        bool locked = false;   // stopped out, waiting for re-arm
        int locked_side = 0;
        double lock_level = 0.0;
    };

    bool warm(std::size_t asset, std::size_t t) const;
    double eval(const ExprPtr& e, std::size_t asset, std::size_t t, const std::string& path) const;
    bool test(const ExprPtr& e, std::size_t asset, std::size_t t, const char* rule) const;
    void update_side(std::size_t asset, std::size_t t);
    bool is_rebalance_day(std::size_t t, bool any_warm);
    std::vector<double> size_positions(std::size_t t, const std::vector<bool>& warm_assets);

    Program program_;
    DatasetView view_;
    bool allow_short_;
    // indicator -> asset -> field -> series
    std::vector<std::vector<std::vector<std::vector<double>>>> series_;
    std::vector<std::size_t> warmup_;
    std::vector<AssetState> state_;
    Targets targets_;
    std::size_t next_t_ = 0;
    bool rebalanced_once_ = false;
};

/// Targets at `t` from a fresh evaluator run on view[0, t]; later bars are
/// never read.
std::map<std::string, double> evaluate_targets(const Program& program, const DatasetView& view,
                                               std::size_t t, bool allow_short = false);

/// Calendar fields as exposed to rules.
int month_of(Date d);          // 1..12
int weekday_of(Date d);        // 1 = Monday .. 7 = Sunday
int day_of_month_of(Date d);   // 1..31

}  // namespace qevo
