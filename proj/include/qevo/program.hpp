#pragma once

#include "qevo/indicators.hpp"
#include "qevo/taxonomy.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qevo {

// ---------------------------------------------------------------------------
// Rule expressions
// ---------------------------------------------------------------------------

enum class ExprOp {
    number,     // literal
    indicator,  // reference to a declared indicator (optionally .field)
    price,      // bar / calendar field of the current day
    neg,
    not_,
    add,
    sub,
    mul,
    div,
    lt,
    le,
    gt,
    ge,
    eq,
    ne,
    and_,
    or_,
    if_,  // if(cond, a, b)
    abs,
    min,
    max,
};

struct Expr;
/// Expressions are immutable and shared between program copies.
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    ExprOp op = ExprOp::number;
    double number = 0.0;
    std::string name;   // indicator or price field
    std::string field;  // indicator output field, empty for the default one
    std::vector<ExprPtr> args;
};

enum class ExprType { numeric, boolean };

/// open high low close volume month weekday day_of_month
bool is_price_field(std::string_view name);
bool is_comparison(ExprOp op);

ExprPtr make_number(double v);
ExprPtr make_indicator_ref(std::string name, std::string field = {});
ExprPtr make_price(std::string field);
ExprPtr make_unary(ExprOp op, ExprPtr arg);
ExprPtr make_binary(ExprOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr make_call(ExprOp op, std::vector<ExprPtr> args);

bool expr_equal(const ExprPtr& a, const ExprPtr& b);
std::string to_string(const ExprPtr& e);

// ---------------------------------------------------------------------------
// Program
// ---------------------------------------------------------------------------

struct IndicatorDef {
    std::string name;
    IndicatorSpec spec;

    bool operator==(const IndicatorDef&) const = default;
};

enum class SizingKind { equal_weight, inverse_volatility, fixed_fraction, signal_proportional, market_cap };

struct SizingRule {
    SizingKind kind = SizingKind::equal_weight;
    int lookback = 0;       // inverse_volatility
    double fraction = 0.0;  // fixed_fraction
    std::vector<std::pair<std::string, double>> shares;  // market_cap: symbol -> share count

    bool operator==(const SizingRule&) const = default;
};

struct RiskOverlay {
    std::optional<double> trailing_stop;        // fraction below the peak close since entry
    std::optional<double> max_position_weight;  // cap on |weight| per asset

    bool operator==(const RiskOverlay&) const = default;
};

enum class RebalanceKind { daily, every_n_days, monthly, once };

struct Rebalance {
    RebalanceKind kind = RebalanceKind::daily;
    int every = 1;

    bool operator==(const Rebalance&) const = default;
};

/// What to hold when no asset is active.
enum class Fallback { cash, equal_weight_all };

/// A rule-based strategy. Missing entry rule means "always in"; an entry
/// rule without an exit rule is re-evaluated every day; with an exit rule the
/// position is held from entry until exit fires.
struct Program {
    std::string name;
    std::vector<std::string> tags;
    std::vector<IndicatorDef> indicators;
    ExprPtr entry;
    ExprPtr exit;
    ExprPtr short_entry;
    ExprPtr short_exit;
    ExprPtr score;  // signal_proportional sizing
    SizingRule sizing;
    RiskOverlay overlay;
    Rebalance rebalance;
    Fallback fallback = Fallback::cash;

    const IndicatorDef* find_indicator(std::string_view name) const;
};

bool operator==(const Program& a, const Program& b);

struct ParseOptions {
    /// When set, every tag must be a member.
    const Taxonomy* taxonomy = nullptr;
    ParamBounds bounds;
    /// Cap on declared indicators and total rule nodes.
    std::size_t max_indicators = 12;
    std::size_t max_rule_nodes = 64;
};

/// Parses the canonical text form. Throws SyntaxError (line:column),
/// UnknownIndicator, UnboundReference, ParamOutOfRange or UnknownTag.
Program parse_program(std::string_view text, const ParseOptions& options = {});

/// Canonical text; parse_program(serialize_program(p)) == p.
std::string serialize_program(const Program& program);

/// Checks every Program invariant on an already-built value, throwing the
/// same error types as the parser.
void validate_program(const Program& program, const ParseOptions& options = {});

/// Rule nodes across all rules.
std::size_t rule_node_count(const Program& program);

/// Families implied by the program's features, in taxonomy order.
std::vector<std::string> derive_tags(const Program& program, const CategoryTable& table,
                                     const Taxonomy& taxonomy);

/// Names of indicators referenced by an expression (with duplicates removed).
std::vector<std::string> referenced_indicators(const ExprPtr& e);

}  // namespace qevo
