#include "test_support.hpp"

#include "qevo/error.hpp"
#include "qevo/generators.hpp"
#include "qevo/program.hpp"
#include "qevo/templates.hpp"

#include <doctest.h>

using namespace qevo;

namespace {

const char* kMinimal = "program ew\nsizing equal_weight\nrebalance daily\n";

const char* kFull =
    "program full\n"
    "tags momentum_trend mean_reversion\n"
    "indicator fast = ema(12)\n"
    "indicator slow = sma(40)\n"
    "indicator r = rsi(14)\n"
    "indicator k = stochastic_kdj(9, 3)\n"
    "entry (fast - slow) / slow > 0.01 and not (r > 70) or k.d < 20\n"
    "exit fast < slow or r > 80\n"
    "sizing fixed_fraction(0.25)\n"
    "overlay trailing_stop(0.1)\n"
    "overlay max_position_weight(0.5)\n"
    "rebalance every_n_days(5)\n"
    "fallback cash\n";

}  // namespace

TEST_SUITE("strategy_dsl") {
    TEST_CASE("minimal equal-weight program") {
        const auto p = parse_program(kMinimal);
        CHECK(p.name == "ew");
        CHECK(p.sizing.kind == SizingKind::equal_weight);
        CHECK(p.rebalance.kind == RebalanceKind::daily);
        CHECK(p.entry == nullptr);
        CHECK(p.indicators.empty());
    }

    TEST_CASE("full program fields") {
        const auto p = parse_program(kFull);
        CHECK(p.tags == std::vector<std::string>{"momentum_trend", "mean_reversion"});
        REQUIRE(p.indicators.size() == 4);
        CHECK(p.indicators[3].spec.kind == IndicatorKind::stochastic_kdj);
        CHECK(p.indicators[3].spec.params == std::vector<int>{9, 3});
        CHECK(p.sizing.kind == SizingKind::fixed_fraction);
        CHECK(p.sizing.fraction == 0.25);
        CHECK(p.overlay.trailing_stop == 0.1);
        CHECK(p.overlay.max_position_weight == 0.5);
        CHECK(p.rebalance.kind == RebalanceKind::every_n_days);
        CHECK(p.rebalance.every == 5);
        REQUIRE(p.entry);
        CHECK(p.entry->op == ExprOp::or_);
    }

    TEST_CASE("parse serialize parse is identity") {
        for (const char* text : {kMinimal, kFull}) {
            const auto p = parse_program(text);
            const auto s = serialize_program(p);
            CHECK(parse_program(s) == p);
            CHECK(serialize_program(parse_program(s)) == s);
        }
    }

    TEST_CASE("undeclared indicator reference") {
        CHECK_THROWS_AS(parse_program("program p\nentry rsi14 < 30\nsizing equal_weight\nrebalance daily\n"),
                        UnboundReference);
    }

    TEST_CASE("zero lookback") {
        CHECK_THROWS_AS(parse_program("program p\nindicator r = rsi(0)\nentry r < 30\nsizing equal_weight\n"
                                      "rebalance daily\n"),
                        ParamOutOfRange);
    }

    TEST_CASE("unknown indicator kind") {
        CHECK_THROWS_AS(parse_program("program p\nindicator k = kalman(5)\nsizing equal_weight\nrebalance daily\n"),
                        UnknownIndicator);
    }

    TEST_CASE("syntax error carries the position") {
        try {
            parse_program("program p\nentry close > \nsizing equal_weight\nrebalance daily\n");
            FAIL("expected SyntaxError");
        } catch (const SyntaxError& e) {
            CHECK(e.line() == 2);
            CHECK(e.column() >= 1);
        }
        CHECK_THROWS_AS(parse_program("sizing equal_weight\n"), SyntaxError);
        CHECK_THROWS_AS(parse_program("program p\nentry close > open\nentry close < open\n"), SyntaxError);
    }

    TEST_CASE("type errors: numeric entry and boolean score") {
        CHECK_THROWS_AS(parse_program("program p\nentry close + 1\n"), ProgramError);
        CHECK_THROWS_AS(parse_program("program p\nscore close > 1\nsizing signal_proportional\n"), ProgramError);
    }

    TEST_CASE("overlay and sizing bounds") {
        CHECK_THROWS_AS(parse_program("program p\noverlay trailing_stop(1.5)\n"), ParamOutOfRange);
        CHECK_THROWS_AS(parse_program("program p\nsizing fixed_fraction(0)\n"), ParamOutOfRange);
        CHECK_THROWS_AS(parse_program("program p\noverlay max_position_weight(2)\n"), ParamOutOfRange);
    }

    TEST_CASE("tags must belong to the taxonomy when one is given") {
        const Taxonomy tax{{"momentum_trend", "mean_reversion"}};
        ParseOptions opts;
        opts.taxonomy = &tax;
        CHECK_NOTHROW(parse_program("program p\ntags momentum_trend\n", opts));
        CHECK_THROWS_AS(parse_program("program p\ntags arbitrage\n", opts), UnknownTag);
    }

    TEST_CASE("lookback bounds come from the options") {
        ParseOptions opts;
        opts.bounds.max_lookback = 30;
        CHECK_THROWS_AS(parse_program("program p\nindicator s = sma(50)\nentry close > s\n", opts), ParamOutOfRange);
        CHECK_THROWS_AS(parse_program("program p\nindicator m = macd_hist(26, 12, 9)\nentry m > 0\n"),
                        ParamOutOfRange);
    }

    TEST_CASE("round trip on randomly generated programs") {
        Rng rng(2024);
        ParseOptions opts;
        const Taxonomy tax = Taxonomy::equities_default();
        std::vector<Program> pool;
        for (const auto& c : tax.categories) pool.push_back(seed_program(c));
        const MutationOp ops[] = {MutationOp::param_jitter, MutationOp::rule_edit, MutationOp::structural,
                                  MutationOp::crossover, MutationOp::sizing_overlay};
        int checked = 0;
        for (int i = 0; i < 600; ++i) {
            const auto& parent = pool[rng.index(pool.size())];
            std::vector<Program> cousins{pool[rng.index(pool.size())]};
            std::string desc;
            auto child = apply_mutation(ops[rng.index(5)], parent, cousins, opts, rng, desc);
            if (!child) continue;
            child->tags = derive_tags(*child, CategoryTable::defaults(), tax);
            validate_program(*child, opts);
            const auto text = serialize_program(*child);
            const auto back = parse_program(text, opts);
            CHECK(back == *child);
            CHECK(serialize_program(back) == text);
            if (pool.size() < 64) pool.push_back(*child);
            else pool[rng.index(pool.size())] = *child;
            ++checked;
        }
        CHECK(checked > 300);
    }

    TEST_CASE("printer keeps precedence") {
        const auto e = make_binary(ExprOp::mul, make_binary(ExprOp::add, make_number(1), make_price("close")),
                                   make_number(2));
        CHECK(to_string(e) == "(1 + close) * 2");
        const auto s = make_binary(ExprOp::sub, make_number(1), make_binary(ExprOp::sub, make_number(2), make_number(3)));
        CHECK(to_string(s) == "1 - (2 - 3)");
    }

    TEST_CASE("derived tags follow the category table") {
        const auto p = parse_program(
            "program p\nindicator z = bollinger_z(20)\nindicator f = sma(10)\nentry z < -1 and close > f\n"
            "sizing inverse_volatility(20)\n");
        const auto tags = derive_tags(p, CategoryTable::defaults(), Taxonomy::equities_default());
        CHECK(tags == std::vector<std::string>{"momentum_trend", "mean_reversion", "risk_allocation"});
        const auto narrow = derive_tags(p, CategoryTable::defaults(), Taxonomy{{"mean_reversion"}});
        CHECK(narrow == std::vector<std::string>{"mean_reversion"});
    }

    TEST_CASE("every seed template parses and carries its category") {
        for (const auto& c : Taxonomy::equities_default().categories) {
            const auto p = seed_program(c);
            CHECK(p.tags == std::vector<std::string>{c});
            CHECK(parse_program(serialize_program(p)) == p);
        }
        CHECK(buy_and_hold_seed().tags.empty());
    }
}
