#include "test_support.hpp"

#include "qevo/backtester.hpp"
#include "qevo/error.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>

using namespace qevo;
using qevo::test::series_from_closes;
using qevo::test::view_of;

namespace {

const Program always_in = parse_program("program p\nsizing equal_weight\nrebalance daily\n");

BacktestOptions zero_cost(double capital = 1e6) {
    BacktestOptions o;
    o.cost = CostModel::zero();
    o.initial_capital = capital;
    return o;
}

}  // namespace

TEST_SUITE("backtester") {
    TEST_CASE("zero-cost always-in tracks the asset") {
        const auto c = qevo::test::random_walk(60, 5);
        const auto v = view_of({series_from_closes("A", c)});
        const auto r = run_backtest(always_in, v, zero_cost());
        REQUIRE(r.equity.size() == 60);
        CHECK(r.equity[0] == 1e6);
        CHECK(r.returns[0] == 0.0);
        for (std::size_t t = 1; t < 60; ++t) {
            CHECK(r.equity[t] == doctest::Approx(1e6 * c[t] / c[0]).epsilon(1e-10));
            CHECK(r.returns[t] == doctest::Approx(c[t] / c[t - 1] - 1).epsilon(1e-9));
            CHECK(r.returns[t] == doctest::Approx(r.equity[t] / r.equity[t - 1] - 1).epsilon(1e-14));
        }
    }

    TEST_CASE("commission and slippage by hand") {
        const auto v = view_of({series_from_closes("A", std::vector<double>(5, 100.0))});
        BacktestOptions o;
        o.initial_capital = 10'000;
        o.execution.whole_units = true;
        const auto r = run_backtest(parse_program("program p\nsizing fixed_fraction(0.5)\n"), v, o);
        REQUIRE(r.fills.size() == 1);
        const double price = 100.0 * (1.0 + 0.1 * std::pow(50.0 / 1e6, 2));
        CHECK(r.fills[0].quantity == 50.0);
        CHECK(r.fills[0].price == doctest::Approx(price).epsilon(1e-15));
        CHECK(r.fills[0].commission == 1.0);  // 50 * 0.0075 < 1 minimum
        const double eq = 10'000 - 50 * price - 1.0 + 50 * 100.0;
        CHECK(r.equity[0] == 10'000);
        CHECK(r.equity[1] == doctest::Approx(eq));
        CHECK(r.returns[1] == doctest::Approx(eq / 10'000 - 1));
        CHECK(r.returns[2] == 0.0);
    }

    TEST_CASE("commission formulas") {
        CostModel c;
        CHECK(c.commission(0, 10) == 0.0);
        CHECK(c.commission(100, 10) == 1.0);
        CHECK(c.commission(-1000, 10) == doctest::Approx(7.5));
        c.commission_mode = CommissionMode::percent_of_notional;
        CHECK(c.commission(10'000, 10) == doctest::Approx(75.0));
        CHECK(c.commission(10'000, 10, 50) == doctest::Approx(3750.0));
        CHECK(c.commission(1, 10) == 1.0);
    }

    TEST_CASE("slippage caps by volume") {
        const Bar bar{parse_date("2020-01-02"), 100, 101, 99, 100, 1000};
        CostModel c;
        auto f = slippage_fill(500, bar, c);
        CHECK(f.quantity == doctest::Approx(25.0));
        CHECK(f.price == doctest::Approx(100.0 * (1 + 0.1 * 0.025 * 0.025)));
        f = slippage_fill(-10, bar, c, 101.0);
        CHECK(f.quantity == -10.0);
        CHECK(f.price == doctest::Approx(101.0 * (1 - 0.1 * 0.0001)));
        const Bar dead{bar.date, 100, 101, 99, 100, 0};
        CHECK(slippage_fill(10, dead, c).quantity == 0.0);
        c.cap_by_volume = false;
        CHECK(slippage_fill(500, bar, c).quantity == 500.0);
    }

    TEST_CASE("cost model validation") {
        CostModel c;
        c.volume_limit = 0.0;
        CHECK_THROWS_AS(c.validate(), ConfigError);
        c = CostModel{};
        c.per_share_cost = -1;
        CHECK_THROWS_AS(c.validate(), ConfigError);
        CHECK_NOTHROW(CostModel::zero().validate());
    }

    TEST_CASE("next-open fills happen at the following open") {
        const auto v = view_of({series_from_closes("A", {100, 110, 121, 133.1})});
        auto o = zero_cost(1000);
        o.execution.fill_mode = FillMode::next_open;
        const auto r = run_backtest(parse_program("program p\nrebalance once\n"), v, o);
        REQUIRE(r.fills.size() == 1);
        CHECK(r.fills[0].date == v.date(1));
        CHECK(r.fills[0].price == 100.0);  // day 1 open = day 0 close
        CHECK(r.equity[1] == doctest::Approx(1100.0));
        CHECK(r.equity[3] == doctest::Approx(1331.0));
    }

    TEST_CASE("long-only never borrows") {
        const auto v = view_of({series_from_closes("A", qevo::test::random_walk(100, 3)),
                                series_from_closes("B", qevo::test::random_walk(100, 4))});
        const auto r = run_backtest(parse_program("program p\nsizing equal_weight\n"), v);
        const double replay = replay_final_equity(v, r.fills, r.initial_capital, CostModel{});
        CHECK(replay == doctest::Approx(r.equity.back()).epsilon(1e-9));
        for (const auto& f : r.fills) CHECK(f.commission >= 1.0);
    }

    TEST_CASE("replay under zero cost restores commissions") {
        const auto v = view_of({series_from_closes("A", qevo::test::random_walk(40, 6))});
        const auto r = run_backtest(parse_program("program p\nindicator m = sma(5)\nentry close > m\n"), v);
        double paid = 0.0;
        for (const auto& f : r.fills) paid += f.commission;
        CHECK(paid > 0.0);
        CHECK(replay_final_equity(v, r.fills, r.initial_capital, CostModel::zero()) ==
              doctest::Approx(r.equity.back() + paid).epsilon(1e-10));
    }

    TEST_CASE("a short squeeze that wipes out capital is a candidate failure") {
        const auto v = view_of({series_from_closes("A", {100, 150, 210, 260})});
        auto o = zero_cost();
        o.execution.allow_short = true;
        CHECK_THROWS_AS(run_backtest(parse_program("program p\nshort_entry close > 0\nrebalance once\n"), v, o),
                        CandidateFailure);
    }

    TEST_CASE("evaluation errors become candidate failures") {
        const auto v = view_of({series_from_closes("A", {1, 2, 3})});
        CHECK_THROWS_AS(run_backtest(parse_program("program p\nentry close / (open - open) > 0\n"),
                                     view_of({series_from_closes("A", {2, 2, 2})})),
                        CandidateFailure);
        (void)v;
    }

    TEST_CASE("average buy-and-hold benchmark") {
        const auto v = view_of({series_from_closes("A", {10, 20, 10}), series_from_closes("B", {10, 10, 20})});
        const auto b = average_buy_hold_returns(v);
        CHECK(b[0] == 0.0);
        CHECK(b[1] == doctest::Approx(0.5));   // 2 -> 3
        CHECK(b[2] == doctest::Approx(0.0));   // 3 -> 3
    }

    TEST_CASE("benchmark length is checked") {
        const auto v = view_of({series_from_closes("A", {1, 2, 3})});
        auto o = zero_cost();
        o.benchmark_returns = std::vector<double>{0.0};
        CHECK_THROWS_AS(run_backtest(always_in, v, o), ConfigError);
    }

    TEST_CASE("equity csv") {
        qevo::test::TempDir dir;
        const auto v = view_of({series_from_closes("A", {1, 2, 3})});
        const auto r = run_backtest(always_in, v, zero_cost());
        write_equity_csv(r, dir.path() / "eq.csv");
        std::ifstream in(dir.path() / "eq.csv");
        std::string header, first;
        std::getline(in, header);
        std::getline(in, first);
        CHECK(header == "date,equity,return");
        CHECK(first.rfind("2020-01-01,1000000,0", 0) == 0);
    }
}
