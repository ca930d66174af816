#include "test_support.hpp"

#include "qevo/error.hpp"

#include <doctest.h>

#include <sstream>

using namespace qevo;
using qevo::test::series_from_closes;

TEST_SUITE("market_data") {
    TEST_CASE("single row parses") {
        std::istringstream in("date,open,high,low,close,volume\n2020-01-02,100,101,99,100.5,10000\n");
        const auto s = read_ohlcv_csv(in, "AAA", AssetClass::equity, 1.0);
        REQUIRE(s.bars.size() == 1);
        CHECK(s.bars[0].date == parse_date("2020-01-02"));
        CHECK(s.bars[0].open == 100.0);
        CHECK(s.bars[0].high == 101.0);
        CHECK(s.bars[0].low == 99.0);
        CHECK(s.bars[0].close == 100.5);
        CHECK(s.bars[0].volume == 10000);
    }

    TEST_CASE("header columns in any order, rows sorted") {
        std::istringstream in(
            "volume,close,date,low,high,open\n5,10,2020-01-03,9,11,10\n7,12,2020-01-02,11,13,12\n");
        const auto s = read_ohlcv_csv(in, "AAA", AssetClass::equity, 1.0);
        REQUIRE(s.bars.size() == 2);
        CHECK(s.bars[0].date == parse_date("2020-01-02"));
        CHECK(s.bars[0].volume == 7);
        CHECK(s.bars[1].close == 10.0);
    }

    TEST_CASE("low above high is an OHLC violation with the row index") {
        std::istringstream in("date,open,high,low,close,volume\n2020-01-02,100,101,102,100.5,10000\n");
        try {
            read_ohlcv_csv(in, "AAA", AssetClass::equity, 1.0);
            FAIL("expected OhlcViolation");
        } catch (const OhlcViolation& e) {
            CHECK(e.row() == 1);
        }
    }

    TEST_CASE("duplicate dates are rejected") {
        std::istringstream in(
            "date,open,high,low,close,volume\n2020-01-02,100,101,99,100,1\n2020-01-02,100,101,99,100,1\n");
        CHECK_THROWS_AS(read_ohlcv_csv(in, "AAA", AssetClass::equity, 1.0), DuplicateDate);
    }

    TEST_CASE("malformed numbers and dates") {
        std::istringstream bad_num("date,open,high,low,close,volume\n2020-01-02,abc,101,99,100,1\n");
        CHECK_THROWS_AS(read_ohlcv_csv(bad_num, "AAA", AssetClass::equity, 1.0), MalformedRow);
        std::istringstream bad_date("date,open,high,low,close,volume\n2020-13-02,100,101,99,100,1\n");
        CHECK_THROWS_AS(read_ohlcv_csv(bad_date, "AAA", AssetClass::equity, 1.0), MalformedRow);
        std::istringstream neg_vol("date,open,high,low,close,volume\n2020-01-02,100,101,99,100,-1\n");
        CHECK_THROWS_AS(read_ohlcv_csv(neg_vol, "AAA", AssetClass::equity, 1.0), OhlcViolation);
    }

    TEST_CASE("csv round trip is identity") {
        const auto s = series_from_closes("AAA", qevo::test::random_walk(50, 3));
        std::ostringstream out;
        write_ohlcv_csv(s, out);
        std::istringstream in(out.str());
        CHECK(read_ohlcv_csv(in, "AAA", AssetClass::equity, 1.0) == s);
    }

    TEST_CASE("calendar alignment intersects dates") {
        std::vector<double> closes(252, 100.0);
        auto a = series_from_closes("A", closes);
        auto b = series_from_closes("B", closes);
        b.bars.erase(b.bars.begin() + 10);
        b.bars.erase(b.bars.begin() + 100);
        const auto u = align_calendar({a, b});
        CHECK(u.num_days() == 250);
        CHECK(u.dropped_bars == 2);
        for (std::size_t t = 0; t < u.num_days(); ++t) {
            CHECK(u.series[0].bars[t].date == u.calendar[t]);
            CHECK(u.series[1].bars[t].date == u.calendar[t]);
        }
    }

    TEST_CASE("identical calendars are unchanged") {
        const auto a = series_from_closes("A", std::vector<double>(20, 10.0));
        const auto b = series_from_closes("B", std::vector<double>(20, 20.0));
        const auto u = align_calendar({a, b});
        CHECK(u.num_days() == 20);
        CHECK(u.dropped_bars == 0);
        CHECK(u.series[0] == a);
    }

    TEST_CASE("disjoint calendars have no intersection") {
        const auto a = series_from_closes("A", std::vector<double>(5, 10.0), 1, parse_date("2020-01-01"));
        const auto b = series_from_closes("B", std::vector<double>(5, 10.0), 1, parse_date("2021-01-01"));
        CHECK_THROWS_AS(align_calendar({a, b}), EmptyIntersection);
    }

    TEST_CASE("equities and futures default splits") {
        const auto days = qevo::test::weekdays(2800, parse_date("2015-01-01"));
        const auto u = qevo::test::universe_of(
            {series_from_closes("A", std::vector<double>(days.size(), 50.0), 1, parse_date("2015-01-01"))});
        const auto eq = split_periods(u, SplitSpec::equities_default());
        CHECK(eq.train.date(0) >= parse_date("2015-08-01"));
        CHECK(eq.train.date(eq.train.size() - 1) <= parse_date("2020-07-31"));
        CHECK(eq.valid.date(0) >= parse_date("2020-08-01"));
        CHECK(eq.test.date(0) >= parse_date("2022-08-01"));
        // Five, two and three years of weekdays.
        CHECK(eq.train.size() == doctest::Approx(5 * 261).epsilon(0.01));
        CHECK(eq.valid.size() == doctest::Approx(2 * 261).epsilon(0.01));
        CHECK(eq.train.date(eq.train.size() - 1) < eq.valid.date(0));
        CHECK(eq.valid.date(eq.valid.size() - 1) < eq.test.date(0));

        const auto fu = split_periods(u, SplitSpec::futures_default());
        CHECK(fu.train.date(0) >= parse_date("2018-01-01"));
        CHECK(fu.valid.size() == doctest::Approx(261).epsilon(0.02));
        CHECK(fu.test.date(fu.test.size() - 1) <= parse_date("2024-01-01"));
    }

    TEST_CASE("split with no trading days") {
        const auto u = qevo::test::universe_of({series_from_closes("A", std::vector<double>(30, 50.0))});
        SplitSpec s{{parse_date("2020-01-01"), parse_date("2020-01-10")},
                    {parse_date("2020-01-11"), parse_date("2020-01-12")},  // weekend only
                    {parse_date("2020-01-13"), parse_date("2020-02-10")}};
        CHECK_THROWS_AS(split_periods(u, s), EmptySplit);
    }

    TEST_CASE("split views partition the calendar") {
        const auto u = qevo::test::synthetic_universe();
        const auto v = split_periods(u, qevo::test::synthetic_split());
        CHECK(v.train.offset() + v.train.size() <= v.valid.offset());
        CHECK(v.valid.offset() + v.valid.size() <= v.test.offset());
        CHECK(v.test.offset() + v.test.size() <= u->num_days());
        CHECK(v.train.universe() == v.test.universe());
    }
}
