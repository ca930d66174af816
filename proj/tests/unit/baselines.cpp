#include "test_support.hpp"

#include "qevo/backtester.hpp"
#include "qevo/baselines.hpp"
#include "qevo/error.hpp"
#include "qevo/evaluator.hpp"

#include <doctest.h>

#include <cmath>

using namespace qevo;
using qevo::test::series_from_closes;
using qevo::test::view_of;

namespace {

// Reference indicator values, written without the library's helpers.
double ref_rsi(const std::vector<double>& c, std::size_t t, std::size_t p) {
    double g = 0, l = 0;
    for (std::size_t i = t + 1 - p; i <= t; ++i) {
        const double d = c[i] - c[i - 1];
        (d > 0 ? g : l) += std::abs(d);
    }
    if (l == 0) return g == 0 ? 50.0 : 100.0;
    return 100.0 - 100.0 / (1.0 + g / l);
}

double ref_k(const PriceSeries& s, std::size_t t, std::size_t n) {
    double hh = -1e300, ll = 1e300;
    for (std::size_t i = t + 1 - n; i <= t; ++i) {
        hh = std::max(hh, s.bars[i].high);
        ll = std::min(ll, s.bars[i].low);
    }
    return hh == ll ? 50.0 : 100.0 * (s.bars[t].close - ll) / (hh - ll);
}

double ref_d(const PriceSeries& s, std::size_t t, std::size_t n, std::size_t m) {
    double sum = 0;
    for (std::size_t i = t + 1 - m; i <= t; ++i) sum += ref_k(s, i, n);
    return sum / static_cast<double>(m);
}

double ref_ema(const std::vector<double>& x, std::size_t t, int span) {
    const double w = 1.0 - 2.0 / (span + 1.0);
    double num = 0, den = 0, f = 1;
    for (std::size_t i = t + 1; i-- > 0;) {
        num += f * x[i];
        den += f;
        f *= w;
    }
    return num / den;
}

double ref_macd_hist(const std::vector<double>& c, std::size_t t) {
    std::vector<double> line;
    for (std::size_t i = 0; i <= t; ++i) line.push_back(ref_ema(c, i, 12) - ref_ema(c, i, 26));
    return line[t] - ref_ema(line, t, 9);
}

double ref_rsi_kdj_score(const PriceSeries& s, std::size_t t) {
    std::vector<double> c;
    for (const auto& b : s.bars) c.push_back(b.close);
    const double r = ref_rsi(c, t, 14);
    const double k = ref_k(s, t, 14);
    const double d = ref_d(s, t, 14, 3);
    if (r < 25 && k < 15) return 2;
    if (r < 30 && k < 20 && d < 20) return 1;
    if (r > 70 || k > 80 || d > 80) return 0;
    return 0.5;
}

}  // namespace

TEST_SUITE("baselines") {
    TEST_CASE("every baseline builds, round-trips and has no tags") {
        const std::vector<std::pair<std::string, double>> shares{{"A", 10}, {"B", 30}};
        for (auto kind : all_baselines) {
            const auto p = builtin_baseline(kind, shares);
            CHECK(p.tags.empty());
            CHECK(baseline_from_string(to_string(kind)) == kind);
            if (kind != BaselineKind::market_cap) CHECK(parse_program(serialize_program(p)) == p);
        }
        CHECK_THROWS_AS(builtin_baseline(BaselineKind::market_cap), ConfigError);
        CHECK_FALSE(baseline_from_string("nope"));
    }

    TEST_CASE("market cap weights follow shares times close") {
        const auto v = view_of({series_from_closes("A", {10, 20, 30}), series_from_closes("B", {5, 5, 5})});
        const auto p = builtin_baseline(BaselineKind::market_cap, {{"A", 10}, {"B", 30}});
        Evaluator ev(p, v);
        const auto& t0 = ev.step(0);
        CHECK(t0.weights[0] == doctest::Approx(100.0 / 250.0));
        CHECK(t0.weights[1] == doctest::Approx(150.0 / 250.0));
    }

    TEST_CASE("rsi_kdj weights match reference indicators") {
        const auto sa = series_from_closes("A", qevo::test::random_walk(60, 21, 100, 0.03));
        const auto sb = series_from_closes("B", qevo::test::random_walk(60, 22, 100, 0.03));
        const auto v = view_of({sa, sb});
        Evaluator ev(builtin_baseline(BaselineKind::rsi_kdj), v);
        int nonzero = 0;
        for (std::size_t t = 0; t < 60; ++t) {
            const auto& w = ev.step(t).weights;
            if (t < 15) {
                CHECK(w == std::vector<double>{0.0, 0.0});
                continue;
            }
            const double a = ref_rsi_kdj_score(sa, t);
            const double b = ref_rsi_kdj_score(sb, t);
            const double ea = a + b > 0 ? a / (a + b) : 0.0;
            const double eb = a + b > 0 ? b / (a + b) : 0.0;
            CHECK(w[0] == doctest::Approx(ea).epsilon(1e-12));
            CHECK(w[1] == doctest::Approx(eb).epsilon(1e-12));
            nonzero += (w[0] > 0 || w[1] > 0) ? 1 : 0;
        }
        CHECK(nonzero > 0);
    }

    TEST_CASE("macd_cross holds assets with a positive histogram") {
        const auto ca = qevo::test::random_walk(80, 31, 100, 0.02);
        const auto cb = qevo::test::random_walk(80, 32, 100, 0.02);
        const auto v = view_of({series_from_closes("A", ca), series_from_closes("B", cb)});
        Evaluator ev(builtin_baseline(BaselineKind::macd_cross), v);
        for (std::size_t t = 0; t < 80; ++t) {
            const auto& w = ev.step(t).weights;
            if (t < 34) {
                CHECK(w == std::vector<double>{0.0, 0.0});
                continue;
            }
            const bool a = ref_macd_hist(ca, t) > 0;
            const bool b = ref_macd_hist(cb, t) > 0;
            const double ea = (a || b) ? (a ? 1.0 / (a + b) : 0.0) : 0.5;
            const double eb = (a || b) ? (b ? 1.0 / (a + b) : 0.0) : 0.5;
            CHECK(w[0] == doctest::Approx(ea));
            CHECK(w[1] == doctest::Approx(eb));
        }
    }

    TEST_CASE("buy_hold trades only on the first day under zero cost") {
        const auto v = view_of({series_from_closes("A", qevo::test::random_walk(50, 1)),
                                series_from_closes("B", qevo::test::random_walk(50, 2))});
        BacktestOptions opts;
        opts.cost = CostModel::zero();
        const auto r = run_backtest(builtin_baseline(BaselineKind::buy_hold), v, opts);
        CHECK(r.num_transactions == 2);
        const auto bench = average_buy_hold_returns(v);
        for (std::size_t t = 0; t < 50; ++t) CHECK(r.returns[t] == doctest::Approx(bench[t]).epsilon(1e-12));
    }
}
