#include "records.hpp"
#include "test_support.hpp"

#include "qevo/database.hpp"
#include "qevo/error.hpp"
#include "qevo/feature_map.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

using namespace qevo;
using qevo::test::fv;
using qevo::test::scored_record;

namespace {

FeatureSpace one_dim_space(int bins, bool category, Taxonomy tax = Taxonomy{{"m", "a", "r"}}) {
    FeatureSpace s;
    s.taxonomy = std::move(tax);
    s.use_category = category;
    s.continuous = {{"sharpe", FeatureMetric::sharpe, -2, 4, bins}};
    return s;
}

}  // namespace

TEST_SUITE("feature_map") {
    TEST_CASE("binning arithmetic") {
        const ContinuousDimension d{"x", FeatureMetric::sharpe, -1, 3, 16};
        CHECK(bin_continuous(0.0, d) == 4);
        CHECK(bin_continuous(3.0, d) == 15);
        CHECK(bin_continuous(-5.0, d) == 0);
        CHECK(bin_continuous(100.0, d) == 15);
        CHECK(bin_continuous(-1.0, d) == 0);
        CHECK(bin_continuous(2.99, d) == 15);
        CHECK_THROWS_AS(bin_continuous(std::nan(""), d), NonFiniteValue);
        const ContinuousDimension mdd{"mdd", FeatureMetric::max_drawdown, -1, 0, 16};
        CHECK(bin_continuous(-0.25, mdd) == 12);
        const ContinuousDimension one{"x", FeatureMetric::sharpe, -2, 4, 1};
        for (double v : {-10.0, 0.0, 10.0}) CHECK(bin_continuous(v, one) == 0);
    }

    TEST_CASE("category encoding") {
        const Taxonomy tax{{"momentum", "arbitrage", "mean_reversion"}};
        CHECK(encode_category({"momentum", "mean_reversion"}, tax) == "101");
        CHECK(encode_category({}, tax) == "000");
        CHECK(encode_category({"arbitrage", "momentum", "mean_reversion"}, tax) == "111");
        CHECK_THROWS_AS(encode_category({"carry"}, tax), UnknownTag);
    }

    TEST_CASE("default space") {
        const auto s = FeatureSpace::defaults(Taxonomy::equities_default());
        REQUIRE(s.continuous.size() == 5);
        CHECK(s.index_of("sharpe"));
        CHECK_FALSE(s.index_of("category"));
        CHECK(s.total_cells() == doctest::Approx(std::pow(16.0, 5) * 256.0));
        auto one = s;
        for (auto& d : one.continuous) d.bins = 1;
        one.use_category = false;
        CHECK(one.total_cells() == 1.0);
        auto bad = s;
        bad.continuous[0].range_max = bad.continuous[0].range_min;
        CHECK_THROWS_AS(bad.validate(), ConfigError);
    }

    TEST_CASE("feature vector by hand") {
        const Taxonomy tax{{"momentum_trend", "mean_reversion", "volatility"}};
        const auto space = FeatureSpace::defaults(tax, 16);
        MetricSet m;
        m.sharpe = 1.1;               // (1.1 + 2) / 0.375 = 8.27 -> 8
        m.sortino = -0.4;             // (-0.4 + 2) / 0.5 = 3.2 -> 3
        m.information_ratio = 0.2;
        m.max_drawdown = -0.25;       // 0.75 / 0.0625 = 12
        m.cumulative_return = 0.8;    // 1.8 / 0.375 = 4.8 -> 4
        m.num_transactions = 400;     // 400 / 312.5 = 1.28 -> 1
        m.valid = true;
        const auto v = compute_feature_vector(m, {"volatility", "momentum_trend"}, space);
        std::vector<int> expect(space.continuous.size());
        for (std::size_t i = 0; i < expect.size(); ++i) {
            switch (space.continuous[i].metric) {
                case FeatureMetric::sharpe: expect[i] = 8; break;
                case FeatureMetric::sortino: expect[i] = 3; break;
                case FeatureMetric::max_drawdown: expect[i] = 12; break;
                case FeatureMetric::cumulative_return: expect[i] = 4; break;
                case FeatureMetric::num_transactions: expect[i] = 1; break;
            }
        }
        CHECK(v.bins == expect);
        CHECK(v.category == "101");
        CHECK(compute_feature_vector(m, {"volatility", "momentum_trend"}, space) == v);
        const auto w = compute_feature_vector(m, {"mean_reversion"}, space);
        CHECK(w.bins == v.bins);
        CHECK(w.category == "010");
        m.valid = false;
        CHECK_THROWS_AS(compute_feature_vector(m, {}, space), InvalidMetrics);
    }

    TEST_CASE("insert: empty cell, better, worse, tie, failed") {
        EvolutionaryDatabase db(one_dim_space(16, false));
        auto r = db.insert(scored_record(1.5, fv({5})));
        CHECK(r.accepted());
        CHECK_FALSE(r.replaced);
        r = db.insert(scored_record(1.2, fv({5})));
        CHECK(r.status == InsertResult::Status::rejected);
        r = db.insert(scored_record(1.9, fv({5})));
        CHECK(r.accepted());
        CHECK(r.replaced == CandidateId{0});
        r = db.insert(scored_record(1.9, fv({5})));
        CHECK(r.status == InsertResult::Status::rejected);
        CHECK(db.occupant(fv({5})) == CandidateId{2});
        r = db.insert(qevo::test::failed_record());
        CHECK(r.status == InsertResult::Status::archived_only);
        CHECK(db.size() == 5);
        CHECK(db.cells().size() == 1);
        for (CandidateId i = 0; i < 5; ++i) CHECK(db.get(i).id == i);
        CHECK(db.is_elite(2));
        CHECK_FALSE(db.is_elite(0));
    }

    TEST_CASE("elitism replay matches a brute-force oracle") {
        Rng rng(99);
        EvolutionaryDatabase db(one_dim_space(4, true));
        std::vector<CandidateRecord> all;
        for (int i = 0; i < 2000; ++i) {
            auto rec = rng.bernoulli(0.1)
                           ? qevo::test::failed_record()
                           : scored_record(std::round(rng.normal(0, 1) * 4) / 4,
                                           fv({static_cast<int>(rng.index(4))}, std::string(1, "01"[rng.index(2)]) + "0" +
                                                                                     std::string(1, "01"[rng.index(2)])));
            all.push_back(rec);
            db.insert(rec);
        }
        std::map<FeatureVector, std::size_t> oracle;
        for (std::size_t i = 0; i < all.size(); ++i) {
            if (!all[i].feature_vector) continue;
            auto it = oracle.find(*all[i].feature_vector);
            if (it == oracle.end() || all[i].score() > all[it->second].score()) oracle[*all[i].feature_vector] = i;
        }
        REQUIRE(oracle.size() == db.cells().size());
        for (const auto& [k, idx] : oracle) CHECK(db.occupant(k) == CandidateId{idx});

        const auto stats = map_stats(db);
        double qd = 0, best = -1e300;
        for (const auto& [k, idx] : oracle) {
            qd += all[idx].score();
            best = std::max(best, all[idx].score());
        }
        CHECK(stats.filled_cells == oracle.size());
        CHECK(stats.total_cells == 32.0);
        CHECK(stats.coverage == doctest::Approx(oracle.size() / 32.0));
        CHECK(stats.qd_sum == doctest::Approx(qd));
        CHECK(*stats.best_score == best);
    }

    TEST_CASE("map stats on empty and per-island maps") {
        EvolutionaryDatabase db(one_dim_space(16, false));
        auto s = map_stats(db);
        CHECK(s.coverage == 0.0);
        CHECK_FALSE(s.best_score);
        db.insert(scored_record(1, fv({3})));
        db.insert(scored_record(2, fv({4}), 1));
        db.insert(scored_record(0.5, fv({3}), 1));
        s = map_stats(db, {{0, {0}}, {1, {1, 2}}});
        CHECK(s.coverage == doctest::Approx(2.0 / 16));
        CHECK(s.island_cells.at(0) == 1);
        CHECK(s.island_cells.at(1) == 1);
        CHECK(s.island_coverage.at(1) == doctest::Approx(1.0 / 16));
        CHECK(s.best_id == CandidateId{1});
    }

    TEST_CASE("single-bin space without category holds one cell") {
        auto space = FeatureSpace::defaults(Taxonomy{{"a", "b"}}, 1);
        space.use_category = false;
        EvolutionaryDatabase db(space);
        Rng rng(3);
        for (int i = 0; i < 50; ++i) {
            MetricSet m;
            m.sharpe = rng.normal(0, 3);
            m.sortino = rng.normal(0, 3);
            m.information_ratio = rng.normal(0, 1);
            m.max_drawdown = -rng.uniform();
            m.cumulative_return = rng.normal(0, 2);
            m.num_transactions = rng.index(10000);
            m.valid = true;
            CandidateRecord r;
            r.metrics = m;
            r.feature_vector = compute_feature_vector(m, {"a"}, space);
            db.insert(r);
            CHECK(db.cells().size() == 1);
        }
    }

    TEST_CASE("projection grid") {
        FeatureSpace s;
        s.taxonomy = Taxonomy{{"m", "r"}};
        s.continuous = {{"sharpe", FeatureMetric::sharpe, -2, 4, 3},
                        {"max_drawdown", FeatureMetric::max_drawdown, -1, 0, 2}};
        EvolutionaryDatabase db(s);
        std::ostringstream empty_csv;
        write_projection_csv(export_projection(db, "category", "mdd", "sharpe"), empty_csv);
        CHECK(empty_csv.str() == "category,max_drawdown,sharpe\n");

        db.insert(scored_record(1.0, fv({0, 1}, "10")));
        db.insert(scored_record(3.0, fv({2, 1}, "10")));
        db.insert(scored_record(2.0, fv({1, 0}, "01")));
        const auto p = export_projection(db, "category", "mdd", "sharpe");
        CHECK(p.rows.size() == 4 * 2);
        std::map<std::pair<std::string, std::string>, std::optional<double>> got;
        for (const auto& r : p.rows) got[{r.a, r.b}] = r.value;
        CHECK(got[{"10", "1"}] == 3.0);
        CHECK(got[{"01", "0"}] == 2.0);
        CHECK_FALSE(got[{"00", "0"}]);
        CHECK_FALSE(got[{"11", "1"}]);

        std::ostringstream csv;
        write_projection_csv(p, csv);
        CHECK(csv.str().find("00,0,\n") != std::string::npos);
        CHECK(csv.str().find("10,1,3\n") != std::string::npos);

        CHECK_THROWS_AS(export_projection(db, "category", "alpha", "sharpe"), UnknownDimension);
        CHECK_THROWS_AS(export_projection(db, "sharpe", "sr", "sharpe"), UnknownDimension);
        CHECK_THROWS_AS(export_projection(db, "sharpe", "mdd", "beta"), UnknownDimension);
        const auto single = export_projection(db, "sharpe", "mdd", "score");
        int populated = 0;
        for (const auto& r : single.rows) populated += r.value ? 1 : 0;
        CHECK(single.rows.size() == 6);
        CHECK(populated == 3);
    }
}
