#include "records.hpp"
#include "test_support.hpp"

#include "qevo/error.hpp"
#include "qevo/islands.hpp"

#include <doctest.h>

#include <set>

using namespace qevo;
using qevo::test::fv;
using qevo::test::scored_record;

namespace {

BacktestOptions train_options(const DatasetView& v) {
    BacktestOptions o;
    o.benchmark_returns = average_buy_hold_returns(v);
    return o;
}

}  // namespace

TEST_SUITE("islands") {
    TEST_CASE("one island per category plus buy-and-hold") {
        const auto splits = split_periods(qevo::test::synthetic_universe(), qevo::test::synthetic_split());
        const auto tax = Taxonomy::equities_default();
        EvolutionaryDatabase db(FeatureSpace::defaults(tax));
        const auto islands = init_islands(splits.train, tax, train_options(splits.train), db);
        REQUIRE(islands.size() == 9);
        CHECK(db.size() == 9);
        for (std::size_t i = 0; i < islands.size(); ++i) {
            CHECK(islands[i].id == static_cast<int>(i));
            REQUIRE(islands[i].population.size() == 1);
            const auto& rec = db.get(islands[i].population[0]);
            CHECK(rec.island_id == islands[i].id);
            CHECK(rec.generation == 0);
            CHECK(rec.hypothesis.complete());
            if (i < 8) CHECK(rec.tags == std::vector<std::string>{tax.categories[i]});
        }
        CHECK(islands.back().seed_category == buy_and_hold_island);
        const auto& bh = db.get(islands.back().population[0]);
        CHECK(bh.tags.empty());
        REQUIRE(bh.feature_vector);
        CHECK(bh.feature_vector->category == "00000000");
    }

    TEST_CASE("seed that cannot run aborts initialization") {
        // a benchmark of the wrong length makes every seed backtest throw
        const auto splits = split_periods(qevo::test::synthetic_universe(), qevo::test::synthetic_split());
        EvolutionaryDatabase db(FeatureSpace::defaults(Taxonomy{{"momentum_trend"}}));
        auto o = train_options(splits.train);
        o.benchmark_returns = std::vector<double>{0.0};
        CHECK_THROWS_AS(init_islands(splits.train, Taxonomy{{"momentum_trend"}}, o, db), SeedBacktestFailure);
    }

    TEST_CASE("migration copies the top tenth to both neighbors") {
        EvolutionaryDatabase db(FeatureSpace{{{"sharpe", FeatureMetric::sharpe, -2, 4, 16}}, false, Taxonomy{{"x"}}});
        std::vector<Island> islands(3);
        for (int i = 0; i < 3; ++i) {
            islands[i].id = i;
            for (int k = 0; k < 10; ++k)
                islands[i].add_member(db.insert(scored_record(i * 100 + k, fv({k}), i)).id);
        }
        islands[0].add_member(db.insert(qevo::test::failed_record()).id);  // 11 members -> 2 migrants
        const auto before = islands;
        const auto log = migrate(islands, db, 0.10, 10);
        REQUIRE(log.size() == 6);
        for (const auto& e : log) CHECK(e.generation == 10);
        // island 0: ids 0..9 and failed 30; top two are 9, 8
        CHECK(log[0].source == 0);
        CHECK(log[0].destination == 2);
        CHECK(log[0].candidate_ids == std::vector<CandidateId>{9, 8});
        CHECK(log[1].destination == 1);
        CHECK(islands[1].contains(9));
        CHECK(islands[2].contains(8));
        CHECK(islands[0].contains(19));
        CHECK(islands[0].contains(29));
        CHECK(islands[1].population.size() == 10 + 2 + 1);
        // sources keep their members, in order
        for (int i = 0; i < 3; ++i)
            CHECK(std::vector<CandidateId>(islands[i].population.begin(),
                                           islands[i].population.begin() + before[i].population.size()) ==
                  before[i].population);
        // no duplicates, nothing deleted
        std::set<CandidateId> all;
        for (const auto& is : islands) {
            std::set<CandidateId> s(is.population.begin(), is.population.end());
            CHECK(s.size() == is.population.size());
            all.insert(s.begin(), s.end());
        }
        CHECK(all.size() == db.size());
    }

    TEST_CASE("two islands are each other's only neighbor") {
        EvolutionaryDatabase db(FeatureSpace{{{"sharpe", FeatureMetric::sharpe, -2, 4, 16}}, false, Taxonomy{{"x"}}});
        std::vector<Island> islands(2);
        islands[1].id = 1;
        islands[0].add_member(db.insert(scored_record(1, fv({0}))).id);
        islands[1].add_member(db.insert(scored_record(2, fv({1}), 1)).id);
        const auto log = migrate(islands, db);
        CHECK(log.size() == 2);
        CHECK(islands[0].population == std::vector<CandidateId>{0, 1});
        CHECK(islands[1].population == std::vector<CandidateId>{1, 0});
        CHECK(migrate(islands, db)[0].candidate_ids.empty());
        std::vector<Island> one(1);
        CHECK(migrate(one, db).empty());
    }

    TEST_CASE("evaluate_program records failures instead of throwing") {
        const auto v = qevo::test::view_of({qevo::test::series_from_closes("A", {100, 150, 210, 260})});
        BacktestOptions o;
        o.cost = CostModel::zero();
        o.execution.allow_short = true;
        const auto space = FeatureSpace::defaults(Taxonomy{{"x"}});
        const auto ev = evaluate_program(parse_program("program p\nshort_entry close > 0\nrebalance once\n"), v, o, space);
        CHECK_FALSE(ev.failure.empty());
        CHECK_FALSE(ev.feature_vector);
    }
}
