#include "records.hpp"

#include "qevo/json_io.hpp"

#include <doctest.h>

#include <limits>

using namespace qevo;

TEST_SUITE("json_io") {
    TEST_CASE("record round trip with every field set") {
        CandidateRecord r = qevo::test::scored_record(1.25, qevo::test::fv({1, 2, 3}, "010"), 2);
        r.id = 17;
        r.generation = 4;
        r.hypothesis = {"h", "r", "o", "e", "k", "x"};
        r.program = "program p\n";
        r.tags = {"mean_reversion"};
        r.metrics.cumulative_return = 0.123456789012345;
        r.metrics.num_transactions = 99;
        r.analysis.mode = "llm";
        r.analysis.verdict = "supported";
        r.analysis.scores = {{"a", 1.5}};
        r.analysis.reasoning = {{"b", "why"}};
        r.parent_id = 3;
        r.cousin_ids = {1, 2};
        r.repair_attempts = 2;
        r.transcripts = {"t1"};
        CHECK(record_from_json(Json::parse(to_json(r).dump())) == r);
    }

    TEST_CASE("failed record keeps empty optionals") {
        CandidateRecord r = qevo::test::failed_record(1);
        r.metrics.invalid_reason = "portfolio value fell";
        const auto back = record_from_json(Json::parse(to_json(r).dump()));
        CHECK(back == r);
        CHECK_FALSE(back.feature_vector);
        CHECK_FALSE(back.metrics.sharpe);
        CHECK(back.score() == -std::numeric_limits<double>::infinity());
    }

    TEST_CASE("doubles survive text exactly") {
        MetricSet m;
        m.sharpe = 0.1 + 0.2;
        m.sortino = 1.0 / 3.0;
        m.information_ratio = -2.718281828459045;
        m.max_drawdown = -0.30000000000000004;
        m.valid = true;
        CHECK(metrics_from_json(Json::parse(to_json(m).dump())) == m);
    }

    TEST_CASE("feature space and insight round trip") {
        const auto s = FeatureSpace::defaults(Taxonomy{{"a", "b"}}, 7);
        CHECK(feature_space_from_json(Json::parse(to_json(s).dump())) == s);
        const auto i = make_insight(3, 8, "Keep stops tight", CandidateId{5});
        CHECK(insight_from_json(Json::parse(to_json(i).dump())) == i);
    }

    TEST_CASE("field order is fixed") {
        const auto j = to_json(qevo::test::scored_record(1, qevo::test::fv({0})));
        std::vector<std::string> keys;
        for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
        CHECK(keys.front() == "id");
        CHECK(keys[1] == "island_id");
        CHECK(keys[2] == "generation");
    }
}
