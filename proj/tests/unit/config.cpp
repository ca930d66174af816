#include "test_support.hpp"

#include "qevo/config.hpp"
#include "qevo/error.hpp"

#include <doctest.h>

#include <fstream>

using namespace qevo;
namespace fs = std::filesystem;

namespace {

std::string minimal(const std::string& extra = "") {
    return R"({"assets": [{"symbol": "A", "path": "data/A.csv"}], "split": "equities_default")" + extra + "}";
}

std::string error_key(const std::string& text) {
    try {
        parse_config(text, "/base");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_SUITE("config") {
    TEST_CASE("minimal config takes the defaults") {
        const auto c = parse_config(minimal(), "/base/dir");
        REQUIRE(c.assets.size() == 1);
        CHECK(c.assets[0].path == fs::path("/base/dir/data/A.csv"));
        CHECK(c.run.taxonomy == Taxonomy::equities_default());
        CHECK(c.run.generations == 150);
        CHECK(c.run.features.continuous.size() == 5);
        CHECK(c.run.features.continuous[0].bins == 16);
        CHECK(c.run.sampling.alpha == 0.5);
        CHECK(c.run.cost == CostModel{});
        CHECK(c.split.train.first == SplitSpec::equities_default().train.first);
    }

    TEST_CASE("every section parses") {
        const auto c = parse_config(R"({
          "assets": [{"symbol": "ES", "path": "/abs/es.csv", "asset_class": "futures", "point_value": 50, "shares": 7}],
          "split": {"train": ["2010-01-01", "2012-12-31"], "valid": ["2013-01-01", "2013-12-31"],
                    "test": ["2014-01-01", "2014-12-31"]},
          "taxonomy": ["momentum_trend", "volatility"],
          "features": {"bins": 4, "use_category": false,
                       "dimensions": ["sharpe", {"name": "turnover", "metric": "num_transactions", "min": 0, "max": 100, "bins": 2}]},
          "evolution": {"generations": 7, "migration_interval": 3, "insight_interval": 5, "migration_fraction": 0.2,
                        "insight_max": 50, "master_seed": 9, "parallel": true},
          "sampling": {"alpha": 0.7, "sigma_d": 0.5, "k_bf": 1, "best": 1, "diverse": 2, "random": 3, "attempts_per_diverse": 4},
          "cost": {"zero": true},
          "execution": {"fill_mode": "next_open", "whole_units": true, "allow_short": true},
          "initial_capital": 5000,
          "benchmark": "equal_weight",
          "limits": {"min_lookback": 2, "max_lookback": 100, "max_indicators": 5, "max_rule_nodes": 20},
          "generator": {"kind": "llm", "prompts_dir": "p", "repair_budget": 2, "hypothesis_repairs": 0,
                        "endpoint": {"base_url": "http://h:1/v1", "model": "m", "timeout_ms": 100, "max_retries": 0}},
          "run_dir": "out"
        })", "/cfg");
        CHECK(c.assets[0].asset_class == AssetClass::futures);
        CHECK(c.assets[0].point_value == 50);
        CHECK(c.run.share_counts == std::vector<std::pair<std::string, double>>{{"ES", 7}});
        CHECK(c.split.valid.last == parse_date("2013-12-31"));
        CHECK(c.run.taxonomy.size() == 2);
        CHECK_FALSE(c.run.features.use_category);
        REQUIRE(c.run.features.continuous.size() == 2);
        CHECK(c.run.features.continuous[0].bins == 4);
        CHECK(c.run.features.continuous[1].bins == 2);
        CHECK(c.run.features.continuous[1].metric == FeatureMetric::num_transactions);
        CHECK(c.run.generations == 7);
        CHECK(c.run.parallel);
        CHECK(c.run.sampling.sigma_d == std::vector<double>{0.5});
        CHECK(c.run.sampling.k_bf == 1);
        CHECK(c.run.cost == CostModel::zero());
        CHECK(c.run.execution.fill_mode == FillMode::next_open);
        CHECK(c.run.initial_capital == 5000);
        CHECK(c.run.benchmark.kind == "equal_weight");
        CHECK(c.run.param_bounds.max_lookback == 100);
        CHECK(c.run.generator == GeneratorKind::llm);
        CHECK(c.run.prompts_dir == fs::path("/cfg/p"));
        CHECK(c.run.llm.repair_budget == 2);
        CHECK(c.run.endpoint.timeout == std::chrono::milliseconds(100));
        CHECK(c.run.run_dir == fs::path("/cfg/out"));
    }

    TEST_CASE("errors name the offending key") {
        CHECK(error_key(minimal(R"(, "evolution": {"generationz": 3})")).find("evolution.generationz") != std::string::npos);
        CHECK(error_key(minimal(R"(, "evolution": {"generations": "many"})")).find("evolution.generations") != std::string::npos);
        CHECK(error_key(minimal(R"(, "cost": {"volume_limit": 2})")).find("volume_limit") != std::string::npos);
        CHECK(error_key(minimal(R"(, "features": {"dimensions": ["alpha"]})")).find("features.dimensions[0]") != std::string::npos);
        CHECK(error_key(R"({"split": "equities_default"})").find("assets") != std::string::npos);
        CHECK(error_key(minimal(R"(, "taxonomy": [])")).find("taxonomy") != std::string::npos);
        CHECK(error_key(minimal(R"(, "bogus": 1)")).find("bogus") != std::string::npos);
        CHECK(error_key("{not json").find("invalid JSON") != std::string::npos);
        CHECK(error_key(minimal(R"(, "sampling": {"alpha": 2})")).find("alpha") != std::string::npos);
    }

    TEST_CASE("loading the bundled synthetic config") {
        const auto c = load_config(fs::path(QEVO_SOURCE_DIR) / "configs" / "synthetic.json");
        const auto u = load_universe(c);
        CHECK(u->num_assets() == 3);
        CHECK(u->num_days() == 2520);
        CHECK(c.run.run_dir == (fs::path(QEVO_SOURCE_DIR) / "runs" / "synthetic").lexically_normal());
        const auto views = split_periods(u, c.split);
        CHECK(views.train.size() > 1200);
        const auto mem = qevo::test::synthetic_universe();
        CHECK(u->calendar == mem->calendar);
        for (std::size_t a = 0; a < 3; ++a) {
            CHECK(u->series[a].symbol == mem->series[a].symbol);
            for (std::size_t t = 0; t < u->num_days(); t += 97)
                CHECK(u->series[a].bars[t].close == doctest::Approx(mem->series[a].bars[t].close).epsilon(1e-12));
        }
    }
}
