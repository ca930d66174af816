#include "test_support.hpp"

#include "cli.hpp"
#include "qevo/json_io.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using qevo::Json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = qevo::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

// Synthetic universe plus a short run config in a scratch directory.
fs::path make_workspace(const qevo::test::TempDir& dir, int generations) {
    const auto cfg = dir.path() / "cfg" / "run.json";
    REQUIRE(run({"synth", "--data-dir", (dir.path() / "data").string(), "--config-out", cfg.string()}).code == 0);
    std::ifstream in(cfg);
    auto j = Json::parse(in);
    j["evolution"]["generations"] = generations;
    j["run_dir"] = "../run";
    std::ofstream(cfg) << j.dump(2);
    return cfg;
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("usage errors") {
        CHECK(run({}).code == 1);
        CHECK(run({"evolve"}).code == 1);
        CHECK(run({"frobnicate"}).code == 1);
        CHECK(run({"--help"}).code == 0);
    }

    TEST_CASE("evolve, inspect, select and resume") {
        qevo::test::TempDir dir;
        const auto cfg = make_workspace(dir, 3);
        auto r = run({"evolve", "--config", cfg.string()});
        REQUIRE(r.code == 0);
        CHECK(r.out.find("gen    3") != std::string::npos);
        CHECK(fs::exists(dir.path() / "run" / "candidates.jsonl"));
        CHECK(fs::exists(dir.path() / "run" / "checkpoints" / "gen_0003" / "manifest.json"));

        const auto csv = dir.path() / "proj.csv";
        r = run({"inspect-map", "--db", (dir.path() / "run").string(), "--dims", "category,mdd", "--color", "sharpe",
                 "--out", csv.string()});
        REQUIRE(r.code == 0);
        CHECK(r.out.find("candidates 16") != std::string::npos);
        std::ifstream in(csv);
        std::string header;
        std::getline(in, header);
        CHECK(header == "category,max_drawdown,sharpe");
        int rows = 0;
        for (std::string line; std::getline(in, line);) ++rows;
        CHECK(rows == 8 * 16);

        CHECK(run({"inspect-map", "--db", (dir.path() / "run").string(), "--dims", "category,alpha", "--out",
                   csv.string()})
                  .code == 1);

        const auto sel = dir.path() / "sel.json";
        r = run({"select", "--db", (dir.path() / "run").string(), "--config", cfg.string(), "--out", sel.string()});
        REQUIRE(r.code == 0);
        CHECK(r.out.find("selected candidate") != std::string::npos);
        std::ifstream sj(sel);
        const auto j = Json::parse(sj);
        CHECK(j.contains("candidate"));
        CHECK(j.contains("test"));

        // resume to a longer horizon
        std::ifstream cin(cfg);
        auto c = Json::parse(cin);
        c["evolution"]["generations"] = 5;
        std::ofstream(cfg) << c.dump(2);
        r = run({"evolve", "--config", cfg.string(), "--resume",
                 (dir.path() / "run" / "checkpoints" / "gen_0003").string()});
        REQUIRE(r.code == 0);
        CHECK(r.out.find("gen    5") != std::string::npos);
        CHECK(r.out.find("gen    3") == std::string::npos);

        // changed bins -> mismatch
        c["features"]["bins"] = 8;
        std::ofstream(cfg) << c.dump(2);
        r = run({"evolve", "--config", cfg.string(), "--resume",
                 (dir.path() / "run" / "checkpoints" / "gen_0005").string()});
        CHECK(r.code == 2);
        CHECK(r.err.find("ConfigMismatch") != std::string::npos);
    }

    TEST_CASE("stop flag interrupts evolve with 130") {
        qevo::test::TempDir dir;
        const auto cfg = make_workspace(dir, 3);
        qevo::cli::stop_flag() = true;
        const auto r = run({"evolve", "--config", cfg.string()});
        qevo::cli::stop_flag() = false;
        CHECK(r.code == 130);
        CHECK(r.err.find("--resume") != std::string::npos);
        CHECK(fs::exists(dir.path() / "run" / "checkpoints" / "gen_0000"));
    }

    TEST_CASE("backtest: programs, builtins, baselines and errors") {
        qevo::test::TempDir dir;
        const auto cfg = make_workspace(dir, 1);
        auto r = run({"backtest", "--config", cfg.string(), "--baselines", "--split", "test"});
        REQUIRE(r.code == 0);
        for (const char* name : {"market_cap", "equal_weight", "risk_parity", "rsi_kdj", "macd_cross", "buy_hold"})
            CHECK(r.out.find(name) != std::string::npos);

        r = run({"backtest", "--config", cfg.string(), "--program", "builtin:buy_hold", "--zero-cost", "--split",
                 "valid"});
        REQUIRE(r.code == 0);
        CHECK(r.out.find("invalid") != std::string::npos);  // zero tracking error against its own benchmark

        const auto prog = dir.path() / "p.dsl";
        std::ofstream(prog) << "program trend\nindicator f = sma(20)\nentry close > f\n";
        const auto eq = dir.path() / "eq.csv";
        r = run({"backtest", "--config", cfg.string(), "--program", prog.string(), "--split", "train", "--out",
                 eq.string()});
        REQUIRE(r.code == 0);
        CHECK(r.out.find("trend") != std::string::npos);
        CHECK(fs::file_size(eq) > 1000);

        std::ofstream(prog) << "program bad\nentry close >\n";
        r = run({"backtest", "--config", cfg.string(), "--program", prog.string()});
        CHECK(r.code == 1);
        CHECK(r.err.find("2:") != std::string::npos);

        CHECK(run({"backtest", "--config", (dir.path() / "missing.json").string(), "--baselines"}).code == 1);
        std::ofstream(dir.path() / "bad.json") << R"({"assets": [], "split": "equities_default"})";
        r = run({"backtest", "--config", (dir.path() / "bad.json").string(), "--baselines"});
        CHECK(r.code == 1);
        CHECK(r.err.find("assets") != std::string::npos);
    }

    TEST_CASE("inspect on an empty directory and select without a run") {
        qevo::test::TempDir dir;
        const auto csv = dir.path() / "x.csv";
        auto r = run({"inspect-map", "--db", dir.path().string(), "--dims", "sharpe,mdd", "--out", csv.string()});
        CHECK(r.code == 0);
        CHECK(fs::file_size(csv) == std::string("sharpe,max_drawdown,score\n").size());
        const auto cfg = make_workspace(dir, 1);
        r = run({"select", "--db", (dir.path() / "nothing").string(), "--config", cfg.string()});
        CHECK(r.code == 1);
    }
}
