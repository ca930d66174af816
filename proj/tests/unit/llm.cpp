#include "test_support.hpp"

#include "qevo/error.hpp"
#include "qevo/llm.hpp"
#include "qevo/templates.hpp"

#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

using namespace qevo;

namespace {

const std::string good_hypothesis =
    "<hypothesis>Short-term reversals revert</hypothesis>\n<rationale>liquidity</rationale>\n"
    "<objectives>higher sharpe</objectives>\n<expected_insights>when it fails</expected_insights>\n"
    "<risks_limitations>trends</risks_limitations>\n<next_step_ideas>vary the window</next_step_ideas>\n";

const std::string good_program =
    "```\nprogram rev\ntags mean_reversion\nindicator z = bollinger_z(20)\nentry z < -1\nexit z > 0\n"
    "sizing equal_weight\nrebalance daily\n```";

GenerationContext make_context() {
    GenerationContext c;
    c.taxonomy = Taxonomy::equities_default();
    c.parent.program = serialize_program(seed_program("mean_reversion"));
    c.parent.hypothesis.hypothesis = "seed";
    c.data_schema = "three assets";
    return c;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_SUITE("llm") {
    TEST_CASE("template rendering") {
        CHECK(render_template("a {x} b {y} {z}", {{"x", "1"}, {"y", "{x}"}}) == "a 1 b {x} {z}");
        CHECK(render_template("{", {}) == "{");
    }

    TEST_CASE("hypothesis tags") {
        const auto h = parse_hypothesis_tags(good_hypothesis);
        CHECK(h.complete());
        CHECK(h.hypothesis == "Short-term reversals revert");
        CHECK(h.experimentation_ideas == "vary the window");
        const auto partial = parse_hypothesis_tags("<hypothesis>x</hypothesis><rationale> </rationale>");
        CHECK(partial.missing_fields() == std::vector<std::string>{"rationale", "objectives", "expected_insights",
                                                                    "risks_limitations", "experimentation_ideas"});
    }

    TEST_CASE("program extraction") {
        CHECK(extract_program_text("see\n```dsl\nprogram a\n```\nbye") == "program a\n");
        CHECK(extract_program_text("program a\n") == "program a\n");
    }

    TEST_CASE("shipped prompt files equal the built-in defaults") {
        const auto defaults = PromptTemplates::defaults();
        const std::filesystem::path dir = std::filesystem::path(QEVO_SOURCE_DIR) / "prompts";
        for (const auto& [name, text] : defaults.entries()) {
            CHECK(!text.empty());
            CHECK(read_file(dir / (name + ".txt")) == text);
        }
        qevo::test::TempDir tmp;
        std::ofstream(tmp.path() / "coding.txt") << "custom {parent}";
        const auto loaded = PromptTemplates::load(tmp.path());
        CHECK(loaded.coding == "custom {parent}");
        CHECK(loaded.research == defaults.research);
    }

    TEST_CASE("clean proposal needs no repair") {
        auto ep = std::make_shared<ScriptedEndpoint>(std::vector<ScriptedEndpoint::Reply>{good_hypothesis, good_program});
        LlmGenerator gen(ep);
        Rng rng(1);
        const auto out = gen.propose(make_context(), rng);
        CHECK(out.repair_attempts == 0);
        CHECK(out.program.name == "rev");
        CHECK(out.hypothesis.complete());
        REQUIRE(out.transcripts.size() == 2);
        CHECK(out.transcripts[1].find("### reply\nprogram rev") == std::string::npos);
        CHECK(out.transcripts[1].find("bollinger_z(20)") != std::string::npos);
        CHECK(ep->calls().size() == 2);
        CHECK(ep->calls()[0].front().role == "system");
    }

    TEST_CASE("one syntax error is repaired with the error fed back") {
        auto ep = std::make_shared<ScriptedEndpoint>(std::vector<ScriptedEndpoint::Reply>{
            good_hypothesis, "program rev\nentry close > \n", good_program});
        LlmGenerator gen(ep);
        Rng rng(1);
        const auto out = gen.propose(make_context(), rng);
        CHECK(out.repair_attempts == 1);
        const auto& repair_prompt = ep->calls()[2].back().content;
        CHECK(repair_prompt.find("2:") != std::string::npos);
    }

    TEST_CASE("budget exhaustion is a generation failure") {
        std::vector<ScriptedEndpoint::Reply> replies{good_hypothesis};
        for (int i = 0; i < 4; ++i) replies.push_back(std::string("program bad\nentry nope > 1\n"));
        auto ep = std::make_shared<ScriptedEndpoint>(replies);
        LlmGenerator gen(ep);
        Rng rng(1);
        CHECK_THROWS_AS(gen.propose(make_context(), rng), GenerationFailure);
        CHECK(ep->calls().size() == 5);  // hypothesis, coding, three repairs
        CHECK(ep->remaining() == 0);
    }

    TEST_CASE("backtest errors count against the repair budget") {
        auto ep = std::make_shared<ScriptedEndpoint>(
            std::vector<ScriptedEndpoint::Reply>{good_hypothesis, good_program, good_program});
        LlmGenerator gen(ep);
        Rng rng(1);
        int calls = 0;
        const auto out = gen.propose(make_context(), rng, [&](const Program&) -> std::optional<std::string> {
            return ++calls == 1 ? std::optional<std::string>("cash went negative") : std::nullopt;
        });
        CHECK(out.repair_attempts == 1);
        CHECK(ep->calls()[2].back().content.find("cash went negative") != std::string::npos);
    }

    TEST_CASE("malformed hypothesis gets one re-prompt") {
        auto ep = std::make_shared<ScriptedEndpoint>(std::vector<ScriptedEndpoint::Reply>{
            std::string("<hypothesis>x</hypothesis>"), good_hypothesis, good_program});
        LlmGenerator gen(ep);
        Rng rng(1);
        CHECK(gen.propose(make_context(), rng).hypothesis.complete());

        auto bad = std::make_shared<ScriptedEndpoint>(std::vector<ScriptedEndpoint::Reply>{
            std::string("nothing"), std::string("still nothing")});
        LlmGenerator gen2(bad);
        CHECK_THROWS_AS(gen2.propose(make_context(), rng), MalformedHypothesis);
    }

    TEST_CASE("foreign tags are replaced by derived ones") {
        auto ep = std::make_shared<ScriptedEndpoint>(std::vector<ScriptedEndpoint::Reply>{
            good_hypothesis, std::string("program x\ntags carry_trade\nindicator r = rsi(14)\nentry r < 30\n")});
        LlmGenerator gen(ep);
        Rng rng(1);
        const auto out = gen.propose(make_context(), rng);
        CHECK(out.program.tags == derive_tags(out.program, CategoryTable::defaults(), Taxonomy::equities_default()));
    }

    TEST_CASE("analysis parses JSON and falls back on errors") {
        CandidateRecord parent, child;
        parent.metrics = {1.0, 1.0, 0.0, 0.0, 0.0, 0, true, ""};
        child.metrics = {2.0, 1.0, 0.0, 0.0, 0.0, 0, true, ""};
        auto ep = std::make_shared<ScriptedEndpoint>(std::vector<ScriptedEndpoint::Reply>{
            std::string("ok {\"economic_rationale\": 8, \"reasoning\": \"fine\", \"insight\": \"keep\"}"),
            ScriptedEndpoint::Failure{"down"}});
        LlmGenerator gen(ep);
        const auto a = gen.analyze(child, &parent);
        CHECK(a.analysis.mode == "llm");
        CHECK(a.analysis.verdict == "supported");
        CHECK(a.analysis.scores.at("economic_rationale") == 8.0);
        CHECK(a.analysis.summary == "fine");
        const auto b = gen.analyze(child, &parent);
        CHECK(b.analysis.mode == "template");
    }

    TEST_CASE("consolidation returns the reply or nothing") {
        auto ep = std::make_shared<ScriptedEndpoint>(
            std::vector<ScriptedEndpoint::Reply>{std::string("merged"), ScriptedEndpoint::Failure{"x"}});
        LlmGenerator gen(ep);
        const std::vector<Insight> ins{make_insight(0, 1, "a", {})};
        CHECK(gen.consolidate(ins) == std::optional<std::string>("merged"));
        CHECK_FALSE(gen.consolidate(ins));
    }

    TEST_CASE("HTTP endpoint against a local server") {
        httplib::Server server;
        std::atomic<int> hits{0};
        std::string seen_auth, seen_model;
        server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
            if (hits++ == 0) {
                res.status = 503;
                return;
            }
            seen_auth = req.get_header_value("Authorization");
            const auto body = nlohmann::json::parse(req.body);
            seen_model = body.at("model").get<std::string>();
            const auto last = body.at("messages").back().at("content").get<std::string>();
            nlohmann::json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "echo " + last}}}}}}};
            res.set_content(reply.dump(), "application/json");
        });
        server.Post("/v1/bad", [](const httplib::Request&, httplib::Response& res) { res.status = 400; });
        const int port = server.bind_to_any_port("127.0.0.1");
        std::thread th([&] { server.listen_after_bind(); });
        server.wait_until_ready();

        EndpointConfig cfg;
        cfg.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
        cfg.model = "m1";
        cfg.api_key = "secret";
        cfg.api_key_env = "";
        cfg.backoff = std::chrono::milliseconds(1);
        HttpChatEndpoint ep(cfg);
        CHECK(ep.complete({{"user", "hi"}}) == "echo hi");
        CHECK(hits == 2);
        CHECK(seen_auth == "Bearer secret");
        CHECK(seen_model == "m1");

        cfg.path = "/bad";
        HttpChatEndpoint bad(cfg);
        CHECK_THROWS_AS(bad.complete({{"user", "hi"}}), EndpointError);

        server.stop();
        th.join();

        cfg.path = "/chat/completions";
        cfg.max_retries = 1;
        HttpChatEndpoint down(cfg);
        CHECK_THROWS_AS(down.complete({{"user", "hi"}}), EndpointError);
    }
}
