#include "qevo/llm.hpp"

#include "qevo/error.hpp"

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace qevo {

// Generated at configure time from prompts/*.txt.
std::string_view builtin_prompt(std::string_view name);

// ---------------------------------------------------------------- endpoints

HttpChatEndpoint::HttpChatEndpoint(EndpointConfig config) : config_(std::move(config)) {
    token_ = config_.api_key;
    if (!config_.api_key_env.empty())
        if (const char* env = std::getenv(config_.api_key_env.c_str()); env && *env) token_ = env;
    if (config_.max_concurrency < 1) config_.max_concurrency = 1;
}

std::string HttpChatEndpoint::complete(const std::vector<ChatMessage>& messages) {
    // split "scheme://host:port/prefix" into the client address and a path prefix
    const auto scheme_end = config_.base_url.find("://");
    if (scheme_end == std::string::npos) throw EndpointError("base_url needs a scheme: " + config_.base_url);
    const auto path_start = config_.base_url.find('/', scheme_end + 3);
    const std::string origin = config_.base_url.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? "" : config_.base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    nlohmann::json body;
    body["model"] = config_.model;
    body["temperature"] = config_.temperature;
    body["messages"] = nlohmann::json::array();
    for (const auto& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    const std::string payload = body.dump();

    {
        std::unique_lock lock(mutex_);
        slot_free_.wait(lock, [&] { return in_flight_ < config_.max_concurrency; });
        ++in_flight_;
    }
    struct Release {
        HttpChatEndpoint* self;
        ~Release() {
            {
                std::lock_guard lock(self->mutex_);
                --self->in_flight_;
            }
            self->slot_free_.notify_one();
        }
    } release{this};

    std::string last_error;
    auto delay = config_.backoff;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
        httplib::Client client(origin);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
        client.set_connection_timeout(secs.count(), static_cast<time_t>(usecs.count()));
        client.set_read_timeout(secs.count(), static_cast<time_t>(usecs.count()));
        client.set_write_timeout(secs.count(), static_cast<time_t>(usecs.count()));
        httplib::Headers headers;
        if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
        auto res = client.Post(prefix + config_.path, headers, payload, "application/json");
        if (!res) {
            last_error = "request failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = fmt::format("HTTP {}", res->status);
            continue;
        }
        if (res->status != 200) throw EndpointError(fmt::format("HTTP {}: {}", res->status, res->body.substr(0, 200)));
        try {
            auto reply = nlohmann::json::parse(res->body);
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw EndpointError(std::string("malformed completion response: ") + e.what());
        }
    }
    throw EndpointError(fmt::format("endpoint unavailable after {} attempts: {}", config_.max_retries + 1, last_error));
}

ScriptedEndpoint::ScriptedEndpoint(std::vector<Reply> replies) : replies_(replies.begin(), replies.end()) {}

void ScriptedEndpoint::push(Reply reply) { replies_.push_back(std::move(reply)); }

std::string ScriptedEndpoint::complete(const std::vector<ChatMessage>& messages) {
    calls_.push_back(messages);
    if (replies_.empty()) throw EndpointError("scripted endpoint has no replies left");
    Reply next = std::move(replies_.front());
    replies_.pop_front();
    if (auto* f = std::get_if<Failure>(&next)) throw EndpointError(f->message);
    return std::get<std::string>(next);
}

// ---------------------------------------------------------------- templates

PromptTemplates PromptTemplates::defaults() {
    PromptTemplates t;
    t.system = std::string(builtin_prompt("system"));
    t.research = std::string(builtin_prompt("research"));
    t.hypothesis_fix = std::string(builtin_prompt("hypothesis_fix"));
    t.coding = std::string(builtin_prompt("coding"));
    t.repair = std::string(builtin_prompt("repair"));
    t.analysis = std::string(builtin_prompt("analysis"));
    t.consolidate = std::string(builtin_prompt("consolidate"));
    return t;
}

std::vector<std::pair<std::string, std::string>> PromptTemplates::entries() const {
    return {{"system", system},   {"research", research}, {"hypothesis_fix", hypothesis_fix}, {"coding", coding},
            {"repair", repair},   {"analysis", analysis}, {"consolidate", consolidate}};
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
    PromptTemplates t = defaults();
    auto read = [&](const char* name, std::string& slot) {
        std::ifstream in(dir / (std::string(name) + ".txt"));
        if (!in) return;
        std::ostringstream ss;
        ss << in.rdbuf();
        slot = ss.str();
    };
    read("system", t.system);
    read("research", t.research);
    read("hypothesis_fix", t.hypothesis_fix);
    read("coding", t.coding);
    read("repair", t.repair);
    read("analysis", t.analysis);
    read("consolidate", t.consolidate);
    return t;
}

std::string render_template(const std::string& text, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '{') {
            const auto close = text.find('}', i + 1);
            if (close != std::string::npos) {
                auto it = values.find(text.substr(i + 1, close - i - 1));
                if (it != values.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out += text[i++];
    }
    return out;
}

Hypothesis parse_hypothesis_tags(const std::string& text) {
    auto tag = [&](const std::string& name) -> std::string {
        const std::string open = "<" + name + ">";
        const std::string close = "</" + name + ">";
        const auto a = text.find(open);
        if (a == std::string::npos) return {};
        const auto b = text.find(close, a + open.size());
        if (b == std::string::npos) return {};
        std::string v = text.substr(a + open.size(), b - a - open.size());
        const auto first = v.find_first_not_of(" \t\r\n");
        const auto last = v.find_last_not_of(" \t\r\n");
        return first == std::string::npos ? std::string{} : v.substr(first, last - first + 1);
    };
    Hypothesis h;
    h.hypothesis = tag("hypothesis");
    h.rationale = tag("rationale");
    h.objectives = tag("objectives");
    h.expected_insights = tag("expected_insights");
    h.risks_limitations = tag("risks_limitations");
    h.experimentation_ideas = tag("next_step_ideas");
    if (h.experimentation_ideas.empty()) h.experimentation_ideas = tag("experimentation_ideas");
    return h;
}

std::string extract_program_text(const std::string& reply) {
    const auto open = reply.find("```");
    if (open == std::string::npos) return reply;
    auto body_start = reply.find('\n', open);
    if (body_start == std::string::npos) return reply;
    ++body_start;
    const auto close = reply.find("```", body_start);
    return reply.substr(body_start, close == std::string::npos ? std::string::npos : close - body_start);
}

std::string dsl_reference() {
    return R"(One statement per line; '#' starts a comment.
program <name>                      name: letters, digits, _ . -
tags <category> ...                 strategy families (may be empty)
indicator <id> = <kind>(<ints>)     kinds: sma(n) ema(span) rsi(n) macd_hist(fast,slow,signal)
                                    bollinger_z(n) stochastic_kdj(k,d) [fields .k .d .j]
                                    rolling_vol(n) momentum(n) highest(n) lowest(n)
                                    volume_ratio(n) rel_momentum(n)
entry <condition>                   hold while true (or from entry until exit if an exit rule exists)
exit <condition>
short_entry <condition>             only used when shorting is enabled
short_exit <condition>
score <number expression>           used by signal_proportional sizing
sizing equal_weight | inverse_volatility(n) | fixed_fraction(f) | signal_proportional
overlay trailing_stop(pct)          e.g. 0.1 = exit 10% below the peak close since entry
overlay max_position_weight(w)
rebalance daily | every_n_days(n) | monthly | once
fallback cash | equal_weight_all    what to hold when nothing is active
Expressions: numbers, indicator ids, open high low close volume month weekday day_of_month,
+ - * /, < <= > >= == !=, and or not, if(cond, a, b), abs(x), min(a, b), max(a, b).
Without an entry rule every asset is held. Lookbacks are 1..252.
Example:
program trend_filter
tags momentum_trend
indicator fast = ema(12)
indicator slow = ema(48)
entry fast > slow and close > fast
exit fast < slow
sizing inverse_volatility(40)
overlay trailing_stop(0.12)
rebalance daily
)";
}

std::string describe_record(const CandidateRecord& r) {
    const auto& m = r.metrics;
    auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{:.3f}", *v) : std::string("n/a"); };
    std::string out = fmt::format("id {} (generation {}, island {})\n", r.id, r.generation, r.island_id);
    out += "hypothesis: " + r.hypothesis.hypothesis + "\n";
    out += "program:\n" + r.program;
    if (!r.failure.empty()) {
        out += "result: failed (" + r.failure + ")\n";
    } else {
        out += fmt::format("result: SR {} SOR {} IR {} MDD {:.3f} CR {:.3f} trades {} score {}\n", opt(m.sharpe),
                           opt(m.sortino), opt(m.information_ratio), m.max_drawdown, m.cumulative_return,
                           m.num_transactions, std::isfinite(r.score()) ? fmt::format("{:.3f}", r.score()) : "n/a");
    }
    if (!r.analysis.summary.empty()) out += "analysis: " + r.analysis.summary + "\n";
    return out;
}

// ---------------------------------------------------------------- generator

LlmGenerator::LlmGenerator(std::shared_ptr<ChatEndpoint> endpoint, PromptTemplates templates, LlmConfig config)
    : endpoint_(std::move(endpoint)), templates_(std::move(templates)), config_(config) {}

std::string LlmGenerator::ask(const std::string& prompt, std::vector<std::string>& transcripts) {
    std::vector<ChatMessage> messages;
    if (!templates_.system.empty()) messages.push_back({"system", templates_.system});
    messages.push_back({"user", prompt});
    std::string reply = endpoint_->complete(messages);
    transcripts.push_back("### prompt\n" + prompt + "\n### reply\n" + reply);
    return reply;
}

namespace {

std::string join_cousins(const std::vector<CandidateRecord>& cousins) {
    if (cousins.empty()) return "(none)";
    std::string out;
    for (const auto& c : cousins) out += describe_record(c) + "\n";
    return out;
}

std::string join_insights(const std::vector<Insight>& insights) {
    if (insights.empty()) return "(none yet)";
    std::string out;
    for (const auto& i : insights) out += "- " + i.text + "\n";
    return out;
}

std::string hypothesis_text(const Hypothesis& h) {
    return "Hypothesis: " + h.hypothesis + "\nRationale: " + h.rationale + "\nObjectives: " + h.objectives +
           "\nExpected insights: " + h.expected_insights + "\nRisks: " + h.risks_limitations +
           "\nNext steps: " + h.experimentation_ideas + "\n";
}

std::string taxonomy_list(const Taxonomy& t) {
    std::string out;
    for (const auto& c : t.categories) out += (out.empty() ? "" : ", ") + c;
    return out;
}

}  // namespace

GeneratorOutcome LlmGenerator::propose(const GenerationContext& context, Rng&, const BacktestCheck& check) {
    GeneratorOutcome out;
    out.operator_name = "llm";
    std::map<std::string, std::string> values = {
        {"parent", describe_record(context.parent)},
        {"parent_program", context.parent.program},
        {"cousins", join_cousins(context.cousins)},
        {"insights", join_insights(context.insights)},
        {"data_schema", context.data_schema},
        {"dsl_reference", dsl_reference()},
        {"taxonomy", taxonomy_list(context.taxonomy)},
        {"parse_error", ""},
    };

    // hypothesis, with a bounded number of format re-prompts
    std::string reply = ask(render_template(templates_.research, values), out.transcripts);
    Hypothesis h = parse_hypothesis_tags(reply);
    for (int fix = 0; !h.complete(); ++fix) {
        std::string missing;
        for (const auto& f : h.missing_fields()) missing += (missing.empty() ? "" : ", ") + f;
        if (fix >= config_.hypothesis_repairs)
            throw MalformedHypothesis("hypothesis reply is missing: " + missing);
        values["parse_error"] = "missing or empty tags: " + missing;
        reply = ask(render_template(templates_.hypothesis_fix, values), out.transcripts);
        h = parse_hypothesis_tags(reply);
    }
    out.hypothesis = h;
    values["hypothesis"] = hypothesis_text(h);

    ParseOptions loose = context.parse_options;
    loose.taxonomy = nullptr;
    ParseOptions strict = context.parse_options;
    strict.taxonomy = &context.taxonomy;

    std::string text = extract_program_text(ask(render_template(templates_.coding, values), out.transcripts));
    for (int attempt = 0;; ++attempt) {
        std::string problem;
        try {
            Program p = parse_program(text, loose);
            const bool foreign = std::any_of(p.tags.begin(), p.tags.end(),
                                             [&](const std::string& t) { return !context.taxonomy.contains(t); });
            if (foreign) p.tags = derive_tags(p, context.category_table, context.taxonomy);
            validate_program(p, strict);
            if (check) {
                if (auto err = check(p)) problem = "backtest error: " + *err;
            }
            if (problem.empty()) {
                out.program = std::move(p);
                out.repair_attempts = attempt;
                return out;
            }
        } catch (const SyntaxError& e) {
            problem = std::string("syntax error at line:column ") + e.what();
        } catch (const ProgramError& e) {
            problem = e.what();
        }
        if (attempt >= config_.repair_budget)
            throw GenerationFailure(fmt::format("no valid program after {} repairs: {}", attempt, problem));
        values["program"] = text;
        values["parse_error"] = problem;
        text = extract_program_text(ask(render_template(templates_.repair, values), out.transcripts));
    }
}

AnalysisResult LlmGenerator::analyze(const CandidateRecord& candidate, const CandidateRecord* parent) {
    AnalysisResult fallback = template_analysis(candidate, parent);
    std::map<std::string, std::string> values = {
        {"hypothesis", hypothesis_text(candidate.hypothesis)},
        {"program", candidate.program},
        {"candidate", describe_record(candidate)},
        {"parent", parent ? describe_record(*parent) : std::string("(none)")},
    };
    std::vector<std::string> transcripts;
    try {
        std::string reply = ask(render_template(templates_.analysis, values), transcripts);
        const auto a = reply.find('{');
        const auto b = reply.rfind('}');
        if (a == std::string::npos || b == std::string::npos || b < a) throw EndpointError("no JSON object in reply");
        auto j = nlohmann::json::parse(reply.substr(a, b - a + 1));
        AnalysisResult out;
        out.analysis.mode = "llm";
        out.analysis.verdict = fallback.analysis.verdict;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (it.value().is_number())
                out.analysis.scores[it.key()] = it.value().get<double>();
            else if (it.value().is_string())
                out.analysis.reasoning[it.key()] = it.value().get<std::string>();
            else
                out.analysis.reasoning[it.key()] = it.value().dump();
        }
        out.analysis.summary = out.analysis.reasoning.count("reasoning") ? out.analysis.reasoning["reasoning"]
                                                                         : fallback.analysis.summary;
        out.analysis.insight = out.analysis.reasoning.count("insight") ? out.analysis.reasoning["insight"]
                                                                       : fallback.analysis.insight;
        out.insight_text = out.analysis.insight;
        return out;
    } catch (const EndpointError&) {
    } catch (const nlohmann::json::exception&) {
    }
    return fallback;
}

std::optional<std::string> LlmGenerator::consolidate(const std::vector<Insight>& insights) {
    std::vector<std::string> transcripts;
    try {
        std::string reply = ask(render_template(templates_.consolidate, {{"insights", join_insights(insights)}}),
                                transcripts);
        if (reply.find_first_not_of(" \t\r\n") == std::string::npos) return std::nullopt;
        return reply;
    } catch (const EndpointError&) {
        return std::nullopt;
    }
}

}  // namespace qevo
