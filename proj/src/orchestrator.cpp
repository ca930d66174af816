#include "qevo/orchestrator.hpp"

#include "qevo/baselines.hpp"
#include "qevo/error.hpp"
#include "qevo/hash.hpp"
#include "qevo/json_io.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <sstream>

namespace qevo {

namespace fs = std::filesystem;

namespace {

constexpr const char* candidates_file = "candidates.jsonl";
constexpr const char* events_file = "events.jsonl";

Json config_fingerprint(const RunConfig& c) {
    Json j;
    j["taxonomy"] = c.taxonomy.categories;
    j["category_table"] = Json::object();
    for (const auto& [k, v] : c.category_table.entries) j["category_table"][k] = v;
    j["features"] = to_json(c.features);
    j["migration_interval"] = c.migration_interval;
    j["insight_interval"] = c.insight_interval;
    j["migration_fraction"] = c.migration_fraction;
    j["insight_max"] = c.insight_max;
    const auto& s = c.sampling;
    j["sampling"] = Json{{"alpha", s.alpha},
                         {"sigma_d", s.sigma_d},
                         {"k_bf", s.k_bf ? Json(*s.k_bf) : Json(nullptr)},
                         {"best", s.best_count},
                         {"diverse", s.diverse_count},
                         {"random", s.random_count},
                         {"attempts_per_diverse", s.attempts_per_diverse}};
    const auto& k = c.cost;
    j["cost"] = Json{{"per_share_cost", k.per_share_cost},
                     {"min_trade_cost", k.min_trade_cost},
                     {"slippage_impact", k.slippage_impact},
                     {"volume_limit", k.volume_limit},
                     {"cap_by_volume", k.cap_by_volume},
                     {"commission_mode", static_cast<int>(k.commission_mode)},
                     {"commission_rate", k.commission_rate}};
    j["execution"] = Json{{"fill_mode", static_cast<int>(c.execution.fill_mode)},
                          {"whole_units", c.execution.whole_units},
                          {"allow_short", c.execution.allow_short}};
    j["initial_capital"] = c.initial_capital;
    j["benchmark"] = c.benchmark.kind;
    j["share_counts"] = Json::array();
    for (const auto& [sym, n] : c.share_counts) j["share_counts"].push_back(Json{sym, n});
    j["param_bounds"] = Json{c.param_bounds.min_lookback, c.param_bounds.max_lookback};
    j["max_indicators"] = c.max_indicators;
    j["max_rule_nodes"] = c.max_rule_nodes;
    j["generator"] = c.generator == GeneratorKind::llm ? "llm" : "mutational";
    if (c.generator == GeneratorKind::llm) {
        j["model"] = c.endpoint.model;
        j["temperature"] = c.endpoint.temperature;
        j["repair_budget"] = c.llm.repair_budget;
        j["hypothesis_repairs"] = c.llm.hypothesis_repairs;
        auto templates = c.prompts_dir.empty() ? PromptTemplates::defaults() : PromptTemplates::load(c.prompts_dir);
        j["prompts"] = Json::object();
        for (const auto& [name, text] : templates.entries()) j["prompts"][name] = sha256_hex(text);
    }
    j["master_seed"] = c.master_seed;
    return j;
}

std::string data_fingerprint(const DatasetView& view) {
    std::string text;
    for (std::size_t a = 0; a < view.num_assets(); ++a) {
        text += view.symbol(a);
        text += '\n';
        for (std::size_t t = 0; t < view.size(); ++t) {
            const auto& b = view.bar(a, t);
            text += fmt::format("{} {} {} {} {} {}\n", format_date(b.date), b.open, b.high, b.low, b.close, b.volume);
        }
    }
    return sha256_hex(text);
}

std::string record_line(const CandidateRecord& r) { return to_json(r).dump(); }

Json cells_json(const EvolutionaryDatabase& db) {
    Json cells = Json::array();
    for (const auto& [fv, id] : db.cells()) cells.push_back(Json{{"vector", to_json(fv)}, {"id", id}});
    return cells;
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw CorruptCheckpoint("cannot read " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::string lines_hash(const std::vector<std::string>& lines, std::size_t count) {
    std::string text;
    for (std::size_t i = 0; i < count; ++i) {
        text += lines[i];
        text += '\n';
    }
    return sha256_hex(text);
}

Json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw CorruptCheckpoint("cannot read " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw CorruptCheckpoint(path.string() + ": " + e.what());
    }
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed: " + path.string());
}

std::string checkpoint_name(int generation) { return fmt::format("gen_{:04d}", generation); }

/// Candidate and event logs of a run directory; a no-op without one.
class RunLog {
public:
    RunLog(fs::path run_dir, const std::vector<std::string>& candidate_lines,
           const std::vector<std::string>& event_lines)
        : dir_(std::move(run_dir)) {
        if (dir_.empty()) return;
        fs::create_directories(dir_);
        candidates_.open(dir_ / candidates_file, std::ios::binary | std::ios::trunc);
        events_.open(dir_ / events_file, std::ios::binary | std::ios::trunc);
        if (!candidates_ || !events_) throw Error("cannot open logs in " + dir_.string());
        for (const auto& l : candidate_lines) candidates_ << l << '\n';
        for (const auto& l : event_lines) events_ << l << '\n';
        flush();
    }

    void candidate(const std::string& line) {
        if (dir_.empty()) return;
        candidates_ << line << '\n';
    }
    void event(const std::string& line) {
        if (dir_.empty()) return;
        events_ << line << '\n';
    }
    void flush() {
        if (dir_.empty()) return;
        candidates_.flush();
        events_.flush();
        if (!candidates_ || !events_) throw Error("write failed in " + dir_.string());
    }

private:
    fs::path dir_;
    std::ofstream candidates_;
    std::ofstream events_;
};

struct Proposal {
    int island = 0;
    std::optional<CandidateRecord> record;
    std::optional<std::string> insight_text;
    std::string failure;  // generation failure message when no record
};

class Engine {
public:
    Engine(const RunConfig& config, const DatasetView& train, std::shared_ptr<Generator> generator)
        : config_(config), train_(train), generator_(std::move(generator)),
          options_(backtest_options(config, train)), schema_(data_schema_prompt(train)) {
        parse_options_.bounds = config.param_bounds;
        parse_options_.max_indicators = config.max_indicators;
        parse_options_.max_rule_nodes = config.max_rule_nodes;
    }

    void emit(EvolutionState& state, RunLog& log, const Json& event) {
        auto line = event.dump();
        log.event(line);
        state.events.push_back(std::move(line));
    }

    Proposal propose(const EvolutionState& state, const Island& island, Rng& rng, int generation) const {
        Proposal out;
        out.island = island.id;
        const auto& db = state.db;
        const CandidateId parent_id = sample_parent(island, db, config_.sampling, rng);
        const auto cousins = sample_cousins(parent_id, island, db, config_.sampling, rng);

        GenerationContext ctx;
        ctx.parent = db.get(parent_id);
        for (auto id : cousins.all) ctx.cousins.push_back(db.get(id));
        ctx.insights = island.insights;
        ctx.data_schema = schema_;
        ctx.taxonomy = config_.taxonomy;
        ctx.category_table = config_.category_table;
        ctx.parse_options = parse_options_;
        ctx.island_id = island.id;
        ctx.generation = generation;

        const BacktestCheck check = [this](const Program& p) -> std::optional<std::string> {
            try {
                run_backtest(p, train_, options_);
                return std::nullopt;
            } catch (const Error& e) {
                return std::string(e.what());
            }
        };

        GeneratorOutcome outcome;
        try {
            outcome = generator_->propose(ctx, rng, check);
        } catch (const GenerationFailure& e) {
            out.failure = e.what();
            return out;
        } catch (const EndpointError& e) {
            out.failure = std::string("endpoint: ") + e.what();
            return out;
        }

        const auto ev = evaluate_program(outcome.program, train_, options_, config_.features);
        CandidateRecord r;
        r.island_id = island.id;
        r.generation = generation;
        r.hypothesis = outcome.hypothesis;
        r.program = serialize_program(outcome.program);
        r.tags = outcome.program.tags;
        r.metrics = ev.metrics;
        r.failure = ev.failure;
        r.feature_vector = ev.feature_vector;
        r.parent_id = parent_id;
        r.cousin_ids = cousins.all;
        r.repair_attempts = outcome.repair_attempts;
        r.transcripts = std::move(outcome.transcripts);
        auto analysis = generator_->analyze(r, &ctx.parent);
        r.analysis = std::move(analysis.analysis);
        out.insight_text = std::move(analysis.insight_text);
        out.record = std::move(r);
        return out;
    }

    void commit(EvolutionState& state, RunLog& log, Proposal proposal, int generation) {
        auto& island = state.islands[static_cast<std::size_t>(proposal.island)];
        if (!proposal.record) {
            emit(state, log,
                 Json{{"type", "generation_failure"},
                      {"generation", generation},
                      {"island", proposal.island},
                      {"message", proposal.failure}});
            return;
        }
        auto& record = *proposal.record;
        const double score = record.score();
        const auto fv = record.feature_vector;
        const auto result = state.db.insert(record);
        log.candidate(record_line(state.db.get(result.id)));
        island.add_member(result.id);
        if (proposal.insight_text && !proposal.insight_text->empty())
            island.insights.push_back(make_insight(island.id, generation, *proposal.insight_text, result.id));
        const char* status = result.status == InsertResult::Status::accepted   ? "accepted"
                             : result.status == InsertResult::Status::rejected ? "rejected"
                                                                                : "archived_only";
        Json e{{"type", "candidate"},
               {"generation", generation},
               {"island", island.id},
               {"candidate_id", result.id},
               {"status", status},
               {"score", std::isfinite(score) ? Json(score) : Json(nullptr)},
               {"cell", fv ? Json(to_string(*fv)) : Json(nullptr)},
               {"replaced", result.replaced ? Json(*result.replaced) : Json(nullptr)}};
        if (!record.failure.empty()) e["failure"] = record.failure;
        emit(state, log, e);
    }

    GenerationStats stats(const EvolutionState& state, int generation) const {
        GenerationStats s;
        s.generation = generation;
        std::map<int, std::vector<CandidateId>> pops;
        for (const auto& isl : state.islands) pops[isl.id] = isl.population;
        s.stats = map_stats(state.db, pops);
        for (const auto& isl : state.islands) {
            std::optional<double> best;
            for (auto id : isl.population) {
                const double v = state.db.get(id).score();
                if (std::isfinite(v) && (!best || v > *best)) best = v;
            }
            s.island_best.push_back(best);
        }
        s.candidates = state.db.size();
        return s;
    }

    void emit_stats(EvolutionState& state, RunLog& log, const GenerationStats& s) {
        Json best = Json::array();
        for (const auto& b : s.island_best) best.push_back(b ? Json(*b) : Json(nullptr));
        emit(state, log,
             Json{{"type", "generation"},
                  {"generation", s.generation},
                  {"candidates", s.candidates},
                  {"filled_cells", s.stats.filled_cells},
                  {"coverage", s.stats.coverage},
                  {"best_score", s.stats.best_score ? Json(*s.stats.best_score) : Json(nullptr)},
                  {"best_id", s.stats.best_id ? Json(*s.stats.best_id) : Json(nullptr)},
                  {"qd_sum", s.stats.qd_sum},
                  {"island_best", best}});
    }

    void run_generation(EvolutionState& state, RunLog& log, int g) {
        if (config_.parallel) {
            std::vector<std::future<Proposal>> futures;
            for (std::size_t i = 0; i < state.islands.size(); ++i)
                futures.push_back(std::async(std::launch::async, [this, &state, i, g] {
                    return propose(state, state.islands[i], state.island_rngs[i], g);
                }));
            std::vector<Proposal> proposals;
            for (auto& f : futures) proposals.push_back(f.get());
            for (auto& p : proposals) commit(state, log, std::move(p), g);
        } else {
            for (std::size_t i = 0; i < state.islands.size(); ++i)
                commit(state, log, propose(state, state.islands[i], state.island_rngs[i], g), g);
        }

        if (g % config_.migration_interval == 0) {
            for (const auto& m : migrate(state.islands, state.db, config_.migration_fraction, g)) {
                auto e = to_json(m);
                e["type"] = "migration";
                emit(state, log, e);
            }
        }
        if (g % config_.insight_interval == 0) {
            for (auto& isl : state.islands) {
                const auto before = isl.insights.size();
                auto summary = generator_->consolidate(isl.insights);
                isl.insights = curate_insights(std::move(isl.insights), config_.insight_max, summary, isl.id, g);
                emit(state, log,
                     Json{{"type", "curation"},
                          {"generation", g},
                          {"island", isl.id},
                          {"before", before},
                          {"after", isl.insights.size()},
                          {"consolidated", summary.has_value()}});
            }
        }
    }

    void loop(EvolutionState& state, RunLog& log, const RunHooks& hooks) {
        while (state.generation < config_.generations) {
            if (hooks.stop && hooks.stop()) {
                state.interrupted = true;
                break;
            }
            const int g = state.generation + 1;
            run_generation(state, log, g);
            state.generation = g;
            const auto s = stats(state, g);
            emit_stats(state, log, s);
            log.flush();
            if (!config_.run_dir.empty()) checkpoint_save(state, config_, train_);
            if (hooks.on_generation) hooks.on_generation(s);
        }
    }

    const BacktestOptions& options() const noexcept { return options_; }

private:
    const RunConfig& config_;
    DatasetView train_;
    std::shared_ptr<Generator> generator_;
    BacktestOptions options_;
    std::string schema_;
    ParseOptions parse_options_;
};

std::vector<std::string> archive_lines(const EvolutionaryDatabase& db) {
    std::vector<std::string> lines;
    lines.reserve(db.size());
    for (const auto& r : db.archive()) lines.push_back(record_line(r));
    return lines;
}

}  // namespace

void RunConfig::validate() const {
    taxonomy.validate();
    features.validate();
    if (features.use_category && features.taxonomy != taxonomy)
        throw ConfigError("features.taxonomy", "must equal the run taxonomy");
    if (generations < 0) throw ConfigError("generations", "must be >= 0");
    if (migration_interval < 1) throw ConfigError("migration_interval", "must be >= 1");
    if (insight_interval < 1) throw ConfigError("insight_interval", "must be >= 1");
    if (!(migration_fraction > 0.0 && migration_fraction <= 1.0))
        throw ConfigError("migration_fraction", "must be in (0, 1]");
    if (insight_max < 1) throw ConfigError("insight_max", "must be >= 1");
    sampling.validate();
    cost.validate();
    if (!(initial_capital > 0.0) || !std::isfinite(initial_capital))
        throw ConfigError("initial_capital", "must be positive");
    if (benchmark.kind != "average_buy_hold" && !baseline_from_string(benchmark.kind))
        throw ConfigError("benchmark", "unknown benchmark " + benchmark.kind);
    if (param_bounds.min_lookback < 1 || param_bounds.max_lookback < param_bounds.min_lookback)
        throw ConfigError("param_bounds", "need 1 <= min_lookback <= max_lookback");
    if (llm.repair_budget < 0) throw ConfigError("llm.repair_budget", "must be >= 0");
    if (llm.hypothesis_repairs < 0) throw ConfigError("llm.hypothesis_repairs", "must be >= 0");
}

std::string config_hash(const RunConfig& config, const DatasetView& train) {
    Json j;
    j["config"] = config_fingerprint(config);
    j["train"] = data_fingerprint(train);
    return sha256_hex(j.dump());
}

std::vector<double> benchmark_returns(const RunConfig& config, const DatasetView& view) {
    if (config.benchmark.kind == "average_buy_hold") return average_buy_hold_returns(view);
    const auto kind = baseline_from_string(config.benchmark.kind);
    if (!kind) throw ConfigError("benchmark", "unknown benchmark " + config.benchmark.kind);
    BacktestOptions opts;
    opts.cost = config.cost;
    opts.execution = config.execution;
    opts.initial_capital = config.initial_capital;
    opts.benchmark_returns = average_buy_hold_returns(view);
    return run_backtest(builtin_baseline(*kind, config.share_counts), view, opts).returns;
}

BacktestOptions backtest_options(const RunConfig& config, const DatasetView& view) {
    BacktestOptions opts;
    opts.cost = config.cost;
    opts.execution = config.execution;
    opts.initial_capital = config.initial_capital;
    opts.benchmark_returns = benchmark_returns(config, view);
    return opts;
}

std::string data_schema_prompt(const DatasetView& view) {
    std::string out = fmt::format("Daily OHLCV bars for {} assets over {} trading days", view.num_assets(), view.size());
    if (!view.empty()) out += fmt::format(" ({} to {})", format_date(view.date(0)), format_date(view.date(view.size() - 1)));
    out += ".\nAssets:";
    for (std::size_t a = 0; a < view.num_assets(); ++a)
        out += fmt::format(" {} ({})", view.symbol(a), to_string(view.asset_class(a)));
    out += "\nPrice fields: open, high, low, close, volume. Calendar fields: month, weekday, day_of_month.\n";
    out += "Rules are evaluated per asset on each day using data up to and including that day.\n";
    return out;
}

std::shared_ptr<Generator> make_generator(const RunConfig& config) {
    if (config.generator == GeneratorKind::mutational) return std::make_shared<MutationalGenerator>();
    auto templates = config.prompts_dir.empty() ? PromptTemplates::defaults() : PromptTemplates::load(config.prompts_dir);
    return std::make_shared<LlmGenerator>(std::make_shared<HttpChatEndpoint>(config.endpoint), std::move(templates),
                                          config.llm);
}

EvolutionState run_evolution(const RunConfig& config, const DatasetView& train, const RunHooks& hooks) {
    config.validate();
    if (train.empty()) throw EmptySplit("training view is empty");
    auto generator = hooks.generator ? hooks.generator : make_generator(config);
    Engine engine(config, train, generator);

    EvolutionState state{0, EvolutionaryDatabase(config.features), {}, {}, {}, false};
    state.islands = init_islands(train, config.taxonomy, engine.options(), state.db);
    for (std::size_t i = 0; i < state.islands.size(); ++i)
        state.island_rngs.push_back(Rng::stream(config.master_seed, i));

    const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    state.events.push_back(Json{{"type", "header"},
                                {"created", fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", now)},
                                {"config_hash", config_hash(config, train)},
                                {"islands", state.islands.size()}}
                               .dump());
    RunLog log(config.run_dir, archive_lines(state.db), state.events);
    for (const auto& r : state.db.archive()) {
        const auto line = Json{{"type", "seed"},
                               {"generation", 0},
                               {"island", r.island_id},
                               {"candidate_id", r.id},
                               {"score", std::isfinite(r.score()) ? Json(r.score()) : Json(nullptr)},
                               {"cell", r.feature_vector ? Json(to_string(*r.feature_vector)) : Json(nullptr)}}
                              .dump();
        log.event(line);
        state.events.push_back(line);
    }
    const auto s0 = engine.stats(state, 0);
    engine.emit_stats(state, log, s0);
    log.flush();
    if (!config.run_dir.empty()) checkpoint_save(state, config, train);
    if (hooks.on_generation) hooks.on_generation(s0);

    engine.loop(state, log, hooks);
    return state;
}

EvolutionState resume_evolution(const RunConfig& config, const DatasetView& train, const fs::path& checkpoint_dir,
                                const RunHooks& hooks) {
    config.validate();
    auto state = checkpoint_load(checkpoint_dir, config_hash(config, train));
    if (state.islands.size() != config.taxonomy.size() + 1)
        throw ConfigMismatch("checkpoint island count does not match the taxonomy");
    auto generator = hooks.generator ? hooks.generator : make_generator(config);
    Engine engine(config, train, generator);
    RunLog log(config.run_dir, archive_lines(state.db), state.events);
    engine.loop(state, log, hooks);
    return state;
}

fs::path checkpoint_save(const EvolutionState& state, const RunConfig& config, const DatasetView& train) {
    if (config.run_dir.empty()) throw ConfigError("run_dir", "checkpoints need a run directory");
    const auto lines = archive_lines(state.db);
    Json m;
    m["format"] = 1;
    m["generation"] = state.generation;
    m["config_hash"] = config_hash(config, train);
    m["features"] = to_json(state.db.space());
    m["candidate_count"] = lines.size();
    m["candidates_sha256"] = lines_hash(lines, lines.size());
    m["event_count"] = state.events.size();
    m["events_sha256"] = lines_hash(state.events, state.events.size());
    m["rng"] = Json::array();
    for (const auto& r : state.island_rngs) m["rng"].push_back(r.state());
    m["islands"] = Json::array();
    for (const auto& isl : state.islands) {
        Json ins = Json::array();
        for (const auto& i : isl.insights) ins.push_back(to_json(i));
        m["islands"].push_back(Json{{"id", isl.id},
                                    {"seed_category", isl.seed_category},
                                    {"population", isl.population},
                                    {"insights", ins}});
    }

    const auto root = config.run_dir / "checkpoints";
    const auto dir = root / checkpoint_name(state.generation);
    const auto tmp = root / (checkpoint_name(state.generation) + ".tmp");
    fs::create_directories(tmp);
    write_text_file(tmp / "manifest.json", m.dump(2) + "\n");
    write_text_file(tmp / "cells.json", cells_json(state.db).dump(2) + "\n");
    fs::remove_all(dir);
    fs::rename(tmp, dir);
    return dir;
}

EvolutionState checkpoint_load(const fs::path& checkpoint_dir, const std::optional<std::string>& expected_hash) {
    const auto m = read_json_file(checkpoint_dir / "manifest.json");
    const auto cells = read_json_file(checkpoint_dir / "cells.json");
    const auto run_dir = fs::absolute(checkpoint_dir).lexically_normal().parent_path().parent_path();
    try {
        if (expected_hash && m.at("config_hash").get<std::string>() != *expected_hash)
            throw ConfigMismatch("configuration differs from the one recorded in " + checkpoint_dir.string());

        const auto lines = read_lines(run_dir / candidates_file);
        const auto count = m.at("candidate_count").get<std::size_t>();
        if (lines.size() < count || lines_hash(lines, count) != m.at("candidates_sha256").get<std::string>())
            throw CorruptCheckpoint("candidate log does not match checkpoint " + checkpoint_dir.string());
        const auto events = read_lines(run_dir / events_file);
        const auto event_count = m.at("event_count").get<std::size_t>();
        if (events.size() < event_count || lines_hash(events, event_count) != m.at("events_sha256").get<std::string>())
            throw CorruptCheckpoint("event log does not match checkpoint " + checkpoint_dir.string());

        EvolutionState state;
        state.generation = m.at("generation").get<int>();
        state.db = EvolutionaryDatabase(feature_space_from_json(m.at("features")));
        for (std::size_t i = 0; i < count; ++i) state.db.insert(record_from_json(Json::parse(lines[i])));
        if (cells_json(state.db) != cells) throw CorruptCheckpoint("cell index does not match the replayed log");
        state.events.assign(events.begin(), events.begin() + static_cast<std::ptrdiff_t>(event_count));
        for (const auto& s : m.at("rng")) {
            Rng r;
            r.set_state(s.get<std::string>());
            state.island_rngs.push_back(r);
        }
        for (const auto& j : m.at("islands")) {
            Island isl;
            isl.id = j.at("id").get<int>();
            isl.seed_category = j.at("seed_category").get<std::string>();
            isl.population = j.at("population").get<std::vector<CandidateId>>();
            for (auto id : isl.population)
                if (id >= state.db.size()) throw CorruptCheckpoint("island member outside the archive");
            for (const auto& i : j.at("insights")) isl.insights.push_back(insight_from_json(i));
            state.islands.push_back(std::move(isl));
        }
        if (state.island_rngs.size() != state.islands.size())
            throw CorruptCheckpoint("random stream count does not match island count");
        return state;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptCheckpoint(checkpoint_dir.string() + ": " + e.what());
    }
}

std::optional<fs::path> latest_checkpoint(const fs::path& run_dir) {
    const auto root = run_dir / "checkpoints";
    if (!fs::is_directory(root)) return std::nullopt;
    std::optional<fs::path> best;
    for (const auto& entry : fs::directory_iterator(root)) {
        const auto name = entry.path().filename().string();
        if (!entry.is_directory() || !name.starts_with("gen_") || name.ends_with(".tmp")) continue;
        if (!fs::exists(entry.path() / "manifest.json")) continue;
        if (!best || name > best->filename().string()) best = entry.path();
    }
    return best;
}

EvolutionState load_run(const fs::path& path) {
    if (fs::exists(path / "manifest.json")) return checkpoint_load(path);
    if (auto latest = latest_checkpoint(path)) return checkpoint_load(*latest);
    throw CorruptCheckpoint("no checkpoint under " + path.string());
}

Selection select_best_on_validation(const EvolutionaryDatabase& db, const RunConfig& config, const DatasetView& valid,
                                    const DatasetView& test) {
    const auto valid_opts = backtest_options(config, valid);
    ParseOptions parse;
    parse.bounds = config.param_bounds;
    parse.max_indicators = config.max_indicators;
    parse.max_rule_nodes = config.max_rule_nodes;

    std::optional<Selection> best;
    for (const auto& [fv, id] : db.cells()) {
        const auto& record = db.get(id);
        BacktestReport report;
        try {
            report = run_backtest(parse_program(record.program, parse), valid, valid_opts);
        } catch (const CandidateFailure&) {
            continue;
        }
        const double score = ranking_score(report.metrics);
        if (!std::isfinite(score)) continue;
        const bool better = !best || score > best->valid_score ||
                            (score == best->valid_score &&
                             (record.generation < best->record.generation ||
                              (record.generation == best->record.generation && record.id < best->record.id)));
        if (better) best = Selection{record, std::move(report), {}, score};
    }
    if (!best) throw NoValidCandidate("no cell occupant produces valid metrics on the validation period");
    best->test_report = run_backtest(parse_program(best->record.program, parse), test, backtest_options(config, test));
    return std::move(*best);
}

std::string database_digest(const EvolutionaryDatabase& db) {
    std::string text;
    for (const auto& line : archive_lines(db)) {
        text += line;
        text += '\n';
    }
    text += cells_json(db).dump();
    return sha256_hex(text);
}

}  // namespace qevo
