#include "cli.hpp"

#include "qevo/baselines.hpp"
#include "qevo/config.hpp"
#include "qevo/error.hpp"
#include "qevo/json_io.hpp"
#include "qevo/orchestrator.hpp"
#include "qevo/synthetic.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace qevo::cli {

namespace fs = std::filesystem;

std::atomic<bool>& stop_flag() {
    static std::atomic<bool> flag{false};
    return flag;
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : std::string("n/a"); }

void print_metric_header(std::ostream& out) {
    fmt::print(out, "{:<16} {:>9} {:>9} {:>9} {:>9} {:>9} {:>8} {:>9}\n", "strategy", "SR", "SOR", "IR", "MDD", "CR",
               "trades", "score");
}

void print_metric_row(std::ostream& out, const std::string& name, const MetricSet& m) {
    const double score = ranking_score(m);
    fmt::print(out, "{:<16} {:>9} {:>9} {:>9} {:>9.4f} {:>9.4f} {:>8} {:>9}\n", name, cell(m.sharpe), cell(m.sortino),
               cell(m.information_ratio), m.max_drawdown, m.cumulative_return, m.num_transactions,
               std::isfinite(score) ? fmt::format("{:.4f}", score) : std::string("invalid"));
}

DatasetView pick_split(const SplitViews& views, const std::string& split) {
    if (split == "train") return views.train;
    if (split == "valid") return views.valid;
    if (split == "test") return views.test;
    throw ConfigError("--split", "expected train|valid|test");
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void ensure_run_dir(LoadedConfig& cfg) {
    if (cfg.run.run_dir.empty())
        cfg.run.run_dir = cfg.source.parent_path() / "runs" / cfg.source.stem();
}

int cmd_evolve(const std::string& config_path, const std::string& resume, std::ostream& out, std::ostream& err) {
    auto cfg = load_config(config_path);
    ensure_run_dir(cfg);
    const auto views = split_periods(load_universe(cfg), cfg.split);
    RunHooks hooks;
    hooks.stop = [] { return stop_flag().load(); };
    hooks.on_generation = [&out](const GenerationStats& s) {
        fmt::print(out, "gen {:>4}  candidates {:>6}  cells {:>5}  coverage {:.6f}  best {}\n", s.generation,
                   s.candidates, s.stats.filled_cells, s.stats.coverage, cell(s.stats.best_score));
        out.flush();
    };
    const auto state = resume.empty() ? run_evolution(cfg.run, views.train, hooks)
                                      : resume_evolution(cfg.run, views.train, resume, hooks);
    if (state.interrupted) {
        fmt::print(err, "interrupted after generation {}; resume with --resume {}\n", state.generation,
                   (cfg.run.run_dir / "checkpoints" / fmt::format("gen_{:04d}", state.generation)).string());
        return interrupted;
    }
    fmt::print(out, "done: {} generations, {} candidates, run directory {}\n", state.generation, state.db.size(),
               cfg.run.run_dir.string());
    return ok;
}

int cmd_backtest(const std::string& config_path, const std::string& program_arg, const std::string& split,
                 bool zero_cost, bool baselines, const std::string& out_csv, std::ostream& out) {
    auto cfg = load_config(config_path);
    if (zero_cost) cfg.run.cost = CostModel::zero();
    const auto views = split_periods(load_universe(cfg), cfg.split);
    const auto view = pick_split(views, split);
    const auto options = backtest_options(cfg.run, view);

    if (baselines) {
        print_metric_header(out);
        for (auto kind : all_baselines) {
            const auto name = std::string(to_string(kind));
            try {
                const auto report = run_backtest(builtin_baseline(kind, cfg.run.share_counts), view, options);
                print_metric_row(out, name, report.metrics);
            } catch (const Error& e) {
                fmt::print(out, "{:<16} failed: {}\n", name, e.what());
            }
        }
        return ok;
    }

    if (program_arg.empty()) throw ConfigError("--program", "is required unless --baselines is given");
    Program program;
    std::string name = program_arg;
    if (program_arg.starts_with("builtin:")) {
        name = program_arg.substr(8);
        const auto kind = baseline_from_string(name);
        if (!kind) throw ConfigError("--program", "unknown builtin " + name);
        program = builtin_baseline(*kind, cfg.run.share_counts);
    } else {
        ParseOptions opts;
        opts.bounds = cfg.run.param_bounds;
        opts.max_indicators = cfg.run.max_indicators;
        opts.max_rule_nodes = cfg.run.max_rule_nodes;
        program = parse_program(read_file(program_arg), opts);
        name = program.name;
    }
    const auto report = run_backtest(program, view, options);
    print_metric_header(out);
    print_metric_row(out, name, report.metrics);
    if (!out_csv.empty()) {
        write_equity_csv(report, out_csv);
        fmt::print(out, "equity curve written to {}\n", out_csv);
    }
    return ok;
}

int cmd_inspect(const std::string& db_path, const std::string& dims, const std::string& color,
                const std::string& out_csv, std::ostream& out) {
    const auto comma = dims.find(',');
    if (comma == std::string::npos) throw ConfigError("--dims", "expected two names separated by a comma");
    EvolutionState state;
    if (fs::exists(fs::path(db_path) / "manifest.json") || latest_checkpoint(db_path)) {
        state = load_run(db_path);
    } else if (fs::is_directory(db_path)) {
        state.db = EvolutionaryDatabase(FeatureSpace::defaults(Taxonomy::equities_default()));
    } else {
        throw ConfigError("--db", "no run directory at " + db_path);
    }
    const auto projection = export_projection(state.db, dims.substr(0, comma), dims.substr(comma + 1), color);
    std::ofstream file(out_csv);
    if (!file) throw Error("cannot write " + out_csv);
    write_projection_csv(projection, file);

    std::map<int, std::vector<CandidateId>> pops;
    for (const auto& isl : state.islands) pops[isl.id] = isl.population;
    const auto stats = map_stats(state.db, pops);
    fmt::print(out, "generation {}\ncandidates {}\nfilled cells {}\ncoverage {:.6f}\n", state.generation,
               state.db.size(), stats.filled_cells, stats.coverage);
    if (stats.best_id) {
        const auto& best = state.db.get(*stats.best_id);
        fmt::print(out, "best candidate {} score {:.4f} cell {}\n", best.id, best.score(),
                   best.feature_vector ? to_string(*best.feature_vector) : std::string("-"));
    }
    for (const auto& isl : state.islands)
        fmt::print(out, "island {} ({}): members {} cells {}\n", isl.id, isl.seed_category, isl.population.size(),
                   stats.island_cells.count(isl.id) ? stats.island_cells.at(isl.id) : 0);
    fmt::print(out, "projection written to {}\n", out_csv);
    return ok;
}

int cmd_select(const std::string& db_path, const std::string& config_path, const std::string& out_json,
               std::ostream& out) {
    const auto cfg = load_config(config_path);
    if (!std::filesystem::is_directory(db_path)) throw Error("run directory not found: " + db_path);
    const auto state = load_run(db_path);
    const auto views = split_periods(load_universe(cfg), cfg.split);
    const auto sel = select_best_on_validation(state.db, cfg.run, views.valid, views.test);
    fmt::print(out, "selected candidate {} (generation {}, island {})\n", sel.record.id, sel.record.generation,
               sel.record.island_id);
    print_metric_header(out);
    print_metric_row(out, "train", sel.record.metrics);
    print_metric_row(out, "valid", sel.valid_report.metrics);
    print_metric_row(out, "test", sel.test_report.metrics);
    out << sel.record.program;
    if (!out_json.empty()) {
        Json j;
        j["candidate"] = to_json(sel.record);
        j["valid"] = report_summary_json(sel.valid_report);
        j["test"] = report_summary_json(sel.test_report);
        std::ofstream f(out_json);
        if (!f) throw Error("cannot write " + out_json);
        f << j.dump(2) << '\n';
    }
    return ok;
}

int cmd_synth(const std::string& data_dir, const std::string& config_out, std::uint64_t seed, std::ostream& out) {
    auto spec = SyntheticSpec::three_asset_default();
    spec.seed = seed;
    const auto series = generate_synthetic(spec);
    fs::create_directories(data_dir);
    const auto config_path = fs::absolute(config_out);
    fs::create_directories(config_path.parent_path());
    const double shares[] = {5e8, 3e8, 1e9};
    Json assets = Json::array();
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto csv = fs::absolute(fs::path(data_dir) / (series[i].symbol + ".csv"));
        save_ohlcv_csv(series[i], csv);
        assets.push_back(Json{{"symbol", series[i].symbol},
                              {"path", fs::relative(csv, config_path.parent_path()).generic_string()},
                              {"asset_class", "equity"},
                              {"shares", shares[i % 3]}});
    }
    Json cfg;
    cfg["assets"] = assets;
    cfg["split"] = Json{{"train", {"2014-01-01", "2018-12-31"}},
                        {"valid", {"2019-01-01", "2020-12-31"}},
                        {"test", {"2021-01-01", "2023-12-31"}}};
    cfg["taxonomy"] = {"momentum_trend", "mean_reversion", "volatility"};
    cfg["features"] = Json{{"bins", 16}, {"use_category", true}};
    cfg["evolution"] = Json{{"generations", 30},
                            {"migration_interval", 10},
                            {"insight_interval", 15},
                            {"master_seed", 42}};
    cfg["generator"] = Json{{"kind", "mutational"}};
    cfg["run_dir"] = "../runs/synthetic";
    std::ofstream f(config_path);
    if (!f) throw Error("cannot write " + config_path.string());
    f << cfg.dump(2) << '\n';
    fmt::print(out, "wrote {} series to {} and config {}\n", series.size(), data_dir, config_path.string());
    return ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quality-diversity evolution of rule-based trading strategies", "qevo"};
    app.require_subcommand(1);

    std::string config, resume, program, split = "test", out_path, db, dims, color = "score", data_dir,
                                         config_out;
    bool zero_cost = false, baselines = false;
    std::uint64_t seed = 7;

    auto* evolve = app.add_subcommand("evolve", "Run or resume an evolution");
    evolve->add_option("--config", config, "Run configuration (JSON)")->required();
    evolve->add_option("--resume", resume, "Checkpoint directory to continue from");

    auto* backtest = app.add_subcommand("backtest", "Backtest a program or the baseline suite");
    backtest->add_option("--config", config, "Run configuration (JSON)")->required();
    backtest->add_option("--program", program, "Program file or builtin:<name>");
    backtest->add_option("--split", split, "train|valid|test")->check(CLI::IsMember({"train", "valid", "test"}));
    backtest->add_flag("--zero-cost", zero_cost, "Disable commission, slippage and volume caps");
    backtest->add_flag("--baselines", baselines, "Run every built-in baseline");
    backtest->add_option("--out", out_path, "Equity CSV output path");

    auto* inspect = app.add_subcommand("inspect-map", "Export a 2-D projection of the feature map");
    inspect->add_option("--db", db, "Run or checkpoint directory")->required();
    inspect->add_option("--dims", dims, "Two dimension names, e.g. category,max_drawdown")->required();
    inspect->add_option("--color", color, "Metric to project");
    inspect->add_option("--out", out_path, "CSV output path")->required();

    auto* select = app.add_subcommand("select", "Pick the best cell occupant on the validation period");
    select->add_option("--db", db, "Run or checkpoint directory")->required();
    select->add_option("--config", config, "Run configuration (JSON)")->required();
    select->add_option("--out", out_path, "JSON report output path");

    auto* synth = app.add_subcommand("synth", "Write the synthetic three-asset universe and its config");
    synth->add_option("--data-dir", data_dir, "Directory for the CSV files")->required();
    synth->add_option("--config-out", config_out, "Path of the config file to write")->required();
    synth->add_option("--seed", seed, "Generator seed");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : input_error;
    }

    try {
        if (*evolve) return cmd_evolve(config, resume, out, err);
        if (*backtest) return cmd_backtest(config, program, split, zero_cost, baselines, out_path, out);
        if (*inspect) return cmd_inspect(db, dims, color, out_path, out);
        if (*select) return cmd_select(db, config, out_path, out);
        if (*synth) return cmd_synth(data_dir, config_out, seed, out);
    } catch (const ConfigMismatch& e) {
        fmt::print(err, "error: ConfigMismatch: {}\n", e.what());
        return runtime_error;
    } catch (const CorruptCheckpoint& e) {
        fmt::print(err, "error: CorruptCheckpoint: {}\n", e.what());
        return runtime_error;
    } catch (const SeedBacktestFailure& e) {
        fmt::print(err, "error: SeedBacktestFailure: {}\n", e.what());
        return runtime_error;
    } catch (const ConfigError& e) {
        fmt::print(err, "error: config {}\n", e.what());
        return input_error;
    } catch (const SyntaxError& e) {
        fmt::print(err, "error: parse error at {}\n", e.what());
        return input_error;
    } catch (const UnknownDimension& e) {
        fmt::print(err, "error: {}\n", e.what());
        return input_error;
    } catch (const NoValidCandidate& e) {
        fmt::print(err, "error: NoValidCandidate: {}\n", e.what());
        return runtime_error;
    } catch (const Error& e) {
        fmt::print(err, "error: {}\n", e.what());
        return *evolve ? runtime_error : input_error;
    } catch (const std::exception& e) {
        fmt::print(err, "fatal: {}\n", e.what());
        return runtime_error;
    }
    return input_error;
}

}  // namespace qevo::cli
