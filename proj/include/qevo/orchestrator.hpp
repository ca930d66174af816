#pragma once

#include "qevo/backtester.hpp"
#include "qevo/database.hpp"
#include "qevo/generators.hpp"
#include "qevo/islands.hpp"
#include "qevo/llm.hpp"
#include "qevo/market_data.hpp"
#include "qevo/sampling.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace qevo {

enum class GeneratorKind { mutational, llm };

/// Benchmark for the information ratio: the equal-notional buy-and-hold
/// average, or one of the built-in baselines by name.
struct BenchmarkSpec {
    std::string kind = "average_buy_hold";

    bool operator==(const BenchmarkSpec&) const = default;
};

struct RunConfig {
    Taxonomy taxonomy = Taxonomy::equities_default();
    CategoryTable category_table = CategoryTable::defaults();
    FeatureSpace features = FeatureSpace::defaults(Taxonomy::equities_default());
    int generations = 150;
    int migration_interval = 10;
    int insight_interval = 50;
    double migration_fraction = 0.10;
    std::size_t insight_max = 200;
    SamplingConfig sampling;
    CostModel cost;
    ExecutionConfig execution;
    double initial_capital = 1'000'000.0;
    BenchmarkSpec benchmark;
    /// Share counts for market-cap weighting (benchmark and baseline).
    std::vector<std::pair<std::string, double>> share_counts;
    ParamBounds param_bounds;
    std::size_t max_indicators = 12;
    std::size_t max_rule_nodes = 64;
    GeneratorKind generator = GeneratorKind::mutational;
    EndpointConfig endpoint;
    LlmConfig llm;
    std::filesystem::path prompts_dir;
    std::uint64_t master_seed = 42;
    /// Where logs and checkpoints go; empty keeps everything in memory.
    std::filesystem::path run_dir;
    /// Propose candidates for all islands concurrently against the
    /// generation-start database, then insert in island order.
    bool parallel = false;

    /// Throws ConfigError naming the offending key.
    void validate() const;
};

/// Hash of every setting that changes the evolved database (generation
/// count, run directory and parallelism are excluded), plus the training
/// data.
std::string config_hash(const RunConfig& config, const DatasetView& train);

/// Benchmark daily returns for a view.
std::vector<double> benchmark_returns(const RunConfig& config, const DatasetView& view);

/// Backtest options for a view, with its benchmark filled in.
BacktestOptions backtest_options(const RunConfig& config, const DatasetView& view);

/// Text describing the universe to a generator.
std::string data_schema_prompt(const DatasetView& view);

struct GenerationStats {
    int generation = 0;
    MapStats stats;
    std::vector<std::optional<double>> island_best;  // by island id
    std::size_t candidates = 0;
};

struct EvolutionState {
    int generation = 0;  // last completed generation (0 = seeds only)
    EvolutionaryDatabase db;
    std::vector<Island> islands;
    std::vector<Rng> island_rngs;
    /// Lines of events.jsonl, header first.
    std::vector<std::string> events;
    bool interrupted = false;
};

struct RunHooks {
    /// Polled before each generation; true stops the run after the last
    /// completed checkpoint.
    std::function<bool()> stop;
    std::function<void(const GenerationStats&)> on_generation;
    /// Overrides the generator built from the config (tests, custom agents).
    std::shared_ptr<Generator> generator;
};

/// Builds the configured generator.
std::shared_ptr<Generator> make_generator(const RunConfig& config);

/// Seeds the islands and runs generations 1..G on the training view only.
EvolutionState run_evolution(const RunConfig& config, const DatasetView& train, const RunHooks& hooks = {});

/// Continues from a checkpoint directory (run_dir/checkpoints/gen_NNNN).
/// Throws CorruptCheckpoint or ConfigMismatch.
EvolutionState resume_evolution(const RunConfig& config, const DatasetView& train,
                                const std::filesystem::path& checkpoint_dir, const RunHooks& hooks = {});

/// Writes run_dir/checkpoints/gen_NNNN/{manifest.json, cells.json}.
std::filesystem::path checkpoint_save(const EvolutionState& state, const RunConfig& config,
                                      const DatasetView& train);

/// Restores database, islands, insight repositories and random streams.
/// `expected_hash` (when given) must match the manifest or ConfigMismatch
/// is thrown.
EvolutionState checkpoint_load(const std::filesystem::path& checkpoint_dir,
                               const std::optional<std::string>& expected_hash = std::nullopt);

/// Newest checkpoint directory under a run directory, if any.
std::optional<std::filesystem::path> latest_checkpoint(const std::filesystem::path& run_dir);

/// Loads a database from a run directory or checkpoint directory.
EvolutionState load_run(const std::filesystem::path& path);

struct Selection {
    CandidateRecord record;
    BacktestReport valid_report;
    BacktestReport test_report;
    double valid_score = 0.0;
};

/// Re-backtests every cell occupant on the validation view and returns the
/// best by combined score (ties: earlier generation, then lower id), with
/// its test report. Throws NoValidCandidate.
Selection select_best_on_validation(const EvolutionaryDatabase& db, const RunConfig& config,
                                    const DatasetView& valid, const DatasetView& test);

/// SHA-256 over the candidate log lines and the cell index; equal for
/// byte-identical databases.
std::string database_digest(const EvolutionaryDatabase& db);

}  // namespace qevo
