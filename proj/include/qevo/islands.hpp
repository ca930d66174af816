#pragma once

#include "qevo/backtester.hpp"
#include "qevo/database.hpp"
#include "qevo/records.hpp"
#include "qevo/taxonomy.hpp"

#include <string>
#include <vector>

namespace qevo {

/// Label of the extra island seeded with buy-and-hold.
inline constexpr const char* buy_and_hold_island = "buy_and_hold";

struct Island {
    int id = 0;
    std::string seed_category;
    /// Member ids in insertion order, duplicate-free.
    std::vector<CandidateId> population;
    /// Oldest first.
    std::vector<Insight> insights;

    /// Appends unless already present; returns whether it was added.
    bool add_member(CandidateId id);
    bool contains(CandidateId id) const;

    bool operator==(const Island&) const = default;
};

struct MigrationEvent {
    int generation = 0;
    int source = 0;
    int destination = 0;
    std::vector<CandidateId> candidate_ids;  // copied ids (already-present ones skipped)

    bool operator==(const MigrationEvent&) const = default;
};

/// Copies each island's top ceil(fraction * |I|) members (finite scores
/// only, ties to the lower id) into both ring neighbors. Migrant lists are
/// taken before any copy happens. Fewer than two islands is a no-op.
std::vector<MigrationEvent> migrate(std::vector<Island>& islands, const EvolutionaryDatabase& db,
                                    double fraction = 0.10, int generation = 0);

/// Runs a program on a view and fills the metric / failure / feature fields
/// of a record. Backtest failures are recorded, not thrown.
struct ProgramEvaluation {
    MetricSet metrics;
    std::string failure;
    std::optional<FeatureVector> feature_vector;
};

ProgramEvaluation evaluate_program(const Program& program, const DatasetView& view,
                                   const BacktestOptions& options, const FeatureSpace& space);

/// One island per taxonomy category plus a buy-and-hold island (last id).
/// Each seed is backtested on `train` and inserted. Throws
/// SeedBacktestFailure when a seed cannot be backtested.
std::vector<Island> init_islands(const DatasetView& train, const Taxonomy& taxonomy,
                                 const BacktestOptions& options, EvolutionaryDatabase& db);

}  // namespace qevo
