#include "qevo/islands.hpp"

#include "qevo/error.hpp"
#include "qevo/templates.hpp"

#include <algorithm>
#include <cmath>

namespace qevo {

bool Island::contains(CandidateId id) const {
    return std::find(population.begin(), population.end(), id) != population.end();
}

bool Island::add_member(CandidateId id) {
    if (contains(id)) return false;
    population.push_back(id);
    return true;
}

std::vector<MigrationEvent> migrate(std::vector<Island>& islands, const EvolutionaryDatabase& db, double fraction,
                                    int generation) {
    std::vector<MigrationEvent> log;
    const std::size_t n = islands.size();
    if (n < 2) return log;

    std::vector<std::vector<CandidateId>> migrants(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& pop = islands[i].population;
        const auto quota = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(pop.size()) - 1e-12));
        std::vector<CandidateId> ranked;
        for (CandidateId id : pop)
            if (std::isfinite(db.get(id).score())) ranked.push_back(id);
        std::stable_sort(ranked.begin(), ranked.end(), [&](CandidateId a, CandidateId b) {
            const double sa = db.get(a).score();
            const double sb = db.get(b).score();
            return sa != sb ? sa > sb : a < b;
        });
        ranked.resize(std::min(quota, ranked.size()));
        migrants[i] = std::move(ranked);
    }

    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> neighbors = {(i + n - 1) % n, (i + 1) % n};
        if (neighbors[0] == neighbors[1]) neighbors.pop_back();
        for (std::size_t dst : neighbors) {
            MigrationEvent ev{generation, islands[i].id, islands[dst].id, {}};
            for (CandidateId id : migrants[i])
                if (islands[dst].add_member(id)) ev.candidate_ids.push_back(id);
            log.push_back(std::move(ev));
        }
    }
    return log;
}

ProgramEvaluation evaluate_program(const Program& program, const DatasetView& view, const BacktestOptions& options,
                                   const FeatureSpace& space) {
    ProgramEvaluation out;
    try {
        BacktestReport report = run_backtest(program, view, options);
        out.metrics = report.metrics;
    } catch (const CandidateFailure& e) {
        out.failure = e.what();
        return out;
    }
    if (out.metrics.valid) out.feature_vector = compute_feature_vector(out.metrics, program.tags, space);
    return out;
}

std::vector<Island> init_islands(const DatasetView& train, const Taxonomy& taxonomy, const BacktestOptions& options,
                                 EvolutionaryDatabase& db) {
    taxonomy.validate();
    std::vector<Island> islands;
    auto seed = [&](const std::string& category, const Program& program) {
        Island island;
        island.id = static_cast<int>(islands.size());
        island.seed_category = category;
        ProgramEvaluation ev;
        try {
            ev = evaluate_program(program, train, options, db.space());
        } catch (const Error& e) {
            throw SeedBacktestFailure("seed for " + category + ": " + e.what());
        }
        if (!ev.failure.empty()) throw SeedBacktestFailure("seed for " + category + ": " + ev.failure);
        CandidateRecord r;
        r.island_id = island.id;
        r.generation = 0;
        r.hypothesis = seed_hypothesis(category);
        r.program = serialize_program(program);
        r.tags = program.tags;
        r.metrics = ev.metrics;
        r.feature_vector = ev.feature_vector;
        r.analysis.mode = "template";
        r.analysis.verdict = "inconclusive";
        r.analysis.summary = "seed strategy";
        island.add_member(db.insert(std::move(r)).id);
        islands.push_back(std::move(island));
    };
    for (const auto& category : taxonomy.categories) seed(category, seed_program(category));
    seed(buy_and_hold_island, buy_and_hold_seed());
    return islands;
}

}  // namespace qevo
