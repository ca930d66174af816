#pragma once

#include "qevo/program.hpp"
#include "qevo/records.hpp"
#include "qevo/rng.hpp"
#include "qevo/taxonomy.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace qevo {

/// Everything a generator sees when proposing one offspring.
struct GenerationContext {
    CandidateRecord parent;
    std::vector<CandidateRecord> cousins;
    std::vector<Insight> insights;  // oldest first
    std::string data_schema;
    Taxonomy taxonomy;
    CategoryTable category_table = CategoryTable::defaults();
    ParseOptions parse_options;  // taxonomy pointer is filled in by the generator
    int island_id = 0;
    int generation = 0;
};

struct GeneratorOutcome {
    Hypothesis hypothesis;
    Program program;
    int repair_attempts = 0;
    std::vector<std::string> transcripts;
    /// Short label of the edit (mutational) or "llm".
    std::string operator_name;
};

/// Backtests a proposal; returns an error message when it fails to run.
using BacktestCheck = std::function<std::optional<std::string>(const Program&)>;

struct AnalysisResult {
    Analysis analysis;
    std::string insight_text;
};

class Generator {
public:
    virtual ~Generator() = default;

    /// Throws GenerationFailure (or a subclass) when no valid program comes
    /// out within the generator's budget.
    virtual GeneratorOutcome propose(const GenerationContext& context, Rng& rng,
                                     const BacktestCheck& check = {}) = 0;

    /// Assessment of a backtested candidate against its parent.
    virtual AnalysisResult analyze(const CandidateRecord& candidate, const CandidateRecord* parent) = 0;

    /// Optional consolidation during curation; nullopt keeps the dedup-only
    /// result.
    virtual std::optional<std::string> consolidate(const std::vector<Insight>& insights) {
        (void)insights;
        return std::nullopt;
    }
};

/// "supported" when the candidate out-scores its parent, "refuted" when it
/// scores lower, "inconclusive" on a tie.
std::string verdict_for(double candidate_score, double parent_score);

/// Templated quantitative summary used by the mutational generator and as
/// the fallback of the LLM one.
AnalysisResult template_analysis(const CandidateRecord& candidate, const CandidateRecord* parent);

/// Drops exact-duplicate hashes (keeping the oldest copy), then keeps the
/// newest `n_max`. With a consolidation summary, everything but the newest
/// `keep_recent` entries is replaced by one summary insight.
std::vector<Insight> curate_insights(std::vector<Insight> repository, std::size_t n_max,
                                     std::optional<std::string> consolidation = std::nullopt,
                                     int island_id = 0, int generation = 0, std::size_t keep_recent = 10);

/// Offline generator: one random edit of the parent per proposal.
class MutationalGenerator : public Generator {
public:
    GeneratorOutcome propose(const GenerationContext& context, Rng& rng, const BacktestCheck& check = {}) override;
    AnalysisResult analyze(const CandidateRecord& candidate, const CandidateRecord* parent) override;
};

/// Edit operators, exposed for tests.
enum class MutationOp { param_jitter, rule_edit, structural, crossover, sizing_overlay };

std::string_view to_string(MutationOp op);

/// Applies one operator; nullopt when it does not apply to this parent
/// (e.g. crossover without cousins). The result is not yet tag-derived or
/// validated.
std::optional<Program> apply_mutation(MutationOp op, const Program& parent, const std::vector<Program>& cousins,
                                      const ParseOptions& options, Rng& rng, std::string& description);

}  // namespace qevo
