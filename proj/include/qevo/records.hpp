#pragma once

#include "qevo/feature_map.hpp"
#include "qevo/metrics.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qevo {

using CandidateId = std::uint64_t;

/// Six-part structured rationale attached to every candidate.
struct Hypothesis {
    std::string hypothesis;
    std::string rationale;
    std::string objectives;
    std::string expected_insights;
    std::string risks_limitations;
    std::string experimentation_ideas;

    /// True when all six fields are non-empty.
    bool complete() const;
    /// Names of the empty fields.
    std::vector<std::string> missing_fields() const;

    bool operator==(const Hypothesis&) const = default;
};

/// Post-backtest assessment of a candidate.
struct Analysis {
    std::string mode;     // "template" or "llm"
    std::string verdict;  // supported | refuted | inconclusive
    std::string summary;
    std::string insight;
    std::map<std::string, double> scores;           // numeric evaluation fields
    std::map<std::string, std::string> reasoning;   // free-text evaluation fields

    bool operator==(const Analysis&) const = default;
};

struct Insight {
    int island_id = 0;
    int generation = 0;
    std::string text;
    std::optional<CandidateId> source_candidate_id;
    std::string content_hash;

    bool operator==(const Insight&) const = default;
};

/// Lowercase, whitespace-collapsed text that insight hashes are taken over.
std::string normalize_insight_text(const std::string& text);
Insight make_insight(int island_id, int generation, std::string text, std::optional<CandidateId> source);

/// One evaluated (or failed) strategy.
struct CandidateRecord {
    CandidateId id = 0;
    int island_id = 0;
    int generation = 0;
    Hypothesis hypothesis;
    /// Canonical program text.
    std::string program;
    std::vector<std::string> tags;
    MetricSet metrics;
    /// Why the candidate failed to backtest; empty on success.
    std::string failure;
    Analysis analysis;
    std::optional<FeatureVector> feature_vector;
    std::optional<CandidateId> parent_id;
    std::vector<CandidateId> cousin_ids;
    int repair_attempts = 0;
    /// LLM prompts and replies, empty for the mutational generator.
    std::vector<std::string> transcripts;

    /// SR + IR + MDD, or -infinity for failed / invalid candidates.
    double score() const;
    bool operator==(const CandidateRecord&) const = default;
};

}  // namespace qevo
