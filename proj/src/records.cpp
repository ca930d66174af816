#include "qevo/records.hpp"

#include "qevo/hash.hpp"

#include <cctype>
#include <limits>

namespace qevo {

bool Hypothesis::complete() const { return missing_fields().empty(); }

std::vector<std::string> Hypothesis::missing_fields() const {
    std::vector<std::string> out;
    auto blank = [](const std::string& s) {
        for (char c : s)
            if (!std::isspace(static_cast<unsigned char>(c))) return false;
        return true;
    };
    if (blank(hypothesis)) out.emplace_back("hypothesis");
    if (blank(rationale)) out.emplace_back("rationale");
    if (blank(objectives)) out.emplace_back("objectives");
    if (blank(expected_insights)) out.emplace_back("expected_insights");
    if (blank(risks_limitations)) out.emplace_back("risks_limitations");
    if (blank(experimentation_ideas)) out.emplace_back("experimentation_ideas");
    return out;
}

std::string normalize_insight_text(const std::string& text) {
    std::string out;
    bool space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = !out.empty();
            continue;
        }
        if (space) out += ' ';
        space = false;
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

Insight make_insight(int island_id, int generation, std::string text, std::optional<CandidateId> source) {
    Insight i;
    i.island_id = island_id;
    i.generation = generation;
    i.content_hash = sha256_hex(normalize_insight_text(text));
    i.text = std::move(text);
    i.source_candidate_id = source;
    return i;
}

double CandidateRecord::score() const {
    if (!failure.empty()) return -std::numeric_limits<double>::infinity();
    return ranking_score(metrics);
}

}  // namespace qevo
