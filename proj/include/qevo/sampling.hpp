#pragma once

#include "qevo/database.hpp"
#include "qevo/islands.hpp"
#include "qevo/rng.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace qevo {

struct SamplingConfig {
    double alpha = 0.5;
    /// Per continuous dimension; a single value applies to all, empty means 1.0.
    std::vector<double> sigma_d;
    /// Bit flips per perturbation; nullopt means default_k_bf(width).
    std::optional<int> k_bf;
    int best_count = 2;
    int diverse_count = 3;
    int random_count = 2;
    /// Diverse lookups allowed per requested cousin.
    int attempts_per_diverse = 10;

    /// Throws ConfigError.
    void validate() const;
    double sigma_for(std::size_t dim) const;
    int k_bf_for(std::size_t width) const;

    bool operator==(const SamplingConfig&) const = default;
};

/// round(n / 4), at least 1.
int default_k_bf(std::size_t width);

/// Two-stage mixture: with probability alpha a uniform pick among the
/// island's cell occupants (falling back to the whole island when it has
/// none), otherwise a uniform pick over the whole island. Throws EmptyIsland.
CandidateId sample_parent(const Island& island, const EvolutionaryDatabase& db, const SamplingConfig& config,
                          Rng& rng);

/// Toggles k uniformly chosen positions; repeats may cancel.
std::string bitflip_perturb(std::string bits, int k, Rng& rng);

/// floor(N(bin, sigma^2)) clamped to [0, B - 1] per continuous dimension,
/// bit flips on the category.
FeatureVector perturb_feature_vector(const FeatureVector& parent, const FeatureSpace& space,
                                     const SamplingConfig& config, Rng& rng);

struct Cousins {
    std::vector<CandidateId> best;
    std::vector<CandidateId> diverse;
    std::vector<CandidateId> random;
    /// best, diverse, random concatenated with duplicates removed.
    std::vector<CandidateId> all;
};

Cousins sample_cousins(CandidateId parent, const Island& island, const EvolutionaryDatabase& db,
                       const SamplingConfig& config, Rng& rng);

}  // namespace qevo
