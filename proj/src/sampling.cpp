#include "qevo/sampling.hpp"

#include "qevo/error.hpp"

#include <algorithm>
#include <cmath>

namespace qevo {

void SamplingConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("sampling.alpha", "must be in [0, 1]");
    for (double s : sigma_d)
        if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("sampling.sigma_d", "must be >= 0");
    if (k_bf && *k_bf < 0) throw ConfigError("sampling.k_bf", "must be >= 0");
    if (best_count < 0 || diverse_count < 0 || random_count < 0)
        throw ConfigError("sampling.counts", "must be >= 0");
    if (attempts_per_diverse < 1) throw ConfigError("sampling.attempts_per_diverse", "must be >= 1");
}

double SamplingConfig::sigma_for(std::size_t dim) const {
    if (sigma_d.empty()) return 1.0;
    if (sigma_d.size() == 1) return sigma_d.front();
    return sigma_d.at(dim);
}

int SamplingConfig::k_bf_for(std::size_t width) const { return k_bf ? *k_bf : default_k_bf(width); }

int default_k_bf(std::size_t width) {
    return std::max(1, static_cast<int>(std::lround(static_cast<double>(width) / 4.0)));
}

CandidateId sample_parent(const Island& island, const EvolutionaryDatabase& db, const SamplingConfig& config,
                          Rng& rng) {
    if (island.population.empty()) throw EmptyIsland("island " + std::to_string(island.id) + " has no members");
    std::vector<CandidateId> elites;
    for (CandidateId id : island.population)
        if (db.is_elite(id)) elites.push_back(id);
    const bool exploit = rng.bernoulli(config.alpha);
    const auto& pool = exploit && !elites.empty() ? elites : island.population;
    return pool[rng.index(pool.size())];
}

std::string bitflip_perturb(std::string bits, int k, Rng& rng) {
    if (bits.empty()) return bits;
    for (int i = 0; i < k; ++i) {
        char& c = bits[rng.index(bits.size())];
        c = c == '1' ? '0' : '1';
    }
    return bits;
}

FeatureVector perturb_feature_vector(const FeatureVector& parent, const FeatureSpace& space,
                                     const SamplingConfig& config, Rng& rng) {
    FeatureVector out;
    out.bins.reserve(parent.bins.size());
    for (std::size_t d = 0; d < parent.bins.size(); ++d) {
        const double draw = std::floor(rng.normal(parent.bins[d], config.sigma_for(d)));
        const double top = static_cast<double>(space.continuous.at(d).bins - 1);
        out.bins.push_back(static_cast<int>(std::clamp(draw, 0.0, top)));
    }
    out.category = bitflip_perturb(parent.category, config.k_bf_for(parent.category.size()), rng);
    return out;
}

Cousins sample_cousins(CandidateId parent, const Island& island, const EvolutionaryDatabase& db,
                       const SamplingConfig& config, Rng& rng) {
    Cousins c;
    std::vector<CandidateId> others;
    for (CandidateId id : island.population)
        if (id != parent) others.push_back(id);

    // best: highest finite scores, ties to the lower id
    std::vector<CandidateId> ranked;
    for (CandidateId id : others)
        if (std::isfinite(db.get(id).score())) ranked.push_back(id);
    std::stable_sort(ranked.begin(), ranked.end(), [&](CandidateId a, CandidateId b) {
        const double sa = db.get(a).score();
        const double sb = db.get(b).score();
        return sa != sb ? sa > sb : a < b;
    });
    for (std::size_t i = 0; i < ranked.size() && static_cast<int>(i) < config.best_count; ++i)
        c.best.push_back(ranked[i]);

    // diverse: occupants of cells near the parent's
    const auto& pfv = db.get(parent).feature_vector;
    if (pfv && config.diverse_count > 0) {
        int attempts = config.attempts_per_diverse * config.diverse_count;
        while (attempts-- > 0 && static_cast<int>(c.diverse.size()) < config.diverse_count) {
            auto occ = db.occupant(perturb_feature_vector(*pfv, db.space(), config, rng));
            if (occ && *occ != parent && std::find(c.diverse.begin(), c.diverse.end(), *occ) == c.diverse.end())
                c.diverse.push_back(*occ);
        }
    }

    // random: distinct uniform picks via a partial shuffle
    std::vector<CandidateId> pool = others;
    for (int i = 0; i < config.random_count && !pool.empty(); ++i) {
        const std::size_t j = rng.index(pool.size());
        c.random.push_back(pool[j]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
    }

    for (const auto* group : {&c.best, &c.diverse, &c.random})
        for (CandidateId id : *group)
            if (std::find(c.all.begin(), c.all.end(), id) == c.all.end()) c.all.push_back(id);
    return c;
}

}  // namespace qevo
