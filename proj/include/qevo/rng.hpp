#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>

namespace qevo {

/// Seeded random source. All stochastic choices in the library go through
/// one of these so a run is reproducible from its master seed; the engine
/// state serializes to text for checkpoints.
///
/// Distributions are constructed per call, so no hidden cached variates
/// survive between draws and `state()` captures everything.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    /// Independent stream derived from (master seed, stream id).
    static Rng stream(std::uint64_t master_seed, std::uint64_t stream_id);

    /// Uniform in [0, n). n must be > 0.
    std::size_t index(std::size_t n);
    /// Uniform integer in [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    /// Uniform in [0, 1).
    double uniform();
    double normal(double mean, double stddev);
    bool bernoulli(double p) { return uniform() < p; }

    std::string state() const;
    void set_state(const std::string& text);

    std::mt19937_64& engine() noexcept { return engine_; }

    bool operator==(const Rng& other) const { return engine_ == other.engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace qevo
