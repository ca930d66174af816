#include "qevo/rng.hpp"

#include "qevo/error.hpp"

#include <sstream>

namespace qevo {

Rng Rng::stream(std::uint64_t master_seed, std::uint64_t stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed & 0xffffffffu),
                      static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(stream_id & 0xffffffffu),
                      static_cast<std::uint32_t>(stream_id >> 32), 0x9e3779b9u};
    Rng r;
    r.engine_.seed(seq);
    return r;
}

std::size_t Rng::index(std::size_t n) {
    if (n == 0) throw Error("Rng::index on empty range");
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw Error("Rng::uniform_int with lo > hi");
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
}

double Rng::uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

double Rng::normal(double mean, double stddev) {
    if (stddev == 0.0) return mean;
    return std::normal_distribution<double>(mean, stddev)(engine_);
}

std::string Rng::state() const {
    std::ostringstream out;
    out << engine_;
    return out.str();
}

void Rng::set_state(const std::string& text) {
    std::istringstream in(text);
    in >> engine_;
    if (!in) throw CorruptCheckpoint("unreadable random stream state");
}

}  // namespace qevo
