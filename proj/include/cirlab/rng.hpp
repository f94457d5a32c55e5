#pragma once

// Deterministic per-event random streams. A stream is a pure function of
// (master_seed, event index, attempt), so results never depend on how events
// are scheduled across workers.

#include <cstdint>
#include <random>

namespace cirlab {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class EventStream {
public:
    EventStream(std::uint64_t master_seed, std::uint64_t index, std::uint64_t attempt = 0)
        : engine_(mix(master_seed, index, attempt)) {}

    /// Uniform double in [0, 1) built from the top 53 bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
        return splitmix64(splitmix64(splitmix64(a) ^ b) ^ (c * 0xd1b54a32d192ed03ULL));
    }
    std::mt19937_64 engine_;
};

} // namespace cirlab
