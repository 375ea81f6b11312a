#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace dosdef {

// splitmix64. Used everywhere instead of <random> engines so that streams are
// bit-identical across platforms and standard-library versions.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derives an independent stream seed from (seed, purpose, id). Values drawn
// from a derived stream depend only on the key, never on draw order elsewhere,
// which keeps per-request telemetry identical across scheduling policies.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose, std::uint64_t id = 0) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
    for (char c : purpose) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    h ^= id + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    std::uint64_t s = h;
    return splitmix64(s);
}

class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // [0, 1)
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // inclusive bounds
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (hi <= lo) return lo;
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(next_u64() % span);
    }

    // Box-Muller without the cached twin, so every draw consumes exactly two
    // underlying values.
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t state_;
};

} // namespace dosdef
