#pragma once

#include <cstdint>
#include <random>

namespace psa {

// splitmix64 finalizer, used to derive independent stream seeds from a master
// seed and a stream index.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic uniform stream. mt19937_64 is fully specified by the standard
// and the uniform mapping below avoids std::uniform_real_distribution, whose
// output is implementation-defined.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    // Substream `index` of a master seed; substreams with distinct indices are
    // independent for practical purposes.
    static RngStream substream(std::uint64_t master_seed, std::uint64_t index) {
        return RngStream(mix64(master_seed ^ mix64(index + 1)));
    }

    // Uniform on (0, 1): 53-bit mantissa, nudged away from exact 0.
    double uniform() {
        const std::uint64_t bits = engine_() >> 11;
        double u = static_cast<double>(bits) * 0x1.0p-53;
        if (u == 0.0) u = 0x1.0p-54;
        return u;
    }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace psa
