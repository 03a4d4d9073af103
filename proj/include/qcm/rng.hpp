#pragma once

#include <cmath>
#include <cstdint>

// Reproducible per-trajectory random streams. Stream state is derived from
// (master_seed, stream_index) through splitmix64, so distinct trajectory
// indices get statistically independent xoshiro256** generators without any
// sequential seeding step. Draw order inside a stream is part of the
// reproducibility contract.
namespace qcm {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

struct RngStreamSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_index = 0;
};

class RngStream {
  public:
    explicit RngStream(RngStreamSpec spec) {
        // counter-based derivation: hash the (seed, index) pair, then expand
        std::uint64_t h = spec.master_seed;
        splitmix64_next(h);
        h ^= 0xD1B54A32D192ED03ULL * (spec.stream_index + 1);
        for (auto& word : state_) word = splitmix64_next(h);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform on (0, 1); never returns 0 so logs are safe.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (one uniform pair per draw).
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(6.283185307179586476925286766559 * u2);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
};

} // namespace qcm
