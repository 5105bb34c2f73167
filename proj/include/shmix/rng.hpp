#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace shmix {

/// Derivation tags that keep calibration and power streams disjoint.
enum class StreamTag : std::uint64_t {
    Calibration = 0x43414c49ull,
    Power = 0x504f5752ull,
    NullLevel = 0x4e554c4cull,
};

/// An independent pseudo-random stream identified by a master seed and a path
/// of integers (tag, grid index, replicate index, ...). Streams are plain values:
/// copying one forks the state, two differently keyed streams never overlap in
/// how they are seeded.
class RngStream {
public:
    using engine_type = std::mt19937_64;

    explicit RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {}) {
        std::vector<std::uint32_t> words;
        words.reserve(2 + 2 * path.size());
        auto push = [&](std::uint64_t v) {
            words.push_back(static_cast<std::uint32_t>(v));
            words.push_back(static_cast<std::uint32_t>(v >> 32));
        };
        push(seed);
        for (auto p : path) push(p);
        std::seed_seq seq(words.begin(), words.end());
        engine_.seed(seq);
    }

    engine_type& engine() noexcept { return engine_; }

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept {
        // 53 random mantissa bits, shifted by half an ulp so 0 is unreachable.
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    bool coin() noexcept { return (engine_() >> 63) != 0; }

private:
    engine_type engine_;
};

inline RngStream derive_stream(std::uint64_t seed, StreamTag tag, std::uint64_t a) {
    return RngStream(seed, {static_cast<std::uint64_t>(tag), a});
}

inline RngStream derive_stream(std::uint64_t seed, StreamTag tag, std::uint64_t a, std::uint64_t b) {
    return RngStream(seed, {static_cast<std::uint64_t>(tag), a, b});
}

}  // namespace shmix
