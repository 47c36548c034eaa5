#pragma once

#include <cstdint>
#include <random>

namespace adcs {

/// Source tag used to split the master seed into independent streams.
enum class StreamSource : std::uint64_t { initial_state = 1, parameter = 2, noise = 3 };

/// SplitMix64 finalizer; used to derive decorrelated child seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// A named random stream. Streams derived from the same (seed, index, source)
/// triple produce bit-identical sequences; streams for different triples are
/// independent, so scenario i never depends on how many scenarios exist.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(mix64(seed)) {}

    static RngStream derive(std::uint64_t master_seed, std::uint64_t index, StreamSource source) {
        std::uint64_t s = mix64(master_seed);
        s = mix64(s ^ mix64(index + 0x632be59bd9b4e019ULL));
        s = mix64(s ^ static_cast<std::uint64_t>(source));
        return RngStream(s);
    }

    std::mt19937_64& engine() { return engine_; }

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace adcs
