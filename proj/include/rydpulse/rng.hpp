#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rydpulse {

using Rng = std::mt19937_64;

// First identifier of every stream, so that streams of different kinds never coincide.
enum class StreamTag : std::uint64_t {
    pulse = 1,
    haar_sector = 2,
    haar_full = 3,
    reference = 4,
    grape_pool = 5,
    grape_restart = 6,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed for an independent stream identified by (master, ids...). Streams depend
// only on their identifiers, never on which worker draws them.
inline std::uint64_t stream_seed(std::uint64_t master, std::initializer_list<std::uint64_t> ids) {
    std::uint64_t h = splitmix64(master);
    for (std::uint64_t id : ids) h = splitmix64(h ^ splitmix64(id + 0x632be59bd9b4e019ULL));
    return h;
}

inline Rng make_stream(std::uint64_t master, std::initializer_list<std::uint64_t> ids) {
    return Rng(stream_seed(master, ids));
}

}  // namespace rydpulse
