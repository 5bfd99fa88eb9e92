#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace autosar {

using RngStream = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Hash of (seed, indices...) used to seed an independent stream.
///
/// Streams for different index tuples are statistically independent and do
/// not depend on the order in which trials are executed, which is what makes
/// multi-threaded sweeps bit-reproducible.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> indices) noexcept {
    std::uint64_t h = detail::splitmix64(seed);
    for (std::uint64_t i : indices) {
        h = detail::splitmix64(h ^ detail::splitmix64(i + 0x632BE59BD9B4E019ULL));
    }
    return h;
}

inline RngStream make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> indices) {
    return RngStream(stream_key(seed, indices));
}

}  // namespace autosar
