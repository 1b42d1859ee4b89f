#pragma once

#include <cstdint>
#include <random>

namespace exptwist {

// Master seed plus a stream id. Per-path engines are derived by hashing
// (master, stream, path index), so path i's randomness is independent of
// scheduling and of how many paths precede it.
struct SeedSpec {
    std::uint64_t master = 0;
    std::uint64_t stream = 0;

    // Child seed for an internal consumer (surface nodes, pilot runs, ...).
    // tag values are fixed constants per call site.
    SeedSpec substream(std::uint64_t tag) const;

    friend bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix3(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = splitmix64(a);
    h = splitmix64(h ^ b);
    h = splitmix64(h ^ c);
    return h;
}

}  // namespace detail

inline SeedSpec SeedSpec::substream(std::uint64_t tag) const {
    return SeedSpec{master, detail::mix3(master, stream, tag)};
}

using PathRng = std::mt19937_64;

// Deterministic (master, stream, path_index) -> engine state. Distinct
// inputs map to distinct
// seed material with overwhelming probability; the whole tuple feeds a
// seed_seq so nearby indices do not share initialization structure.
inline PathRng derive_path_seed(const SeedSpec& seed, std::uint64_t path_index) {
    const std::uint64_t h0 = detail::mix3(seed.master, seed.stream, path_index);
    const std::uint64_t h1 = detail::splitmix64(h0);
    const std::uint64_t h2 = detail::splitmix64(h1);
    const std::uint64_t h3 = detail::splitmix64(h2);
    std::seed_seq seq{
        static_cast<std::uint32_t>(h0), static_cast<std::uint32_t>(h0 >> 32),
        static_cast<std::uint32_t>(h1), static_cast<std::uint32_t>(h1 >> 32),
        static_cast<std::uint32_t>(h2), static_cast<std::uint32_t>(h2 >> 32),
        static_cast<std::uint32_t>(h3), static_cast<std::uint32_t>(h3 >> 32)};
    return PathRng(seq);
}

}  // namespace exptwist
