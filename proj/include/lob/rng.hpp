#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace lob {

// One generator per replica and per stream; never shared between threads.
using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// FNV-1a, used to fold string keys (experiment kind, stream names) into seeds.
constexpr std::uint64_t hash_string(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

// Seed for the stream identified by (master, keys...). Order of keys matters.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> keys) noexcept {
    std::uint64_t h = mix64(master);
    for (std::uint64_t k : keys) h = mix64(h ^ mix64(k));
    return h;
}

inline Rng make_rng(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return Rng(seq);
}

// Uniform double on the open interval (0, 1) from 53 random bits.
template <class R>
double uniform_open(R& rng) {
    const std::uint64_t bits = rng() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

template <class R>
std::int64_t poisson(double mean, R& rng) {
    if (!(mean > 0.0)) return 0;
    return std::poisson_distribution<std::int64_t>(mean)(rng);
}

template <class R>
std::int64_t binomial(std::int64_t n, double p, R& rng) {
    if (n <= 0 || !(p > 0.0)) return 0;
    if (p >= 1.0) return n;
    return std::binomial_distribution<std::int64_t>(n, p)(rng);
}

template <class R>
bool coin(double p, R& rng) {
    return uniform_open(rng) < p;
}

} // namespace lob
