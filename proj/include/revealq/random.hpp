#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace revealq {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30u)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27u)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31u);
}

// Derives an independent stream seed from a base seed and a list of tags
// (user index, round, stream name hash, ...). Order of tags matters.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t h = splitmix64(base);
    for (std::uint64_t t : tags) {
        h = splitmix64(h ^ splitmix64(t + 0x632be59bd9b4e019ull));
    }
    return h;
}

// Compile-time FNV-1a so stream names can be used as seed tags.
constexpr std::uint64_t stream_tag(const char* name) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const char* p = name; *p != '\0'; ++p) {
        h ^= static_cast<unsigned char>(*p);
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace revealq
