#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace oga {

using Rng = std::mt19937_64;

/// Derives an independent stream seed from a base seed and a path of
/// integers (epoch, node, hop, ...).  Stable for a given toolchain.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
    std::vector<std::uint32_t> words;
    words.reserve(2 + 2 * path.size());
    auto push = [&](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(base);
    for (auto v : path) push(v);
    std::seed_seq seq(words.begin(), words.end());
    std::uint32_t raw[2];
    seq.generate(raw, raw + 2);
    return (static_cast<std::uint64_t>(raw[1]) << 32) | raw[0];
}

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> path = {}) {
    return Rng(derive_seed(base, path));
}

} // namespace oga
