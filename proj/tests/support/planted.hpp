#pragma once

// Small planted-partition graph with class-separated embeddings, for
// training smoke tests that should not depend on the benchmark generator.

#include <random>
#include <string>
#include <vector>

#include "oga/embedding.hpp"
#include "support/fixtures.hpp"

namespace oga::testing {

struct Planted {
    TextAttributedGraph graph;
    EmbeddingMatrix embeddings;
    std::vector<int> truth;
};

inline Planted planted(std::size_t per_class, int classes, std::size_t dim, std::uint64_t seed,
                       double p_in = 0.3, double p_out = 0.01, double labeled_share = 0.5) {
    std::mt19937_64 rng(seed);
    const std::size_t n = per_class * static_cast<std::size_t>(classes);
    std::vector<int> truth(n);
    for (std::size_t i = 0; i < n; ++i) truth[i] = static_cast<int>(i / per_class);

    std::vector<std::pair<std::int64_t, std::int64_t>> edges;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (u(rng) < (truth[i] == truth[j] ? p_in : p_out)) edges.emplace_back(i, j);

    std::vector<std::string> labels(n);
    for (std::size_t i = 0; i < n; ++i)
        if (u(rng) < labeled_share || i % per_class == 0) labels[i] = "c" + std::to_string(truth[i]);

    std::normal_distribution<double> noise(0.0, 0.3);
    Matrix e(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < dim; ++d)
            e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) =
                (static_cast<int>(d) % classes == truth[i] ? 1.0 : 0.0) + noise(rng);
    return {make_graph(n, edges, labels), {e}, truth};
}

} // namespace oga::testing
