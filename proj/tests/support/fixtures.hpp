#pragma once

// Small graph fixtures and temp-directory helpers shared by the unit tests.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "oga/graph.hpp"

namespace oga::testing {

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("oga_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

/// Builds a graph whose node ids are 0..n-1 with the given edges; labels
/// may be empty strings.
inline TextAttributedGraph make_graph(std::size_t n,
                                      const std::vector<std::pair<std::int64_t, std::int64_t>>& edges,
                                      std::vector<std::string> labels = {},
                                      std::vector<std::string> texts = {}) {
    std::vector<NodeRecord> nodes;
    for (std::size_t i = 0; i < n; ++i)
        nodes.push_back({static_cast<std::int64_t>(i), i < labels.size() ? labels[i] : "",
                         i < texts.size() ? texts[i] : "node " + std::to_string(i)});
    return TextAttributedGraph(std::move(nodes), edges);
}

inline TextAttributedGraph path3() { return make_graph(3, {{0, 1}, {1, 2}}); }

/// Erdos-Renyi style random graph.
inline TextAttributedGraph random_graph(std::size_t n, double p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(p);
    std::vector<std::pair<std::int64_t, std::int64_t>> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (coin(rng)) edges.emplace_back(i, j);
    return make_graph(n, edges);
}

} // namespace oga::testing
