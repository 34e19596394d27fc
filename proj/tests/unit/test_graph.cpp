#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "oga/csv.hpp"
#include "oga/error.hpp"
#include "oga/graph.hpp"
#include "support/fixtures.hpp"

using namespace oga;
using oga::testing::TempDir;
using oga::testing::write_text;

namespace {

// Dense reference: D^(r-1) (A + I) D^(-r).
Eigen::MatrixXd dense_operator(const TextAttributedGraph& g, double r) {
    const auto n = static_cast<Eigen::Index>(g.node_count());
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
    for (const auto& e : g.edges()) {
        a(static_cast<Eigen::Index>(e.u), static_cast<Eigen::Index>(e.v)) = 1.0;
        a(static_cast<Eigen::Index>(e.v), static_cast<Eigen::Index>(e.u)) = 1.0;
    }
    Eigen::VectorXd d = a.rowwise().sum();
    Eigen::VectorXd left = d.array().pow(r - 1.0);
    Eigen::VectorXd right = d.array().pow(-r);
    return left.asDiagonal() * a * right.asDiagonal();
}

std::set<NodeIndex> hop_ball(const TextAttributedGraph& g, NodeIndex node, int hop) {
    std::set<NodeIndex> ball{node};
    std::vector<NodeIndex> frontier{node};
    for (int h = 0; h < hop; ++h) {
        std::vector<NodeIndex> next;
        for (NodeIndex u : frontier)
            for (NodeIndex v : g.neighbors(u))
                if (ball.insert(v).second) next.push_back(v);
        frontier = std::move(next);
    }
    return ball;
}

} // namespace

TEST_CASE("load_graph counts nodes and deduplicates edges") {
    TempDir dir;
    write_text(dir / "nodes.csv",
               "node_id,label,text\n0,ml,\"first, with comma\"\n1,,second\n2,db,\"third \"\"quoted\"\"\"\n");
    SUBCASE("3-node path") {
        write_text(dir / "edges.csv", "src,dst\n0,1\n1,2\n");
        auto g = load_graph(dir / "nodes.csv", dir / "edges.csv");
        CHECK(g.node_count() == 3);
        CHECK(g.edge_count() == 2);
        CHECK(g.text(0) == "first, with comma");
        CHECK(g.text(2) == "third \"quoted\"");
        CHECK_FALSE(g.label(1).has_value());
        REQUIRE(g.class_names().size() == 2);
        CHECK(g.class_names()[0] == "db");
        CHECK(*g.label(0) == *g.class_of("ml"));
    }
    SUBCASE("both orientations collapse to one edge") {
        write_text(dir / "edges.csv", "src,dst\n0,1\n1,0\n0,1\n");
        auto g = load_graph(dir / "nodes.csv", dir / "edges.csv");
        CHECK(g.edge_count() == 1);
        CHECK(g.degree(0) == 1);
        CHECK(g.degree(1) == 1);
    }
    SUBCASE("self loops are dropped") {
        write_text(dir / "edges.csv", "src,dst\n1,1\n0,2\n");
        auto g = load_graph(dir / "nodes.csv", dir / "edges.csv");
        CHECK(g.edge_count() == 1);
        CHECK(g.dropped_self_loops() == 1);
    }
    SUBCASE("dangling endpoint names the id") {
        write_text(dir / "edges.csv", "src,dst\n0,9\n");
        try {
            load_graph(dir / "nodes.csv", dir / "edges.csv");
            FAIL("expected a referential-integrity error");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("9") != std::string::npos);
        }
    }
}

TEST_CASE("load_graph rejects malformed node tables") {
    TempDir dir;
    write_text(dir / "edges.csv", "src,dst\n");
    SUBCASE("duplicate node id") {
        write_text(dir / "nodes.csv", "node_id,label,text\n0,,a\n0,,b\n");
        CHECK_THROWS_AS(load_graph(dir / "nodes.csv", dir / "edges.csv"), DataError);
    }
    SUBCASE("invalid utf-8") {
        write_text(dir / "nodes.csv", "node_id,label,text\n0,,\xC3\x28\n");
        CHECK_THROWS_AS(load_graph(dir / "nodes.csv", dir / "edges.csv"), DataError);
    }
    SUBCASE("wrong header") {
        write_text(dir / "nodes.csv", "id,label,text\n0,,a\n");
        CHECK_THROWS_AS(load_graph(dir / "nodes.csv", dir / "edges.csv"), FormatError);
    }
    SUBCASE("negative id") {
        write_text(dir / "nodes.csv", "node_id,label,text\n-3,,a\n");
        CHECK_THROWS_AS(load_graph(dir / "nodes.csv", dir / "edges.csv"), FormatError);
    }
}

TEST_CASE("graph survives a save/load round trip") {
    TempDir dir;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto g = oga::testing::random_graph(12, 0.3, seed);
        // Non-trivial ids, labels and texts that need quoting.
        std::vector<NodeRecord> nodes;
        for (NodeIndex i = 0; i < g.node_count(); ++i)
            nodes.push_back({static_cast<std::int64_t>(100 - 3 * i), i % 3 == 0 ? "" : "c" + std::to_string(i % 2),
                             "text, \"" + std::to_string(i) + "\"\nline two"});
        std::vector<std::pair<std::int64_t, std::int64_t>> edges;
        for (const auto& e : g.edges()) edges.emplace_back(100 - 3 * e.v, 100 - 3 * e.u);
        TextAttributedGraph original(nodes, edges);
        save_graph(original, dir / "n.csv", dir / "e.csv");
        auto reloaded = load_graph(dir / "n.csv", dir / "e.csv");
        CHECK(reloaded == original);
    }
}

TEST_CASE("build_operator matches the dense definition") {
    SUBCASE("isolated node is a fixed point") {
        auto g = oga::testing::make_graph(1, {});
        for (double r : {0.0, 0.3, 1.0}) {
            auto op = build_operator(g, r);
            CHECK(op.matrix.coeff(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
        }
    }
    SUBCASE("3-node path, r = 0.5") {
        auto op = build_operator(oga::testing::path3(), 0.5);
        // 1 / sqrt(2 * 3), from a dense numpy evaluation of D^-1/2 (A+I) D^-1/2.
        CHECK(std::abs(op.matrix.coeff(0, 1) - 0.4082482904638631) < 1e-12);
        CHECK(std::abs(op.matrix.coeff(1, 1) - 1.0 / 3.0) < 1e-12);
    }
    SUBCASE("random graphs agree with the dense oracle") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            auto g = oga::testing::random_graph(9, 0.35, seed);
            for (double r : {0.0, 0.25, 0.5, 1.0}) {
                Eigen::MatrixXd sparse = Eigen::MatrixXd(build_operator(g, r).matrix);
                CHECK((sparse - dense_operator(g, r)).cwiseAbs().maxCoeff() < 1e-14);
            }
        }
    }
    CHECK_THROWS_AS(build_operator(oga::testing::path3(), 1.5), ConfigError);
}

TEST_CASE("operator row sums and symmetry over random graphs") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(seed);
        const std::size_t n = 2 + rng() % 40;
        const double p = std::uniform_real_distribution<double>(0.0, 0.4)(rng);
        auto g = oga::testing::random_graph(n, p, seed);

        auto row_stochastic = build_operator(g, 0.0);
        Eigen::VectorXd sums = row_stochastic.matrix * Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
        CHECK((sums.array() - 1.0).abs().maxCoeff() <= 1e-9);

        Eigen::MatrixXd sym = Eigen::MatrixXd(build_operator(g, 0.5).matrix);
        CHECK((sym - sym.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("sample_neighborhood") {
    auto g = oga::testing::path3();
    CHECK(sample_neighborhood(g, 1, 1, kUnbounded, 0) == std::vector<NodeIndex>{0, 1, 2});
    CHECK(sample_neighborhood(g, 0, 2, kUnbounded, 0) == std::vector<NodeIndex>{0, 1, 2});
    CHECK(sample_neighborhood(g, 0, 1, kUnbounded, 0) == std::vector<NodeIndex>{0, 1});

    auto once = sample_neighborhood(g, 1, 1, 1, 42);
    CHECK(once.size() == 1);
    for (int rep = 0; rep < 5; ++rep) CHECK(sample_neighborhood(g, 1, 1, 1, 42) == once);

    CHECK_THROWS_AS(sample_neighborhood(g, 7, 1, 3, 0), DataError);
    CHECK_THROWS_AS(sample_neighborhood(g, 0, 0, 3, 0), ConfigError);
}

TEST_CASE("sampled neighbourhoods stay inside the hop ball and keep the centre") {
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        auto g = oga::testing::random_graph(30, 0.08, seed);
        std::vector<NodeIndex> centers;
        for (NodeIndex i = 0; i < g.node_count(); i += 3) centers.push_back(i);
        NeighborhoodIndex index(g, centers, 5);
        for (NodeIndex c : centers) {
            const int hop = 1 + static_cast<int>(seed % 5);
            const std::size_t cap = 1 + seed % 7;
            auto sample = sample_neighborhood(g, c, hop, cap, seed * 31 + c);
            auto ball = hop_ball(g, c, hop);
            CHECK(sample.size() == std::min(cap, ball.size()));
            CHECK(std::binary_search(sample.begin(), sample.end(), c));
            CHECK(std::adjacent_find(sample.begin(), sample.end()) == sample.end());
            for (NodeIndex v : sample) CHECK(ball.count(v) == 1);
            CHECK(index.sample(c, hop, cap, seed * 31 + c) == sample);
            CHECK(index.ball_size(c, hop) == ball.size());
        }
    }
}

TEST_CASE("subsampling is roughly uniform over the ball") {
    // Star with 10 leaves: each leaf should appear in about 3/10 of 4-samples.
    std::vector<std::pair<std::int64_t, std::int64_t>> edges;
    for (int leaf = 1; leaf <= 10; ++leaf) edges.emplace_back(0, leaf);
    auto g = oga::testing::make_graph(11, edges);
    std::vector<int> hits(11, 0);
    const int trials = 20000;
    for (int t = 0; t < trials; ++t)
        for (NodeIndex v : sample_neighborhood(g, 0, 1, 4, static_cast<std::uint64_t>(t))) ++hits[v];
    CHECK(hits[0] == trials);
    for (int leaf = 1; leaf <= 10; ++leaf)
        CHECK(static_cast<double>(hits[static_cast<std::size_t>(leaf)]) / trials ==
              doctest::Approx(0.3).epsilon(0.05));
}

TEST_CASE("induced subgraph keeps ids and internal edges") {
    auto g = oga::testing::make_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}}, {"a", "", "b", "", "a"});
    std::vector<NodeIndex> keep{4, 2, 3};
    auto sub = induced_subgraph(g, keep);
    CHECK(sub.node_count() == 3);
    CHECK(sub.node_id(0) == 4);
    CHECK(sub.edge_count() == 2);
    CHECK(sub.class_names()[*sub.label(1)] == "b");
}

TEST_CASE("csv parser") {
    auto rows = csv::parse("a,b\r\n\"x,\"\"y\"\"\",\n\n");
    REQUIRE(rows.size() == 2);
    CHECK(rows[1][0] == "x,\"y\"");
    CHECK(rows[1][1].empty());
    CHECK_THROWS_AS(csv::parse("\"open"), FormatError);
    CHECK(csv::is_valid_utf8("héllo"));
    CHECK_FALSE(csv::is_valid_utf8("\xED\xA0\x80")); // surrogate
}
