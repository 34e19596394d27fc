#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "oga/error.hpp"
#include "oga/gla.hpp"
#include "oga/random.hpp"

namespace oga::gla {

std::size_t Partition::community_count() const {
    int top = -1;
    for (int c : assignment) top = std::max(top, c);
    return static_cast<std::size_t>(top + 1);
}

std::vector<std::vector<NodeIndex>> Partition::members() const {
    std::vector<std::vector<NodeIndex>> out(community_count());
    for (NodeIndex i = 0; i < assignment.size(); ++i) out[static_cast<std::size_t>(assignment[i])].push_back(i);
    return out;
}

std::vector<int> canonical(std::span<const int> assignment) {
    std::vector<int> remap;
    std::vector<int> out(assignment.size());
    int next = 0;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        const auto c = static_cast<std::size_t>(assignment[i]);
        if (c >= remap.size()) remap.resize(c + 1, -1);
        if (remap[c] < 0) remap[c] = next++;
        out[i] = remap[c];
    }
    return out;
}

namespace {

Matrix unit_rows(const Matrix& e) {
    Matrix u = e;
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
        const double n = u.row(i).norm();
        if (n > 0.0) u.row(i) /= n;
    }
    return u;
}

// Weighted graph of super-nodes: `self` holds the ordered-pair adjacency
// sum inside each super-node, `adj` the weights to other super-nodes.
struct Level {
    std::vector<std::vector<std::pair<int, double>>> adj;
    std::vector<double> self;
    std::vector<double> degree;
    Matrix vectors; // sum of unit embeddings per super-node
    std::size_t size() const { return self.size(); }
};

Level base_level(const TextAttributedGraph& graph, const Matrix& unit) {
    Level lv;
    const std::size_t n = graph.node_count();
    lv.adj.resize(n);
    lv.self.assign(n, 0.0);
    lv.degree.resize(n);
    for (NodeIndex i = 0; i < n; ++i) {
        lv.degree[i] = static_cast<double>(graph.degree(i));
        for (NodeIndex j : graph.neighbors(i)) lv.adj[i].emplace_back(static_cast<int>(j), 1.0);
    }
    lv.vectors = unit;
    return lv;
}

Level aggregate(const Level& lv, const std::vector<int>& comm, int count) {
    Level up;
    const auto k = static_cast<std::size_t>(count);
    up.adj.resize(k);
    up.self.assign(k, 0.0);
    up.degree.assign(k, 0.0);
    up.vectors = Matrix::Zero(count, lv.vectors.cols());
    std::vector<std::map<int, double>> w(k);
    for (std::size_t v = 0; v < lv.size(); ++v) {
        const auto c = static_cast<std::size_t>(comm[v]);
        up.self[c] += lv.self[v];
        up.degree[c] += lv.degree[v];
        up.vectors.row(static_cast<Eigen::Index>(c)) += lv.vectors.row(static_cast<Eigen::Index>(v));
        for (auto [u, x] : lv.adj[v]) {
            const int cu = comm[static_cast<std::size_t>(u)];
            if (cu == comm[v]) up.self[c] += x;
            else w[c][cu] += x;
        }
    }
    for (std::size_t c = 0; c < k; ++c) up.adj[c].assign(w[c].begin(), w[c].end());
    return up;
}

// Local moving on one level.  `comm` holds the starting communities (ids
// < size()).  Returns true when any node moved.
bool local_moves(const Level& lv, std::vector<int>& comm, double gamma, double m2, Rng& rng) {
    const std::size_t n = lv.size();
    const Matrix gram = lv.vectors * lv.vectors.transpose();
    std::vector<double> deg_c(n, 0.0);
    std::vector<int> count(n, 0);
    for (std::size_t v = 0; v < n; ++v) {
        deg_c[static_cast<std::size_t>(comm[v])] += lv.degree[v];
        ++count[static_cast<std::size_t>(comm[v])];
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<double> link(n, 0.0), sem(n, 0.0);
    bool any = false;
    for (int pass = 0; pass < 1000; ++pass) {
        bool moved = false;
        for (std::size_t v : order) {
            const int from = comm[v];
            // Take v out of its community.
            deg_c[static_cast<std::size_t>(from)] -= lv.degree[v];
            --count[static_cast<std::size_t>(from)];

            std::fill(link.begin(), link.end(), 0.0);
            for (auto [u, x] : lv.adj[v]) link[static_cast<std::size_t>(comm[static_cast<std::size_t>(u)])] += x;
            std::fill(sem.begin(), sem.end(), 0.0);
            if (gamma > 0.0)
                for (std::size_t u = 0; u < n; ++u)
                    if (u != v) sem[static_cast<std::size_t>(comm[u])] += gram(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u));

            auto gain = [&](std::size_t c) {
                return 2.0 * link[c] + 2.0 * gamma * sem[c] - (1.0 - gamma) * 2.0 * lv.degree[v] * deg_c[c] / m2;
            };
            // An empty community scores 0 (v alone); consider one of them.
            double best = -std::numeric_limits<double>::infinity();
            int target = from;
            bool empty_seen = false;
            for (std::size_t c = 0; c < n; ++c) {
                if (count[c] == 0 && static_cast<int>(c) != from) {
                    if (empty_seen) continue;
                    empty_seen = true;
                }
                const double g = gain(c);
                if (g > best) {
                    best = g;
                    target = static_cast<int>(c);
                }
            }
            if (gain(static_cast<std::size_t>(from)) >= best - 1e-12) target = from;
            comm[v] = target;
            deg_c[static_cast<std::size_t>(target)] += lv.degree[v];
            ++count[static_cast<std::size_t>(target)];
            if (target != from) moved = true;
        }
        if (!moved) break;
        any = true;
    }
    return any;
}

double community_q(const TextAttributedGraph& graph, const Matrix& unit, std::span<const int> assignment,
                   double gamma) {
    const double m2 = 2.0 * static_cast<double>(graph.edge_count());
    const auto k = static_cast<std::size_t>(*std::max_element(assignment.begin(), assignment.end()) + 1);
    std::vector<double> inside(k, 0.0), deg(k, 0.0), fix(k, 0.0);
    Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(k), unit.cols());
    for (NodeIndex i = 0; i < graph.node_count(); ++i) {
        const auto c = static_cast<std::size_t>(assignment[i]);
        deg[c] += static_cast<double>(graph.degree(i));
        sums.row(static_cast<Eigen::Index>(c)) += unit.row(static_cast<Eigen::Index>(i));
        // cos(e_i, e_i) counts as 1 even for a zero embedding.
        fix[c] += 1.0 - unit.row(static_cast<Eigen::Index>(i)).squaredNorm();
        for (NodeIndex j : graph.neighbors(i))
            if (assignment[j] == assignment[i]) inside[c] += 1.0;
    }
    double q = 0.0;
    for (std::size_t c = 0; c < k; ++c)
        q += inside[c] + gamma * (sums.row(static_cast<Eigen::Index>(c)).squaredNorm() + fix[c]) -
             (1.0 - gamma) * deg[c] * deg[c] / m2;
    return q / m2;
}

std::vector<int> louvain(const TextAttributedGraph& graph, const Matrix& unit, std::vector<int> start,
                         double gamma, Rng& rng) {
    const double m2 = 2.0 * static_cast<double>(graph.edge_count());
    Level lv = base_level(graph, unit);
    // node -> super-node of the current level
    std::vector<int> node_to_super(graph.node_count());
    std::iota(node_to_super.begin(), node_to_super.end(), 0);
    std::vector<int> comm = canonical(start);
    while (true) {
        const bool moved = local_moves(lv, comm, gamma, m2, rng);
        comm = canonical(comm);
        const int count = *std::max_element(comm.begin(), comm.end()) + 1;
        for (auto& s : node_to_super) s = comm[static_cast<std::size_t>(s)];
        if (static_cast<std::size_t>(count) == lv.size() && !moved) break;
        if (static_cast<std::size_t>(count) == lv.size()) continue;
        lv = aggregate(lv, comm, count);
        comm.resize(static_cast<std::size_t>(count));
        std::iota(comm.begin(), comm.end(), 0);
    }
    return node_to_super;
}

constexpr int kPerturbRounds = 12;

} // namespace

double semantic_modularity(const TextAttributedGraph& graph, const Matrix& embeddings,
                           std::span<const int> assignment, double gamma) {
    if (graph.edge_count() == 0) throw DataError("modularity is undefined for a graph without edges");
    if (assignment.size() != graph.node_count() || static_cast<std::size_t>(embeddings.rows()) != graph.node_count())
        throw DataError("partition, embeddings and graph sizes differ");
    for (int c : assignment)
        if (c < 0) throw DataError("negative community id");
    return community_q(graph, unit_rows(embeddings), assignment, gamma);
}

Partition detect_communities(const TextAttributedGraph& graph, const Matrix& embeddings, double gamma,
                             std::uint64_t seed, int restarts) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
    if (static_cast<std::size_t>(embeddings.rows()) != graph.node_count())
        throw DataError("embeddings and graph sizes differ");
    Partition best;
    best.gamma = gamma;
    const std::size_t n = graph.node_count();
    std::vector<int> singletons(n);
    std::iota(singletons.begin(), singletons.end(), 0);
    if (graph.edge_count() == 0) {
        best.assignment = singletons;
        best.q = std::numeric_limits<double>::quiet_NaN();
        return best;
    }
    const Matrix unit = unit_rows(embeddings);
    best.q = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, restarts); ++r) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
        std::vector<int> current = louvain(graph, unit, singletons, gamma, rng);
        double q = community_q(graph, unit, current, gamma);
        // Restart local moving from the result until it stops improving.
        for (int round = 0; round < 20; ++round) {
            auto next = louvain(graph, unit, current, gamma, rng);
            const double nq = community_q(graph, unit, next, gamma);
            if (!(nq > q + 1e-12)) break;
            current = std::move(next);
            q = nq;
        }
        // Perturbation: scatter a share of the nodes into random communities
        // and re-optimise; keep the result only when Q improves.
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        std::uniform_int_distribution<int> pick(0, static_cast<int>(n) - 1);
        for (int round = 0; round < kPerturbRounds; ++round) {
            std::vector<int> start = current;
            for (auto& c : start)
                if (coin(rng) < 0.3) c = pick(rng);
            auto next = louvain(graph, unit, canonical(start), gamma, rng);
            const double nq = community_q(graph, unit, next, gamma);
            if (nq > q + 1e-12) {
                current = std::move(next);
                q = nq;
            }
        }
        if (q > best.q + 1e-12) {
            best.q = q;
            best.assignment = canonical(current);
        }
    }
    return best;
}

} // namespace oga::gla
