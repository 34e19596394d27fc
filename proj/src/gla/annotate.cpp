#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "oga/embedding.hpp"
#include "oga/error.hpp"
#include "oga/gla.hpp"

namespace oga::gla {

void GlaConfig::validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
    if (representatives < 1) throw ConfigError("representatives must be >= 1");
    if (restarts < 1) throw ConfigError("restarts must be >= 1");
}

FieldList fields(GlaConfig& c) {
    return {
        {"gamma", &c.gamma},
        {"representatives", &c.representatives},
        {"neighbor_context_cap", &c.neighbor_context_cap},
        {"fusion_target", &c.fusion_target},
        {"split_by_mean", &c.split_by_mean},
        {"community_restarts", &c.restarts},
    };
}

std::string_view provenance_name(Provenance p) {
    switch (p) {
    case Provenance::llm: return "llm";
    case Provenance::allocated: return "allocated";
    case Provenance::distilled: return "distilled";
    case Provenance::fused: return "fused";
    }
    return "unknown";
}

namespace {

double row_cosine(const Matrix& e, NodeIndex a, NodeIndex b) {
    return cosine(e.row(static_cast<Eigen::Index>(a)), e.row(static_cast<Eigen::Index>(b)));
}

// Sorts by (degree, id).
void by_degree(std::vector<NodeIndex>& nodes, std::span<const std::size_t> degrees) {
    std::sort(nodes.begin(), nodes.end(), [&](NodeIndex a, NodeIndex b) {
        return degrees[a] != degrees[b] ? degrees[a] < degrees[b] : a < b;
    });
}

} // namespace

DegreeSplit split_by_degree(std::span<const NodeIndex> community, std::span<const std::size_t> degrees,
                            bool use_mean) {
    DegreeSplit out;
    if (community.empty()) return out;
    std::vector<double> d;
    for (NodeIndex v : community) d.push_back(static_cast<double>(degrees[v]));
    double threshold;
    if (use_mean) {
        threshold = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
    } else {
        std::sort(d.begin(), d.end());
        const std::size_t h = d.size() / 2;
        threshold = d.size() % 2 ? d[h] : 0.5 * (d[h - 1] + d[h]);
    }
    for (NodeIndex v : community)
        (static_cast<double>(degrees[v]) < threshold ? out.low : out.high).push_back(v);
    by_degree(out.high, degrees);
    if (out.low.empty()) {
        out.low.push_back(out.high.front());
        out.high.erase(out.high.begin());
    }
    by_degree(out.low, degrees);
    return out;
}

std::vector<NodeIndex> context_neighbors(const TextAttributedGraph& graph, const Matrix& embeddings,
                                         NodeIndex node, std::size_t cap) {
    std::vector<std::pair<double, NodeIndex>> scored;
    for (NodeIndex u : graph.neighbors(node)) scored.emplace_back(-row_cosine(embeddings, node, u), u);
    std::sort(scored.begin(), scored.end());
    std::vector<NodeIndex> out;
    for (std::size_t i = 0; i < std::min(cap, scored.size()); ++i) out.push_back(scored[i].second);
    return out;
}

std::optional<std::string> allocate_label(const TextAttributedGraph& graph, const Matrix& embeddings,
                                          NodeIndex node, std::span<const std::string> labels) {
    std::map<std::string, double> weight;
    for (NodeIndex u : graph.neighbors(node))
        if (!labels[u].empty()) weight[labels[u]] += row_cosine(embeddings, node, u);
    if (weight.empty()) return std::nullopt;
    // Map order is lexicographic, so strict > keeps the smallest label on ties.
    auto best = weight.begin();
    for (auto it = weight.begin(); it != weight.end(); ++it)
        if (std::max(it->second, 0.0) > std::max(best->second, 0.0)) best = it;
    return best->first;
}

std::vector<NodeIndex> select_representatives(const TextAttributedGraph& graph, const Matrix& embeddings,
                                              std::span<const NodeIndex> community, std::size_t count) {
    std::vector<NodeIndex> members(community.begin(), community.end());
    std::sort(members.begin(), members.end());
    if (count >= members.size()) return members;

    auto jaccard = [&](NodeIndex a, NodeIndex b) {
        const auto na = graph.neighbors(a), nb = graph.neighbors(b);
        std::size_t common = 0;
        for (auto i = na.begin(), j = nb.begin(); i != na.end() && j != nb.end();) {
            if (*i < *j) ++i;
            else if (*j < *i) ++j;
            else {
                ++common;
                ++i;
                ++j;
            }
        }
        const std::size_t uni = na.size() + nb.size() - common;
        return uni ? static_cast<double>(common) / static_cast<double>(uni) : 0.0;
    };
    std::vector<std::pair<double, NodeIndex>> scored;
    for (NodeIndex v : members) {
        double s = 0.0;
        for (NodeIndex u : members)
            if (u != v) s += jaccard(v, u) + row_cosine(embeddings, v, u);
        scored.emplace_back(-s / static_cast<double>(members.size() - 1), v);
    }
    std::sort(scored.begin(), scored.end());
    std::vector<NodeIndex> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(scored[i].second);
    return out;
}

double community_similarity(const Matrix& embeddings, std::span<const NodeIndex> a,
                            std::span<const NodeIndex> b) {
    if (a.empty() || b.empty()) throw DataError("similarity of an empty community");
    double s = 0.0;
    for (NodeIndex i : a)
        for (NodeIndex j : b) s += row_cosine(embeddings, i, j);
    return s / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

FusionResult fuse_until(const Matrix& embeddings, const std::vector<std::vector<NodeIndex>>& communities,
                        const std::vector<std::string>& labels, std::size_t target, llm::Gateway& gateway,
                        GlaStats& stats) {
    const std::size_t k = communities.size();
    if (target < 1) throw ConfigError("fusion target must be >= 1");
    FusionResult out;
    out.cluster_of.resize(k);
    std::iota(out.cluster_of.begin(), out.cluster_of.end(), 0);
    out.cluster_label = labels;

    // Per cluster: sum of unit embeddings and size, so that the mean pairwise
    // cosine is a dot product of sums over the size product.
    Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(k), embeddings.cols());
    std::vector<double> sizes(k, 0.0);
    std::vector<std::vector<int>> parts(k);
    for (std::size_t c = 0; c < k; ++c) {
        for (NodeIndex v : communities[c]) {
            const auto row = embeddings.row(static_cast<Eigen::Index>(v));
            const double n = row.norm();
            if (n > 0.0) sums.row(static_cast<Eigen::Index>(c)) += row / n;
        }
        sizes[c] = static_cast<double>(communities[c].size());
        parts[c] = {static_cast<int>(c)};
    }
    std::vector<std::size_t> active(k);
    std::iota(active.begin(), active.end(), 0);

    while (active.size() > target) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 1;
        for (std::size_t x = 0; x < active.size(); ++x)
            for (std::size_t y = x + 1; y < active.size(); ++y) {
                const auto i = static_cast<Eigen::Index>(active[x]), j = static_cast<Eigen::Index>(active[y]);
                const double sim = sums.row(i).dot(sums.row(j)) / (sizes[active[x]] * sizes[active[y]]);
                if (sim > best) {
                    best = sim;
                    bi = x;
                    bj = y;
                }
            }
        const std::size_t i = active[bi], j = active[bj];
        const std::string fused = gateway.fuse(out.cluster_label[i], out.cluster_label[j]);
        ++stats.fusion_calls;
        sums.row(static_cast<Eigen::Index>(i)) += sums.row(static_cast<Eigen::Index>(j));
        sizes[i] += sizes[j];
        parts[i].insert(parts[i].end(), parts[j].begin(), parts[j].end());
        std::sort(parts[i].begin(), parts[i].end());
        out.cluster_label[i] = fused;
        for (int c : parts[i]) out.cluster_of[static_cast<std::size_t>(c)] = static_cast<int>(i);
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
        out.trace.push_back({parts[i], fused});
    }
    return out;
}

Partition detect_rejected_communities(const TextAttributedGraph& graph, const Matrix& embeddings,
                                      std::span<const NodeIndex> rejected, const GlaConfig& config) {
    config.validate();
    const auto sub = induced_subgraph(graph, rejected);
    Matrix rows(static_cast<Eigen::Index>(rejected.size()), embeddings.cols());
    for (std::size_t t = 0; t < rejected.size(); ++t)
        rows.row(static_cast<Eigen::Index>(t)) = embeddings.row(static_cast<Eigen::Index>(rejected[t]));
    return detect_communities(sub, rows, config.gamma, config.seed, config.restarts);
}

GlaResult annotate_partition(const TextAttributedGraph& graph, const Matrix& embeddings,
                             std::span<const NodeIndex> rejected, Partition partition,
                             const GlaConfig& config, std::size_t known_classes, llm::Gateway& gateway) {
    config.validate();
    if (partition.assignment.size() != rejected.size())
        throw DataError("partition covers " + std::to_string(partition.assignment.size()) +
                        " nodes but " + std::to_string(rejected.size()) + " are rejected");
    GlaResult result;
    result.rejected.assign(rejected.begin(), rejected.end());
    result.partition = std::move(partition);
    if (rejected.empty()) return result;

    const auto sub = induced_subgraph(graph, rejected);
    Matrix rows(static_cast<Eigen::Index>(rejected.size()), embeddings.cols());
    for (std::size_t t = 0; t < rejected.size(); ++t)
        rows.row(static_cast<Eigen::Index>(t)) = embeddings.row(static_cast<Eigen::Index>(rejected[t]));
    const auto degrees = sub.degrees();
    const auto communities = result.partition.members();

    std::vector<std::string> labels(sub.node_count());
    std::vector<Provenance> provenance(sub.node_count(), Provenance::llm);
    std::vector<DegreeSplit> splits;
    for (const auto& members : communities) splits.push_back(split_by_degree(members, degrees, config.split_by_mean));

    // Low-degree seeds of every community, issued as one bounded batch.
    std::vector<llm::Request> requests;
    std::vector<NodeIndex> seeds;
    for (const auto& split : splits)
        for (NodeIndex v : split.low) {
            if (sub.text(v).empty()) throw DataError("node " + std::to_string(sub.node_id(v)) + " has empty text");
            std::vector<std::string> context;
            for (NodeIndex u : context_neighbors(sub, rows, v, config.neighbor_context_cap))
                context.emplace_back(sub.text(u));
            requests.push_back(llm::Request::annotate(std::string(sub.text(v)), std::move(context)));
            seeds.push_back(v);
        }
    const auto answers = gateway.call_all(requests);
    for (std::size_t t = 0; t < seeds.size(); ++t) labels[seeds[t]] = answers[t].front();
    result.stats.low_seeds = seeds.size();

    // High-degree nodes after all seeds, ascending degree within each community.
    for (const auto& split : splits)
        for (NodeIndex v : split.high) {
            if (auto label = allocate_label(sub, rows, v, labels)) {
                labels[v] = *label;
                provenance[v] = Provenance::allocated;
            } else {
                std::vector<std::string> context;
                for (NodeIndex u : context_neighbors(sub, rows, v, config.neighbor_context_cap))
                    context.emplace_back(sub.text(u));
                labels[v] = gateway.annotate(std::string(sub.text(v)), context);
                ++result.stats.fallbacks;
            }
        }

    auto& ledger = result.ledger;
    for (const auto& members : communities) {
        std::vector<std::string> rep_labels;
        for (NodeIndex v : select_representatives(sub, rows, members, config.representatives))
            rep_labels.push_back(labels[v]);
        ledger.community_labels.push_back(gateway.distill(rep_labels));
        ++result.stats.distill_calls;
    }

    const std::size_t target = config.fusion_target ? config.fusion_target : std::max<std::size_t>(known_classes, 1);
    const auto fusion = fuse_until(rows, communities, ledger.community_labels, target, gateway, result.stats);
    ledger.fusion_trace = fusion.trace;

    for (NodeIndex v = 0; v < sub.node_count(); ++v) {
        const auto c = static_cast<std::size_t>(result.partition.assignment[v]);
        const auto cluster = static_cast<std::size_t>(fusion.cluster_of[c]);
        bool merged = false;
        for (std::size_t o = 0; o < communities.size(); ++o)
            if (o != c && static_cast<std::size_t>(fusion.cluster_of[o]) == cluster) merged = true;
        ledger.nodes.push_back({sub.node_id(v), labels[v], provenance[v], fusion.cluster_label[cluster],
                                merged ? Provenance::fused : Provenance::distilled});
    }
    std::sort(ledger.nodes.begin(), ledger.nodes.end(),
              [](const NodeEntry& a, const NodeEntry& b) { return a.id < b.id; });
    return result;
}

GlaResult run_gla(const TextAttributedGraph& graph, const Matrix& embeddings, std::span<const NodeIndex> rejected,
                  const GlaConfig& config, std::size_t known_classes, llm::Gateway& gateway) {
    auto partition = detect_rejected_communities(graph, embeddings, rejected, config);
    return annotate_partition(graph, embeddings, rejected, std::move(partition), config, known_classes, gateway);
}

} // namespace oga::gla
