#pragma once

// Graph label annotation for rejected nodes: semantic-enhanced community
// detection, degree-guided annotation, per-community distillation and
// greedy fusion of similar communities.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oga/fields.hpp"
#include "oga/graph.hpp"
#include "oga/llm.hpp"

namespace oga::gla {

struct GlaConfig {
    double gamma = 0.6;                   ///< semantic weight of the modularity
    std::size_t representatives = 3;      ///< per community, for distillation
    std::size_t neighbor_context_cap = 5; ///< neighbour texts per annotation prompt
    std::size_t fusion_target = 0;        ///< final label count; 0 = number of known classes
    bool split_by_mean = false;           ///< degree threshold: median (default) or mean
    int restarts = 4;                     ///< community detection runs, best kept
    std::uint64_t seed = 0;

    void validate() const;
};

/// Config-file bindings for every field except the seed.
FieldList fields(GlaConfig& config);

struct Partition {
    std::vector<int> assignment; ///< community per node, dense ids from 0
    double gamma = 0.0;
    double q = 0.0;              ///< NaN when the graph has no edges

    std::size_t community_count() const;
    std::vector<std::vector<NodeIndex>> members() const;
};

/// Renumbers community ids densely in order of first appearance.
std::vector<int> canonical(std::span<const int> assignment);

/// (1/2m) sum_{i,j} [A_ij + gamma cos(e_i, e_j) - (1 - gamma) d_i d_j / 2m] delta(c_i, c_j)
/// over ordered pairs including i = j (cos(e_i, e_i) = 1).  Throws DataError
/// when the graph has no edges.
double semantic_modularity(const TextAttributedGraph& graph, const Matrix& embeddings,
                           std::span<const int> assignment, double gamma);

/// Louvain-style local moving and aggregation; the best of `restarts`
/// seeded runs.  A graph without edges yields singletons with q = NaN.
Partition detect_communities(const TextAttributedGraph& graph, const Matrix& embeddings,
                             double gamma, std::uint64_t seed, int restarts = 4);

struct DegreeSplit {
    std::vector<NodeIndex> low;  ///< ascending degree, then id
    std::vector<NodeIndex> high; ///< ascending degree, then id
};

/// low = {d < median} (or mean); when empty, the lowest-id node of minimum
/// degree is moved to low.
DegreeSplit split_by_degree(std::span<const NodeIndex> community, std::span<const std::size_t> degrees,
                            bool use_mean = false);

/// Up to `cap` neighbours of `node`, highest embedding cosine first, lowest id on ties.
std::vector<NodeIndex> context_neighbors(const TextAttributedGraph& graph, const Matrix& embeddings,
                                         NodeIndex node, std::size_t cap);

/// Cosine-weighted vote over labelled neighbours; empty when none is labelled.
std::optional<std::string> allocate_label(const TextAttributedGraph& graph, const Matrix& embeddings,
                                          NodeIndex node, std::span<const std::string> labels);

/// Top `count` members by mean Jaccard-plus-cosine affinity to the other
/// members, lowest id on ties; all members when count >= size.
std::vector<NodeIndex> select_representatives(const TextAttributedGraph& graph, const Matrix& embeddings,
                                              std::span<const NodeIndex> community, std::size_t count);

/// Mean pairwise cosine across the two memberships.
double community_similarity(const Matrix& embeddings, std::span<const NodeIndex> a,
                            std::span<const NodeIndex> b);

enum class Provenance { llm, allocated, distilled, fused };
std::string_view provenance_name(Provenance p);

struct NodeEntry {
    std::int64_t id = 0;
    std::string node_label;            ///< from annotation or allocation
    Provenance node_provenance = Provenance::llm;
    std::string label;                 ///< final label
    Provenance provenance = Provenance::distilled;
};

struct FusionStep {
    std::vector<int> merged; ///< community ids now sharing the label
    std::string label;
};

struct Ledger {
    std::vector<NodeEntry> nodes;          ///< sorted by id
    std::vector<std::string> community_labels; ///< distilled label per community
    std::vector<FusionStep> fusion_trace;
};

/// Requests issued per category; with the gateway cache off their sum equals
/// the gateway counter.
struct GlaStats {
    std::uint64_t low_seeds = 0;
    std::uint64_t fallbacks = 0;
    std::uint64_t distill_calls = 0;
    std::uint64_t fusion_calls = 0;
    std::uint64_t total() const noexcept { return low_seeds + fallbacks + distill_calls + fusion_calls; }
};

/// Greedy fusion state over communities; exposed for tests.
struct FusionResult {
    std::vector<int> cluster_of;           ///< community -> cluster representative (smallest id)
    std::vector<std::string> cluster_label; ///< indexed by community id of the representative
    std::vector<FusionStep> trace;
};

FusionResult fuse_until(const Matrix& embeddings, const std::vector<std::vector<NodeIndex>>& communities,
                        const std::vector<std::string>& labels, std::size_t target, llm::Gateway& gateway,
                        GlaStats& stats);

struct GlaResult {
    Partition partition;       ///< over `rejected`, in that order
    std::vector<NodeIndex> rejected;
    Ledger ledger;
    GlaStats stats;
};

/// Full annotation of the rejected nodes of `graph`.  `embeddings` has one
/// row per graph node.  fusion_target 0 means `known_classes`.
GlaResult run_gla(const TextAttributedGraph& graph, const Matrix& embeddings,
                  std::span<const NodeIndex> rejected, const GlaConfig& config, std::size_t known_classes,
                  llm::Gateway& gateway);

/// Community detection stage alone, on the subgraph induced by `rejected`.
Partition detect_rejected_communities(const TextAttributedGraph& graph, const Matrix& embeddings,
                                      std::span<const NodeIndex> rejected, const GlaConfig& config);

/// Annotation, distillation and fusion for a given partition of `rejected`.
GlaResult annotate_partition(const TextAttributedGraph& graph, const Matrix& embeddings,
                             std::span<const NodeIndex> rejected, Partition partition,
                             const GlaConfig& config, std::size_t known_classes, llm::Gateway& gateway);

// JSON artifacts (layouts in docs/formats.md).
void write_communities_json(const std::filesystem::path& path, const TextAttributedGraph& graph,
                            std::span<const NodeIndex> rejected, const Partition& partition);
/// Returns the partition and fills `rejected` with the node indices in file order.
Partition read_communities_json(const std::filesystem::path& path, const TextAttributedGraph& graph,
                                std::vector<NodeIndex>& rejected);
void write_ledger_json(const std::filesystem::path& path, const Ledger& ledger, const GlaStats& stats);
Ledger read_ledger_json(const std::filesystem::path& path, GlaStats* stats = nullptr);

} // namespace oga::gla
