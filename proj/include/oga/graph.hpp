#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace oga {

/// Dense internal node index (row order of the node table).
using NodeIndex = std::size_t;
/// Index into the graph's known-class vocabulary.
using ClassId = int;

inline constexpr ClassId kNoClass = -1;
inline constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Edge {
    NodeIndex u;
    NodeIndex v;
    friend bool operator==(const Edge&, const Edge&) = default;
};

/// One row of a node table before validation.
struct NodeRecord {
    std::int64_t id;
    std::string label; // empty = unlabeled
    std::string text;
};

/// Undirected text-attributed graph with partial labels.
///
/// Stored edges are deduplicated, oriented u < v and sorted; self-loops are
/// never stored.  Known classes are the distinct label strings sorted
/// lexicographically, so class ids do not depend on row order.  Immutable
/// after construction.
class TextAttributedGraph {
public:
    TextAttributedGraph() = default;

    /// Validates and builds.  `edges` refer to external node ids and may be
    /// duplicated or given in either orientation.
    TextAttributedGraph(std::vector<NodeRecord> nodes,
                        const std::vector<std::pair<std::int64_t, std::int64_t>>& edges);

    std::size_t node_count() const noexcept { return node_ids_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    std::span<const Edge> edges() const noexcept { return edges_; }

    std::span<const NodeIndex> neighbors(NodeIndex i) const {
        return {adjacency_.data() + offsets_[i], adjacency_.data() + offsets_[i + 1]};
    }
    std::size_t degree(NodeIndex i) const { return offsets_[i + 1] - offsets_[i]; }

    std::int64_t node_id(NodeIndex i) const { return node_ids_[i]; }
    std::optional<NodeIndex> index_of(std::int64_t id) const;
    const std::string& text(NodeIndex i) const { return texts_[i]; }

    std::optional<ClassId> label(NodeIndex i) const {
        return labels_[i] == kNoClass ? std::nullopt : std::optional<ClassId>(labels_[i]);
    }
    std::span<const ClassId> labels() const noexcept { return labels_; }
    std::span<const std::string> class_names() const noexcept { return class_names_; }
    std::size_t class_count() const noexcept { return class_names_.size(); }
    std::optional<ClassId> class_of(std::string_view name) const;

    std::vector<NodeIndex> labeled_nodes() const;
    std::vector<std::size_t> degrees() const;

    /// Number of self-loop rows discarded during construction.
    std::size_t dropped_self_loops() const noexcept { return dropped_self_loops_; }

    /// Rebuilds the node table in the original row order.
    std::vector<NodeRecord> node_records() const;

    friend bool operator==(const TextAttributedGraph& a, const TextAttributedGraph& b) {
        return a.node_ids_ == b.node_ids_ && a.texts_ == b.texts_ && a.labels_ == b.labels_ &&
               a.class_names_ == b.class_names_ && a.edges_ == b.edges_;
    }

private:
    std::vector<std::int64_t> node_ids_;
    std::vector<std::string> texts_;
    std::vector<ClassId> labels_;
    std::vector<std::string> class_names_;
    std::vector<Edge> edges_;
    std::vector<std::size_t> offsets_;
    std::vector<NodeIndex> adjacency_;
    std::unordered_map<std::int64_t, NodeIndex> index_;
    std::size_t dropped_self_loops_ = 0;
};

/// Loads `node_id,label,text` and `src,dst` CSV files.
TextAttributedGraph load_graph(const std::filesystem::path& nodes_path,
                               const std::filesystem::path& edges_path);

void save_graph(const TextAttributedGraph& graph, const std::filesystem::path& nodes_path,
                const std::filesystem::path& edges_path);

/// Subgraph induced by `nodes` (in the given order).  External ids, texts
/// and labels are carried over; the class vocabulary is kept as-is.
TextAttributedGraph induced_subgraph(const TextAttributedGraph& graph,
                                     std::span<const NodeIndex> nodes);

/// T = D^(r-1) (A + I) D^(-r) with D the degree matrix of A + I.
struct NormalizedAdjacencyOperator {
    SparseMatrix matrix;
    double r = 0.5;
};

NormalizedAdjacencyOperator build_operator(const TextAttributedGraph& graph, double r);

/// Nodes within `hop` hops of `node` (the node included), uniformly
/// subsampled to at most `max_size` while always keeping `node`.  Result is
/// sorted and deterministic for a given seed.
std::vector<NodeIndex> sample_neighborhood(const TextAttributedGraph& graph, NodeIndex node,
                                           int hop, std::size_t max_size, std::uint64_t seed);

/// Caches breadth-first orders for a fixed set of centres so repeated
/// sampling costs O(max_size) instead of a fresh traversal.  Produces the
/// same samples as sample_neighborhood for equal arguments.
class NeighborhoodIndex {
public:
    NeighborhoodIndex(const TextAttributedGraph& graph, std::span<const NodeIndex> centers,
                      int max_hop);

    std::vector<NodeIndex> sample(NodeIndex center, int hop, std::size_t max_size,
                                  std::uint64_t seed) const;

    /// Size of the full hop-ball around `center`.
    std::size_t ball_size(NodeIndex center, int hop) const;

private:
    struct Ball {
        std::vector<NodeIndex> order;       // BFS order, centre first
        std::vector<std::size_t> layer_end; // layer_end[h] = end of hops <= h
    };
    const Ball& ball(NodeIndex center) const;

    int max_hop_;
    std::unordered_map<NodeIndex, Ball> balls_;
};

} // namespace oga
