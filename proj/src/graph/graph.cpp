#include "oga/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <unordered_set>

#include "oga/csv.hpp"
#include "oga/error.hpp"
#include "oga/random.hpp"

namespace oga {

namespace {

std::int64_t parse_node_id(const std::string& field, const std::string& context) {
    std::int64_t value = 0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || field.empty() || value < 0)
        throw FormatError(context + ": `" + field + "` is not a non-negative integer node id");
    return value;
}

} // namespace

TextAttributedGraph::TextAttributedGraph(
    std::vector<NodeRecord> nodes, const std::vector<std::pair<std::int64_t, std::int64_t>>& edges) {
    const std::size_t n = nodes.size();
    node_ids_.reserve(n);
    texts_.reserve(n);
    index_.reserve(n);

    std::set<std::string> vocabulary;
    for (std::size_t i = 0; i < n; ++i) {
        auto& rec = nodes[i];
        if (rec.id < 0) throw DataError("negative node id " + std::to_string(rec.id));
        if (!index_.emplace(rec.id, i).second)
            throw DataError("duplicate node_id " + std::to_string(rec.id));
        if (!csv::is_valid_utf8(rec.text))
            throw DataError("node " + std::to_string(rec.id) + ": text is not valid UTF-8");
        if (!csv::is_valid_utf8(rec.label))
            throw DataError("node " + std::to_string(rec.id) + ": label is not valid UTF-8");
        if (!rec.label.empty()) vocabulary.insert(rec.label);
        node_ids_.push_back(rec.id);
        texts_.push_back(std::move(rec.text));
    }
    class_names_.assign(vocabulary.begin(), vocabulary.end());
    labels_.assign(n, kNoClass);
    for (std::size_t i = 0; i < n; ++i) {
        if (nodes[i].label.empty()) continue;
        labels_[i] = static_cast<ClassId>(
            std::lower_bound(class_names_.begin(), class_names_.end(), nodes[i].label) -
            class_names_.begin());
    }

    edges_.reserve(edges.size());
    for (const auto& [src, dst] : edges) {
        auto a = index_of(src);
        if (!a) throw DataError("edge endpoint " + std::to_string(src) + " is not in the node table");
        auto b = index_of(dst);
        if (!b) throw DataError("edge endpoint " + std::to_string(dst) + " is not in the node table");
        if (*a == *b) {
            ++dropped_self_loops_;
            continue;
        }
        edges_.push_back({std::min(*a, *b), std::max(*a, *b)});
    }
    std::sort(edges_.begin(), edges_.end(),
              [](const Edge& x, const Edge& y) { return x.u != y.u ? x.u < y.u : x.v < y.v; });
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

    offsets_.assign(n + 1, 0);
    for (const auto& e : edges_) {
        ++offsets_[e.u + 1];
        ++offsets_[e.v + 1];
    }
    for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] += offsets_[i];
    adjacency_.resize(offsets_[n]);
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (const auto& e : edges_) {
        adjacency_[cursor[e.u]++] = e.v;
        adjacency_[cursor[e.v]++] = e.u;
    }
    for (std::size_t i = 0; i < n; ++i)
        std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
                  adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]));
}

std::optional<NodeIndex> TextAttributedGraph::index_of(std::int64_t id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::optional<ClassId> TextAttributedGraph::class_of(std::string_view name) const {
    auto it = std::lower_bound(class_names_.begin(), class_names_.end(), name);
    if (it == class_names_.end() || *it != name) return std::nullopt;
    return static_cast<ClassId>(it - class_names_.begin());
}

std::vector<NodeIndex> TextAttributedGraph::labeled_nodes() const {
    std::vector<NodeIndex> out;
    for (NodeIndex i = 0; i < node_count(); ++i)
        if (labels_[i] != kNoClass) out.push_back(i);
    return out;
}

std::vector<std::size_t> TextAttributedGraph::degrees() const {
    std::vector<std::size_t> out(node_count());
    for (NodeIndex i = 0; i < node_count(); ++i) out[i] = degree(i);
    return out;
}

std::vector<NodeRecord> TextAttributedGraph::node_records() const {
    std::vector<NodeRecord> out;
    out.reserve(node_count());
    for (NodeIndex i = 0; i < node_count(); ++i)
        out.push_back({node_ids_[i], labels_[i] == kNoClass ? std::string() : class_names_[labels_[i]],
                       texts_[i]});
    return out;
}

TextAttributedGraph load_graph(const std::filesystem::path& nodes_path,
                               const std::filesystem::path& edges_path) {
    auto node_rows = csv::read_file(nodes_path, {"node_id", "label", "text"});
    std::vector<NodeRecord> nodes;
    nodes.reserve(node_rows.size());
    for (std::size_t r = 0; r < node_rows.size(); ++r) {
        auto& row = node_rows[r];
        nodes.push_back({parse_node_id(row[0], nodes_path.string() + " row " + std::to_string(r + 2)),
                         std::move(row[1]), std::move(row[2])});
    }

    auto edge_rows = csv::read_file(edges_path, {"src", "dst"});
    std::vector<std::pair<std::int64_t, std::int64_t>> edges;
    edges.reserve(edge_rows.size());
    for (std::size_t r = 0; r < edge_rows.size(); ++r) {
        const std::string ctx = edges_path.string() + " row " + std::to_string(r + 2);
        edges.emplace_back(parse_node_id(edge_rows[r][0], ctx), parse_node_id(edge_rows[r][1], ctx));
    }

    TextAttributedGraph graph(std::move(nodes), edges);
    if (graph.dropped_self_loops() > 0)
        std::clog << "warning: dropped " << graph.dropped_self_loops() << " self-loop edge(s) from "
                  << edges_path.string() << '\n';
    return graph;
}

void save_graph(const TextAttributedGraph& graph, const std::filesystem::path& nodes_path,
                const std::filesystem::path& edges_path) {
    std::ofstream nodes(nodes_path, std::ios::binary);
    if (!nodes) throw DataError("cannot write " + nodes_path.string());
    csv::write_row(nodes, {"node_id", "label", "text"});
    for (const auto& rec : graph.node_records())
        csv::write_row(nodes, {std::to_string(rec.id), rec.label, rec.text});

    std::ofstream edges(edges_path, std::ios::binary);
    if (!edges) throw DataError("cannot write " + edges_path.string());
    csv::write_row(edges, {"src", "dst"});
    for (const auto& e : graph.edges())
        csv::write_row(edges, {std::to_string(graph.node_id(e.u)), std::to_string(graph.node_id(e.v))});
}

TextAttributedGraph induced_subgraph(const TextAttributedGraph& graph,
                                     std::span<const NodeIndex> nodes) {
    std::vector<NodeRecord> records;
    records.reserve(nodes.size());
    std::unordered_set<NodeIndex> members(nodes.begin(), nodes.end());
    for (NodeIndex i : nodes) {
        auto label = graph.label(i);
        records.push_back({graph.node_id(i), label ? graph.class_names()[*label] : std::string(),
                           graph.text(i)});
    }
    std::vector<std::pair<std::int64_t, std::int64_t>> edges;
    for (const auto& e : graph.edges())
        if (members.count(e.u) && members.count(e.v))
            edges.emplace_back(graph.node_id(e.u), graph.node_id(e.v));
    return TextAttributedGraph(std::move(records), edges);
}

NormalizedAdjacencyOperator build_operator(const TextAttributedGraph& graph, double r) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("kernel exponent r must lie in [0, 1]");
    const std::size_t n = graph.node_count();
    std::vector<double> left(n), right(n);
    for (NodeIndex i = 0; i < n; ++i) {
        const double d = static_cast<double>(graph.degree(i) + 1);
        left[i] = std::pow(d, r - 1.0);
        right[i] = std::pow(d, -r);
    }
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(n + 2 * graph.edge_count());
    for (NodeIndex i = 0; i < n; ++i) {
        triplets.emplace_back(static_cast<int>(i), static_cast<int>(i), left[i] * right[i]);
        for (NodeIndex j : graph.neighbors(i))
            triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), left[i] * right[j]);
    }
    NormalizedAdjacencyOperator op;
    op.r = r;
    op.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    op.matrix.setFromTriplets(triplets.begin(), triplets.end());
    op.matrix.makeCompressed();
    return op;
}

namespace {

// Breadth-first order up to `max_hop`; layer_end[h] marks the end of hop h.
void bfs_layers(const TextAttributedGraph& graph, NodeIndex center, int max_hop,
                std::vector<NodeIndex>& order, std::vector<std::size_t>& layer_end) {
    order.assign(1, center);
    layer_end.assign(1, 1);
    std::unordered_set<NodeIndex> seen{center};
    std::size_t begin = 0;
    for (int h = 1; h <= max_hop; ++h) {
        const std::size_t end = order.size();
        for (std::size_t p = begin; p < end; ++p)
            for (NodeIndex j : graph.neighbors(order[p]))
                if (seen.insert(j).second) order.push_back(j);
        begin = end;
        layer_end.push_back(order.size());
        if (order.size() == end) {
            // Ball stopped growing; later hops are identical.
            for (int rest = h + 1; rest <= max_hop; ++rest) layer_end.push_back(order.size());
            break;
        }
    }
}

std::vector<NodeIndex> subsample(std::span<const NodeIndex> ball, std::size_t max_size,
                                 std::uint64_t seed) {
    std::vector<NodeIndex> out;
    if (ball.size() <= max_size) {
        out.assign(ball.begin(), ball.end());
    } else {
        // Keep the centre, draw max_size - 1 of the others (Floyd's method).
        const std::size_t pool = ball.size() - 1;
        const std::size_t take = max_size - 1;
        Rng rng(seed);
        std::unordered_set<std::size_t> picked;
        std::vector<std::size_t> chosen;
        chosen.reserve(take);
        for (std::size_t j = pool - take; j < pool; ++j) {
            std::uniform_int_distribution<std::size_t> pick(0, j);
            std::size_t t = pick(rng);
            if (!picked.insert(t).second) {
                picked.insert(j);
                t = j;
            }
            chosen.push_back(t);
        }
        out.push_back(ball[0]);
        for (std::size_t t : chosen) out.push_back(ball[1 + t]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

void check_sample_args(const TextAttributedGraph& graph, NodeIndex node, int hop,
                       std::size_t max_size) {
    if (node >= graph.node_count())
        throw DataError("node index " + std::to_string(node) + " is out of range");
    if (hop < 1) throw ConfigError("neighbourhood hop must be >= 1");
    if (max_size < 1) throw ConfigError("neighbourhood max_size must be >= 1");
}

} // namespace

std::vector<NodeIndex> sample_neighborhood(const TextAttributedGraph& graph, NodeIndex node,
                                           int hop, std::size_t max_size, std::uint64_t seed) {
    check_sample_args(graph, node, hop, max_size);
    std::vector<NodeIndex> order;
    std::vector<std::size_t> layer_end;
    bfs_layers(graph, node, hop, order, layer_end);
    return subsample(std::span(order).first(layer_end[static_cast<std::size_t>(hop)]), max_size,
                     seed);
}

NeighborhoodIndex::NeighborhoodIndex(const TextAttributedGraph& graph,
                                     std::span<const NodeIndex> centers, int max_hop)
    : max_hop_(max_hop) {
    if (max_hop < 1) throw ConfigError("neighbourhood hop must be >= 1");
    for (NodeIndex c : centers) {
        check_sample_args(graph, c, max_hop, 1);
        if (balls_.count(c)) continue;
        Ball b;
        bfs_layers(graph, c, max_hop, b.order, b.layer_end);
        balls_.emplace(c, std::move(b));
    }
}

const NeighborhoodIndex::Ball& NeighborhoodIndex::ball(NodeIndex center) const {
    auto it = balls_.find(center);
    if (it == balls_.end())
        throw DataError("node index " + std::to_string(center) + " is not indexed");
    return it->second;
}

std::vector<NodeIndex> NeighborhoodIndex::sample(NodeIndex center, int hop, std::size_t max_size,
                                                 std::uint64_t seed) const {
    if (hop < 1 || hop > max_hop_) throw ConfigError("hop outside the indexed range");
    if (max_size < 1) throw ConfigError("neighbourhood max_size must be >= 1");
    const Ball& b = ball(center);
    return subsample(std::span(b.order).first(b.layer_end[static_cast<std::size_t>(hop)]), max_size,
                     seed);
}

std::size_t NeighborhoodIndex::ball_size(NodeIndex center, int hop) const {
    return ball(center).layer_end[static_cast<std::size_t>(std::min(hop, max_hop_))];
}

} // namespace oga
