#include <json.hpp>

#include <cmath>
#include <fstream>

#include "oga/error.hpp"
#include "oga/gla.hpp"

namespace oga::gla {

using nlohmann::json;

namespace {

void write_json(const std::filesystem::path& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
    if (!out) throw DataError("write failed for " + path.string());
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

Provenance parse_provenance(const std::string& s, const std::string& where) {
    for (auto p : {Provenance::llm, Provenance::allocated, Provenance::distilled, Provenance::fused})
        if (provenance_name(p) == s) return p;
    throw FormatError(where + ": unknown provenance `" + s + "`");
}

} // namespace

void write_communities_json(const std::filesystem::path& path, const TextAttributedGraph& graph,
                            std::span<const NodeIndex> rejected, const Partition& partition) {
    if (partition.assignment.size() != rejected.size()) throw DataError("partition and rejected set differ in size");
    json doc;
    doc["gamma"] = partition.gamma;
    doc["q"] = std::isnan(partition.q) ? json(nullptr) : json(partition.q);
    doc["community_count"] = partition.community_count();
    json rows = json::array();
    for (std::size_t t = 0; t < rejected.size(); ++t)
        rows.push_back(json::array({graph.node_id(rejected[t]), partition.assignment[t]}));
    doc["assignment"] = std::move(rows);
    write_json(path, doc);
}

Partition read_communities_json(const std::filesystem::path& path, const TextAttributedGraph& graph,
                                std::vector<NodeIndex>& rejected) {
    const auto doc = read_json(path);
    const std::string where = path.string();
    Partition p;
    rejected.clear();
    try {
        p.gamma = doc.at("gamma").get<double>();
        p.q = doc.at("q").is_null() ? std::nan("") : doc.at("q").get<double>();
        std::vector<bool> seen(graph.node_count(), false);
        for (const auto& row : doc.at("assignment")) {
            if (!row.is_array() || row.size() != 2) throw FormatError(where + ": assignment rows are [node_id, community]");
            const auto id = row.at(0).get<std::int64_t>();
            const auto idx = graph.index_of(id);
            if (!idx || seen[*idx]) throw FormatError(where + ": unknown or repeated node_id " + std::to_string(id));
            seen[*idx] = true;
            const int c = row.at(1).get<int>();
            if (c < 0) throw FormatError(where + ": negative community id");
            rejected.push_back(*idx);
            p.assignment.push_back(c);
        }
    } catch (const json::exception& e) {
        throw FormatError(where + ": " + e.what());
    }
    if (canonical(p.assignment) != p.assignment)
        throw FormatError(where + ": community ids are not dense in order of first appearance");
    return p;
}

void write_ledger_json(const std::filesystem::path& path, const Ledger& ledger, const GlaStats& stats) {
    json nodes = json::array();
    for (const auto& n : ledger.nodes)
        nodes.push_back({{"id", n.id},
                         {"label", n.label},
                         {"provenance", provenance_name(n.provenance)},
                         {"node_label", n.node_label},
                         {"node_provenance", provenance_name(n.node_provenance)}});
    json communities = json::array();
    for (std::size_t c = 0; c < ledger.community_labels.size(); ++c)
        communities.push_back({{"id", c}, {"label", ledger.community_labels[c]}});
    json trace = json::array();
    for (const auto& step : ledger.fusion_trace) trace.push_back({{"merged", step.merged}, {"label", step.label}});
    json doc = {{"nodes", std::move(nodes)},
                {"communities", std::move(communities)},
                {"fusion_trace", std::move(trace)},
                {"calls",
                 {{"low_seeds", stats.low_seeds},
                  {"fallbacks", stats.fallbacks},
                  {"distill", stats.distill_calls},
                  {"fusion", stats.fusion_calls},
                  {"total", stats.total()}}}};
    write_json(path, doc);
}

Ledger read_ledger_json(const std::filesystem::path& path, GlaStats* stats) {
    const auto doc = read_json(path);
    const std::string where = path.string();
    Ledger ledger;
    try {
        for (const auto& n : doc.at("nodes"))
            ledger.nodes.push_back({n.at("id").get<std::int64_t>(), n.at("node_label").get<std::string>(),
                                    parse_provenance(n.at("node_provenance").get<std::string>(), where),
                                    n.at("label").get<std::string>(),
                                    parse_provenance(n.at("provenance").get<std::string>(), where)});
        const auto& communities = doc.at("communities");
        for (std::size_t c = 0; c < communities.size(); ++c) {
            if (communities[c].at("id").get<std::size_t>() != c)
                throw FormatError(where + ": community ids must be 0..k-1 in order");
            ledger.community_labels.push_back(communities[c].at("label").get<std::string>());
        }
        for (const auto& s : doc.at("fusion_trace"))
            ledger.fusion_trace.push_back({s.at("merged").get<std::vector<int>>(), s.at("label").get<std::string>()});
        if (stats) {
            const auto& calls = doc.at("calls");
            stats->low_seeds = calls.at("low_seeds").get<std::uint64_t>();
            stats->fallbacks = calls.at("fallbacks").get<std::uint64_t>();
            stats->distill_calls = calls.at("distill").get<std::uint64_t>();
            stats->fusion_calls = calls.at("fusion").get<std::uint64_t>();
        }
    } catch (const json::exception& e) {
        throw FormatError(where + ": " + e.what());
    }
    return ledger;
}

} // namespace oga::gla
