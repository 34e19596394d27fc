#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include "oga/csv.hpp"
#include "oga/error.hpp"
#include "oga/eval.hpp"
#include "oga/random.hpp"

namespace oga::eval {

namespace {

// Two topic words per class; the ideal label is "first_second".
constexpr std::pair<const char*, const char*> kTopics[] = {
    {"neural", "network"},    {"genetic", "algorithm"}, {"rule", "learning"},     {"reinforcement", "policy"},
    {"probabilistic", "model"}, {"case", "reasoning"},  {"theory", "proof"},      {"graph", "mining"},
    {"speech", "signal"},     {"image", "segment"},     {"protein", "structure"}, {"market", "price"},
    {"query", "database"},    {"robot", "motion"},      {"compiler", "optimize"}, {"climate", "forecast"},
};

constexpr const char* kFiller[] = {
    "study",   "novel",   "approach", "results", "experiment", "framework", "analysis", "evaluate",
    "propose", "method",  "dataset",  "improve", "baseline",   "efficient", "robust",   "scalable",
    "simple",  "general", "task",     "problem", "system",     "design",    "paper",    "empirical",
    "report",  "survey",  "setting",  "variant", "benchmark",  "measure",   "accurate", "practical",
};

const char* split_name(Split s) {
    switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    }
    return "?";
}

} // namespace

void SyntheticSpec::validate() const {
    constexpr int max_classes = static_cast<int>(std::size(kTopics));
    if (classes < 1 || classes > max_classes)
        throw ConfigError("synth_classes must lie in [1, " + std::to_string(max_classes) + "]");
    if (unknown_holdout < 0 || unknown_holdout >= classes)
        throw ConfigError("synth_unknown_holdout must lie in [0, synth_classes)");
    if (nodes_per_class < 1) throw ConfigError("synth_nodes_per_class must be >= 1");
    if (!(p_inter >= 0.0 && p_inter <= p_intra && p_intra <= 1.0))
        throw ConfigError("synth edge probabilities need 0 <= p_inter <= p_intra <= 1");
    if (!(separation >= 0.0)) throw ConfigError("synth_separation must be >= 0");
    if (!(noise >= 0.0)) throw ConfigError("synth_noise must be >= 0");
    if (dim < static_cast<std::size_t>(classes)) throw ConfigError("synth_dim must be >= synth_classes");
}

FieldList fields(SyntheticSpec& s) {
    return {
        {"synth_classes", &s.classes},
        {"synth_unknown_holdout", &s.unknown_holdout},
        {"synth_nodes_per_class", &s.nodes_per_class},
        {"synth_p_intra", &s.p_intra},
        {"synth_p_inter", &s.p_inter},
        {"synth_separation", &s.separation},
        {"synth_noise", &s.noise},
        {"synth_dim", &s.dim},
    };
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const auto c = static_cast<std::size_t>(spec.classes);
    const std::size_t n = c * spec.nodes_per_class;
    SyntheticData out;
    out.unknown = spec.unknown_holdout;
    for (std::size_t k = 0; k < c; ++k)
        out.topics.push_back(std::string(kTopics[k].first) + "_" + kTopics[k].second);
    out.truth.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.truth[i] = static_cast<int>(i / spec.nodes_per_class);

    // 40/20/40 inside each class.
    out.split.assign(n, Split::test);
    {
        Rng rng = make_rng(spec.seed, {0});
        const std::size_t m = spec.nodes_per_class;
        const auto train = static_cast<std::size_t>(std::llround(0.4 * static_cast<double>(m)));
        const auto val = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(m)));
        for (std::size_t k = 0; k < c; ++k) {
            std::vector<std::size_t> order(m);
            std::iota(order.begin(), order.end(), k * m);
            std::shuffle(order.begin(), order.end(), rng);
            for (std::size_t t = 0; t < m; ++t)
                out.split[order[t]] = t < train ? Split::train : t < train + val ? Split::val : Split::test;
        }
    }

    std::vector<std::pair<std::int64_t, std::int64_t>> edges;
    {
        Rng rng = make_rng(spec.seed, {1});
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (u(rng) < (out.truth[i] == out.truth[j] ? spec.p_intra : spec.p_inter))
                    edges.emplace_back(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j));
    }

    std::vector<NodeRecord> nodes;
    {
        Rng rng = make_rng(spec.seed, {2});
        std::uniform_int_distribution<std::size_t> filler(0, std::size(kFiller) - 1);
        for (std::size_t i = 0; i < n; ++i) {
            const auto k = static_cast<std::size_t>(out.truth[i]);
            const std::string a = kTopics[k].first, b = kTopics[k].second;
            // Topic words twice, three filler words once: the two most
            // frequent content words name the class.
            std::string text = a + " " + b + " " + kFiller[filler(rng)] + " with " + a + " " + kFiller[filler(rng)] +
                               " for " + b + " " + kFiller[filler(rng)];
            const bool labeled = out.truth[i] < out.known_classes() && out.split[i] == Split::train;
            nodes.push_back({static_cast<std::int64_t>(i), labeled ? out.topics[k] : "", std::move(text)});
        }
    }
    out.graph = TextAttributedGraph(std::move(nodes), edges);

    Rng rng = make_rng(spec.seed, {3});
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix e(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(spec.dim));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < spec.dim; ++d)
            e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) =
                (static_cast<int>(d) == out.truth[i] ? spec.separation : 0.0) + spec.noise * gauss(rng);
    out.embeddings.values = std::move(e);
    return out;
}

GroundTruth truth_of(const SyntheticData& data) {
    GroundTruth g{data.truth, data.topics, data.split, {}};
    for (std::size_t k = 0; k < data.topics.size(); ++k) g.unknown.push_back(static_cast<int>(k) >= data.known_classes());
    return g;
}

void write_truth_csv(const std::filesystem::path& path, const SyntheticData& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    csv::write_row(out, {"node_id", "class", "split"});
    for (NodeIndex i = 0; i < data.graph.node_count(); ++i)
        csv::write_row(out, {std::to_string(data.graph.node_id(i)), data.topics[static_cast<std::size_t>(data.truth[i])],
                             split_name(data.split[i])});
    if (!out) throw DataError("write failed for " + path.string());
}

GroundTruth read_truth_csv(const std::filesystem::path& path, const TextAttributedGraph& graph) {
    const auto rows = csv::read_file(path, {"node_id", "class", "split"});
    if (rows.size() != graph.node_count())
        throw DataError(path.string() + ": " + std::to_string(rows.size()) + " rows for " +
                        std::to_string(graph.node_count()) + " nodes");
    GroundTruth g;
    g.truth.assign(graph.node_count(), -1);
    g.split.assign(graph.node_count(), Split::test);
    std::vector<std::string> names;
    for (const auto& row : rows) names.push_back(row[1]);
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    g.topics = names;
    for (const auto& row : rows) {
        std::int64_t id = 0;
        try {
            id = std::stoll(row[0]);
        } catch (const std::exception&) {
            throw DataError(path.string() + ": bad node_id `" + row[0] + "`");
        }
        const auto idx = graph.index_of(id);
        if (!idx || g.truth[*idx] >= 0) throw DataError(path.string() + ": unknown or repeated node_id " + row[0]);
        g.truth[*idx] = static_cast<int>(std::lower_bound(names.begin(), names.end(), row[1]) - names.begin());
        if (row[2] == "train") g.split[*idx] = Split::train;
        else if (row[2] == "val") g.split[*idx] = Split::val;
        else if (row[2] == "test") g.split[*idx] = Split::test;
        else throw DataError(path.string() + ": split must be train, val or test, got `" + row[2] + "`");
    }
    for (const auto& name : names) g.unknown.push_back(!graph.class_of(name).has_value());
    return g;
}

} // namespace oga::eval
