#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "oga/error.hpp"
#include "oga/eval.hpp"

namespace oga::eval {

using nlohmann::json;

namespace {

void check_sizes(const TextAttributedGraph& graph, const alt::RejectionOutcome& outcome, const GroundTruth& truth) {
    if (outcome.size() != graph.node_count() || truth.truth.size() != graph.node_count())
        throw DataError("outcome, truth and graph cover different node counts");
}

bool truth_unknown(const GroundTruth& truth, NodeIndex i) {
    return truth.unknown[static_cast<std::size_t>(truth.truth[i])];
}

} // namespace

double metric_accuracy(const TextAttributedGraph& graph, const alt::RejectionOutcome& outcome,
                       const GroundTruth& truth, bool exclude_rejected) {
    check_sizes(graph, outcome, truth);
    std::size_t total = 0, correct = 0;
    for (NodeIndex i = 0; i < graph.node_count(); ++i) {
        if (graph.label(i) || truth_unknown(truth, i)) continue;
        if (exclude_rejected && outcome.rejected(i)) continue;
        ++total;
        if (!outcome.rejected(i) &&
            graph.class_names()[static_cast<std::size_t>(outcome.prediction[i])] ==
                truth.topics[static_cast<std::size_t>(truth.truth[i])])
            ++correct;
    }
    if (total == 0) throw DataError("accuracy needs at least one unlabelled node of a known class");
    return static_cast<double>(correct) / static_cast<double>(total);
}

CoveragePrecision metric_coverage_precision(const TextAttributedGraph& graph, const alt::RejectionOutcome& outcome,
                                            const GroundTruth& truth) {
    check_sizes(graph, outcome, truth);
    std::size_t unknown = 0, rejected = 0, hit = 0;
    for (NodeIndex i = 0; i < graph.node_count(); ++i) {
        if (graph.label(i)) continue;
        const bool u = truth_unknown(truth, i), r = outcome.rejected(i);
        unknown += u;
        rejected += r;
        hit += u && r;
    }
    if (unknown == 0) throw DataError("coverage needs at least one node of an unknown class");
    CoveragePrecision out;
    out.coverage = static_cast<double>(hit) / static_cast<double>(unknown);
    out.nothing_rejected = rejected == 0;
    out.precision = rejected ? static_cast<double>(hit) / static_cast<double>(rejected) : 0.0;
    return out;
}

LabelEmbedder mock_label_embedder(std::size_t dim, std::uint64_t seed) {
    return [dim, seed](std::span<const std::string> labels) { return mock_embed(labels, dim, seed).values; };
}

LabelQuality metric_label_quality(std::span<const std::string> known, std::span<const std::string> generated,
                                  std::span<const std::string> ideal, const LabelEmbedder& embed) {
    if (known.empty()) throw DataError("label quality needs at least one known label");
    const double nan = std::nan("");
    auto cross = [&](std::span<const std::string> a, std::span<const std::string> b) {
        if (a.empty() || b.empty()) return nan;
        const Matrix ea = embed(a), eb = embed(b);
        double s = 0.0;
        for (Eigen::Index i = 0; i < ea.rows(); ++i)
            for (Eigen::Index j = 0; j < eb.rows(); ++j) s += cosine(ea.row(i), eb.row(j));
        return s / static_cast<double>(ea.rows() * eb.rows());
    };
    LabelQuality q;
    if (known.size() == 1) {
        q.k_to_k = 1.0;
        q.single_known = true;
    } else {
        const Matrix ek = embed(known);
        double s = 0.0;
        std::size_t pairs = 0;
        for (Eigen::Index i = 0; i < ek.rows(); ++i)
            for (Eigen::Index j = i + 1; j < ek.rows(); ++j, ++pairs) s += cosine(ek.row(i), ek.row(j));
        q.k_to_k = s / static_cast<double>(pairs);
    }
    q.k_to_g = cross(known, generated);
    q.g_to_u = cross(generated, ideal);
    return q;
}

AugmentedLabels allocate_labels(const TextAttributedGraph& graph, const alt::RejectionOutcome& outcome,
                                const gla::Ledger& ledger) {
    if (outcome.size() != graph.node_count()) throw DataError("outcome and graph cover different node counts");
    AugmentedLabels out;
    out.names.assign(graph.class_names().begin(), graph.class_names().end());
    std::map<std::int64_t, const std::string*> final_label;
    for (const auto& n : ledger.nodes) final_label[n.id] = &n.label;

    // Generated labels that are not known class names, in sorted order.
    std::vector<std::string> generated;
    for (const auto& n : ledger.nodes)
        if (!graph.class_of(n.label)) generated.push_back(n.label);
    std::sort(generated.begin(), generated.end());
    generated.erase(std::unique(generated.begin(), generated.end()), generated.end());
    out.names.insert(out.names.end(), generated.begin(), generated.end());
    auto id_of = [&](const std::string& name) {
        if (auto c = graph.class_of(name)) return *c;
        const auto it = std::lower_bound(generated.begin(), generated.end(), name);
        return static_cast<int>(graph.class_count()) + static_cast<int>(it - generated.begin());
    };

    out.label.assign(graph.node_count(), -1);
    for (NodeIndex i = 0; i < graph.node_count(); ++i) {
        if (auto y = graph.label(i)) {
            out.label[i] = *y;
        } else if (outcome.rejected(i)) {
            const auto it = final_label.find(graph.node_id(i));
            if (it == final_label.end())
                throw DataError("rejected node " + std::to_string(graph.node_id(i)) + " has no annotation");
            out.label[i] = id_of(*it->second);
        } else {
            out.label[i] = outcome.prediction[i];
        }
    }
    return out;
}

LlmCalls llm_calls(std::uint64_t rejected, std::uint64_t actual) {
    LlmCalls c{rejected, actual, 0.0};
    if (rejected) c.reduction = 1.0 - static_cast<double>(actual) / static_cast<double>(rejected);
    return c;
}

namespace {

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
double number_from(const json& j) { return j.is_null() ? std::nan("") : j.get<double>(); }

} // namespace

void write_metrics_json(const std::filesystem::path& path, const MetricsReport& r) {
    const json doc = {
        {"accuracy", number_or_null(r.accuracy)},
        {"coverage", number_or_null(r.coverage)},
        {"precision", number_or_null(r.precision)},
        {"nothing_rejected", r.nothing_rejected},
        {"quality",
         {{"k_to_k", number_or_null(r.quality.k_to_k)},
          {"k_to_g", number_or_null(r.quality.k_to_g)},
          {"g_to_u", number_or_null(r.quality.g_to_u)},
          {"single_known", r.quality.single_known}}},
        {"backbone",
         {{"lower", number_or_null(r.backbone.lower)},
          {"ours", number_or_null(r.backbone.ours)},
          {"upper", number_or_null(r.backbone.upper)}}},
        {"llm_calls",
         {{"pure", r.llm_calls.pure}, {"actual", r.llm_calls.actual}, {"reduction", r.llm_calls.reduction}}},
    };
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
    if (!out) throw DataError("write failed for " + path.string());
}

MetricsReport read_metrics_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    MetricsReport r;
    try {
        const auto doc = json::parse(in);
        r.accuracy = number_from(doc.at("accuracy"));
        r.coverage = number_from(doc.at("coverage"));
        r.precision = number_from(doc.at("precision"));
        r.nothing_rejected = doc.at("nothing_rejected").get<bool>();
        const auto& q = doc.at("quality");
        r.quality = {number_from(q.at("k_to_k")), number_from(q.at("k_to_g")), number_from(q.at("g_to_u")),
                     q.at("single_known").get<bool>()};
        const auto& b = doc.at("backbone");
        r.backbone = {number_from(b.at("lower")), number_from(b.at("ours")), number_from(b.at("upper"))};
        const auto& c = doc.at("llm_calls");
        r.llm_calls = {c.at("pure").get<std::uint64_t>(), c.at("actual").get<std::uint64_t>(),
                       c.at("reduction").get<double>()};
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return r;
}

} // namespace oga::eval
