#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>

#include "oga/csv.hpp"
#include "oga/error.hpp"
#include "oga/pipeline.hpp"

#include <json.hpp>

namespace oga::pipeline {

using nlohmann::json;

namespace {

std::string prefixed(const std::string& stage, const Error& cause) {
    return stage + ": " + cause.what();
}

struct Loaded {
    TextAttributedGraph graph;
    EmbeddingMatrix embeddings;
};

Loaded load_inputs(const RunPaths& run) {
    for (const auto& p : {run.nodes(), run.edges(), run.embeddings()})
        if (!std::filesystem::exists(p)) throw DataError("missing " + p.string() + "; run the ingest stage first");
    Loaded in{load_graph(run.nodes(), run.edges()), load_embeddings(run.embeddings())};
    bind_to_graph(in.embeddings, in.graph);
    return in;
}

alt::AltModel load_checked_model(const RunPaths& run, const TextAttributedGraph& graph) {
    if (!std::filesystem::exists(run.model()))
        throw DataError("missing " + run.model().string() + "; run the alt-train stage first");
    auto model = alt::load_model(run.model());
    const auto names = graph.class_names();
    if (!std::equal(model.class_names.begin(), model.class_names.end(), names.begin(), names.end()))
        throw DataError(run.model().string() + " was trained on different classes than the ingested graph");
    return model;
}

alt::Inference run_inference(const Loaded& in, const RunPaths& run) {
    const auto model = load_checked_model(run, in.graph);
    return alt::infer(in.graph, in.embeddings, model.config, model.params, model.concepts);
}

std::vector<NodeIndex> rejected_nodes(const alt::RejectionOutcome& outcome) {
    std::vector<NodeIndex> out;
    for (NodeIndex i = 0; i < outcome.size(); ++i)
        if (outcome.rejected(i)) out.push_back(i);
    return out;
}

alt::RejectionOutcome load_outcome(const RunPaths& run, const TextAttributedGraph& graph) {
    if (!std::filesystem::exists(run.rejection()))
        throw DataError("missing " + run.rejection().string() + "; run the alt-infer stage first");
    return alt::read_rejection_csv(run.rejection(), graph);
}

void write_json(const std::filesystem::path& path, const json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << doc.dump(2) << "\n";
    if (!out) throw DataError("write failed for " + path.string());
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_augmented_csv(const std::filesystem::path& path, const TextAttributedGraph& graph,
                         const eval::AugmentedLabels& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    csv::write_row(out, {"node_id", "label"});
    for (NodeIndex i = 0; i < graph.node_count(); ++i) {
        const int y = labels.label[i];
        csv::write_row(out, {std::to_string(graph.node_id(i)), y < 0 ? "" : labels.names[static_cast<std::size_t>(y)]});
    }
    if (!out) throw DataError("write failed for " + path.string());
}

std::uint64_t read_gateway_total(const RunPaths& run) {
    if (!std::filesystem::exists(run.gateway()))
        throw DataError("missing " + run.gateway().string() + "; run the annotate stage first");
    const auto doc = read_json(run.gateway());
    try {
        return doc.at("total").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw FormatError(run.gateway().string() + ": " + e.what());
    }
}

} // namespace

StageError::StageError(std::string stage, const Error& cause)
    : Error(prefixed(stage, cause)), stage_(std::move(stage)), code_(cause.exit_code()) {}

void write_synthetic(const eval::SyntheticSpec& spec, const std::filesystem::path& dir) {
    const auto data = eval::generate_synthetic(spec);
    std::filesystem::create_directories(dir);
    const RunPaths run{dir};
    save_graph(data.graph, run.nodes(), run.edges());
    save_embeddings(data.embeddings, run.embeddings());
    eval::write_truth_csv(run.truth(), data);
}

void stage_ingest(const PipelineConfig& config, const RunPaths& run) {
    std::filesystem::create_directories(run.dir);
    if (config.input == "synth") {
        write_synthetic(config.synth, run.dir);
        return;
    }
    const auto graph = load_graph(config.nodes, config.edges);
    EmbeddingMatrix emb;
    if (config.embeddings.empty()) {
        std::vector<std::string> texts;
        for (NodeIndex i = 0; i < graph.node_count(); ++i) texts.emplace_back(graph.text(i));
        emb = mock_embed(texts, config.embed_dim, config.seed);
    } else {
        emb = load_embeddings(config.embeddings);
    }
    bind_to_graph(emb, graph);
    save_graph(graph, run.nodes(), run.edges());
    save_embeddings(emb, run.embeddings());
    if (!config.truth.empty()) {
        eval::read_truth_csv(config.truth, graph); // validate before copying
        std::filesystem::copy_file(config.truth, run.truth(), std::filesystem::copy_options::overwrite_existing);
    } else {
        std::filesystem::remove(run.truth());
    }
}

void stage_alt_train(const PipelineConfig& config, const RunPaths& run) {
    const auto in = load_inputs(run);
    auto result = alt::train(in.graph, in.embeddings, config.alt);
    const auto names = in.graph.class_names();
    alt::AltModel model{config.alt, {names.begin(), names.end()}, std::move(result.params), std::move(result.concepts)};
    alt::save_model(model, run.model());
}

void stage_alt_infer(const PipelineConfig&, const RunPaths& run) {
    const auto in = load_inputs(run);
    const auto inference = run_inference(in, run);
    alt::write_rejection_csv(run.rejection(), in.graph, inference.outcome);
}

void stage_communities(const PipelineConfig& config, const RunPaths& run) {
    const auto in = load_inputs(run);
    const auto outcome = load_outcome(run, in.graph);
    const auto inference = run_inference(in, run);
    const auto rejected = rejected_nodes(outcome);
    const auto partition = gla::detect_rejected_communities(in.graph, inference.propagated, rejected, config.gla);
    gla::write_communities_json(run.communities(), in.graph, rejected, partition);
}

std::uint64_t stage_annotate(const PipelineConfig& config, const RunPaths& run) {
    const auto in = load_inputs(run);
    const auto outcome = load_outcome(run, in.graph);
    const auto inference = run_inference(in, run);
    if (!std::filesystem::exists(run.communities()))
        throw DataError("missing " + run.communities().string() + "; run the communities stage first");
    std::vector<NodeIndex> rejected;
    auto partition = gla::read_communities_json(run.communities(), in.graph, rejected);
    if (rejected != rejected_nodes(outcome))
        throw DataError(run.communities().string() + " does not cover the rejected nodes of " +
                        run.rejection().string());

    llm::Gateway gateway(config.backend());
    const auto result = gla::annotate_partition(in.graph, inference.propagated, rejected, std::move(partition),
                                                config.gla, in.graph.class_count(), gateway);
    gla::write_ledger_json(run.ledger(), result.ledger, result.stats);
    write_augmented_csv(run.augmented(), in.graph, eval::allocate_labels(in.graph, outcome, result.ledger));

    const auto counts = gateway.counts();
    write_json(run.gateway(), {{"annotate", counts.annotate},
                               {"distill", counts.distill},
                               {"fuse", counts.fuse},
                               {"total", counts.total()},
                               {"cache_hits", gateway.cache_hits()},
                               {"attempts", gateway.attempts()}});
    return counts.total();
}

void stage_evaluate(const PipelineConfig& config, const RunPaths& run) {
    const auto in = load_inputs(run);
    if (!std::filesystem::exists(run.truth()))
        throw DataError("evaluation needs ground truth at " + run.truth().string() +
                        " (set `truth` in files mode)");
    const auto truth = eval::read_truth_csv(run.truth(), in.graph);
    const auto outcome = load_outcome(run, in.graph);
    if (!std::filesystem::exists(run.ledger()))
        throw DataError("missing " + run.ledger().string() + "; run the annotate stage first");
    const auto ledger = gla::read_ledger_json(run.ledger());

    eval::MetricsReport report;
    report.accuracy = eval::metric_accuracy(in.graph, outcome, truth);
    const auto cp = eval::metric_coverage_precision(in.graph, outcome, truth);
    report.coverage = cp.coverage;
    report.precision = cp.precision;
    report.nothing_rejected = cp.nothing_rejected;

    const auto known_span = in.graph.class_names();
    const std::vector<std::string> known(known_span.begin(), known_span.end());
    std::set<std::string> generated_set;
    for (const auto& n : ledger.nodes) generated_set.insert(n.label);
    const std::vector<std::string> generated(generated_set.begin(), generated_set.end());
    std::vector<std::string> ideal;
    for (std::size_t t = 0; t < truth.topics.size(); ++t)
        if (truth.unknown[t]) ideal.push_back(truth.topics[t]);
    report.quality = eval::metric_label_quality(known, generated, ideal,
                                                eval::mock_label_embedder(config.quality_embed_dim, config.seed));

    const auto augmented = eval::allocate_labels(in.graph, outcome, ledger);
    report.backbone = eval::evaluate_backbone(in.graph, in.embeddings.values, truth, augmented, config.backbone);
    report.llm_calls = eval::llm_calls(rejected_nodes(outcome).size(), read_gateway_total(run));
    eval::write_metrics_json(run.metrics(), report);
}

std::vector<StageTiming> run_pipeline(PipelineConfig config) {
    config.validate();
    const RunPaths run{config.out_dir};
    std::vector<StageTiming> timings;
    auto timed = [&](const char* name, auto&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            fn();
        } catch (const StageError&) {
            throw;
        } catch (const Error& e) {
            throw StageError(name, e);
        }
        timings.push_back({name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
    };
    timed("ingest", [&] { stage_ingest(config, run); });
    timed("alt-train", [&] { stage_alt_train(config, run); });
    timed("alt-infer", [&] { stage_alt_infer(config, run); });
    timed("communities", [&] { stage_communities(config, run); });
    timed("annotate", [&] { stage_annotate(config, run); });
    if (std::filesystem::exists(run.truth())) timed("evaluate", [&] { stage_evaluate(config, run); });
    else std::filesystem::remove(run.metrics());
    write_manifest(config, run, timings);
    return timings;
}

void write_manifest(PipelineConfig& config, const RunPaths& run, const std::vector<StageTiming>& timings) {
    json cfg = json::object();
    for (const auto& f : config.fields()) cfg[f.key] = format_field(f);
    json stages = json::array();
    for (const auto& t : timings) stages.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
    const auto backend = config.backend();
    json doc = {
        {"version", kVersion},
        {"formats", {{"embeddings", "OGAEMB1"}, {"model", "OGAALT1"}}},
        {"stopwords", std::string(llm::kStopwordsVersion)},
        {"seeds", {{"seed", config.seed}, {"synth_seed", config.synth.seed}}},
        {"llm", {{"mode", std::string(llm::mode_name(backend.mode))}, {"endpoint", backend.endpoint},
                 {"model", backend.model}}},
        {"config", cfg},
        {"config_text", format_config(config)},
        {"timings", stages},
    };
    write_json(run.manifest(), doc);
}

} // namespace oga::pipeline
