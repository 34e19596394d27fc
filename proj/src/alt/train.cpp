#include <cmath>

#include "oga/adam.hpp"
#include "oga/alt.hpp"
#include "oga/embedding.hpp"
#include "oga/error.hpp"
#include "oga/random.hpp"

namespace oga::alt {

namespace {

// Stream identifiers under the training seed.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kEpochStream = 1;
constexpr std::uint64_t kFinalStream = 2;

void require_finite(const LossBreakdown& l, int epoch) {
    const char* bad = nullptr;
    if (!std::isfinite(l.ce)) bad = "ce";
    else if (!std::isfinite(l.smooth)) bad = "smooth";
    else if (!std::isfinite(l.separate)) bad = "separate";
    else if (!std::isfinite(l.total)) bad = "total";
    if (bad)
        throw NumericError(std::string("non-finite loss component `") + bad + "` at epoch " +
                           std::to_string(epoch));
}

Matrix input_rows(const EmbeddingMatrix& embeddings, const AltConfig& config) {
    return config.normalize_input ? normalized_rows(embeddings.values) : embeddings.values;
}

} // namespace

TrainResult train(const TextAttributedGraph& graph, const EmbeddingMatrix& embeddings,
                  const AltConfig& config) {
    bind_to_graph(embeddings, graph);
    AltObjective objective(graph, input_rows(embeddings, config), config);

    TrainResult result;
    result.params = AltParameters::initialize(config.k, embeddings.dim(), config.hidden,
                                              derive_seed(config.seed, {kInitStream}));
    std::vector<double> flat = result.params.pack();
    AdamOptimizer adam(flat.size(), config.learning_rate);
    AltGradient grad;
    result.log.reserve(static_cast<std::size_t>(config.epochs));

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto sample = objective.draw(
            derive_seed(config.seed, {kEpochStream, static_cast<std::uint64_t>(epoch)}), true);
        const LossBreakdown l = objective.evaluate(result.params, sample, &grad);
        require_finite(l, epoch);
        result.log.push_back(l);
        const std::vector<double> g = grad.pack();
        adam.step(flat, g);
        result.params.unpack(flat);
    }

    const auto final_sample = objective.draw(derive_seed(config.seed, {kFinalStream}), false);
    result.concepts = objective.concepts(result.params, final_sample);
    if (!result.concepts.centers.allFinite())
        throw NumericError("non-finite concept matrix after training");
    return result;
}

Inference infer(const TextAttributedGraph& graph, const EmbeddingMatrix& embeddings,
                const AltConfig& config, const AltParameters& params, const ConceptSet& concepts) {
    bind_to_graph(embeddings, graph);
    config.validate();
    if (static_cast<std::size_t>(concepts.centers.rows()) != graph.class_count())
        throw DataError("model has " + std::to_string(concepts.centers.rows()) +
                        " concepts but the graph has " + std::to_string(graph.class_count()) +
                        " known classes");
    Inference out;
    const auto op = build_operator(graph, config.r);
    out.propagated = propagate(input_rows(embeddings, config), op,
                               std::span<const double>(params.w.data(), static_cast<std::size_t>(params.w.size())),
                               config.kappa, config.k);
    out.probabilities = classify(out.propagated, concepts, config.lambda);
    out.outcome = reject(out.probabilities, config.epsilon);
    return out;
}

} // namespace oga::alt
