#pragma once

// Evaluation: synthetic benchmark generator, the four metric aspects, label
// augmentation and a small mean-aggregation backbone for retraining.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "oga/alt.hpp"
#include "oga/embedding.hpp"
#include "oga/fields.hpp"
#include "oga/gla.hpp"
#include "oga/graph.hpp"

namespace oga::eval {

// ---------------------------------------------------------------------------
// Synthetic benchmark

struct SyntheticSpec {
    int classes = 6;
    int unknown_holdout = 2;       ///< the last classes get no labelled nodes
    std::size_t nodes_per_class = 60;
    double p_intra = 0.1;
    double p_inter = 0.01;
    double separation = 4.0;       ///< centroid scale s
    double noise = 0.5;            ///< per-coordinate gaussian sigma
    std::size_t dim = 16;
    std::uint64_t seed = 7;

    void validate() const;
};

/// Config-file bindings, keys prefixed `synth_`; the seed is not included.
FieldList fields(SyntheticSpec& spec);

enum class Split : std::uint8_t { train, val, test };

struct SyntheticData {
    TextAttributedGraph graph;      ///< train-split nodes of known classes carry labels
    EmbeddingMatrix embeddings;
    std::vector<int> truth;         ///< class index in [0, classes) per node
    std::vector<std::string> topics; ///< ideal label text per class, e.g. "neural_network"
    std::vector<Split> split;       ///< 40/20/40 within every class

    int known_classes() const noexcept { return static_cast<int>(topics.size()) - unknown; }
    bool is_unknown(NodeIndex i) const noexcept { return truth[i] >= known_classes(); }
    int unknown = 0;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Ground-truth file: `node_id,class,split` with class the topic label.
void write_truth_csv(const std::filesystem::path& path, const SyntheticData& data);

/// Truth as loaded back for evaluation; `truth` indexes `topics`.
struct GroundTruth {
    std::vector<int> truth;
    std::vector<std::string> topics;
    std::vector<Split> split;
    std::vector<bool> unknown; ///< topic has no labelled node in the graph
};
GroundTruth read_truth_csv(const std::filesystem::path& path, const TextAttributedGraph& graph);
GroundTruth truth_of(const SyntheticData& data);

// ---------------------------------------------------------------------------
// Aspects 1 and 2

/// Correct / total over unlabelled nodes of known classes.  A rejected
/// known-class node counts as wrong unless `exclude_rejected`.
double metric_accuracy(const TextAttributedGraph& graph, const alt::RejectionOutcome& outcome,
                       const GroundTruth& truth, bool exclude_rejected = false);

struct CoveragePrecision {
    double coverage = 0.0;
    double precision = 0.0;
    bool nothing_rejected = false; ///< precision is reported as 0
};

/// Over unlabelled nodes: coverage = |R & U| / |U|, precision = |R & U| / |R|.
CoveragePrecision metric_coverage_precision(const TextAttributedGraph& graph, const alt::RejectionOutcome& outcome,
                                            const GroundTruth& truth);

// ---------------------------------------------------------------------------
// Aspect 3

using LabelEmbedder = std::function<Matrix(std::span<const std::string>)>;

/// mock_embed over the label words (underscores split tokens).
LabelEmbedder mock_label_embedder(std::size_t dim = 64, std::uint64_t seed = 0);

struct LabelQuality {
    double k_to_k = 0.0;
    double k_to_g = 0.0;
    double g_to_u = 0.0;
    bool single_known = false; ///< k_to_k defined as 1 for one known label
};

/// Mean pairwise cosine within `known`, and across known x generated and
/// generated x ideal.  Cross terms are NaN when a set is empty.
LabelQuality metric_label_quality(std::span<const std::string> known, std::span<const std::string> generated,
                                  std::span<const std::string> ideal, const LabelEmbedder& embed);

// ---------------------------------------------------------------------------
// Aspect 4

struct AugmentedLabels {
    std::vector<int> label;         ///< -1 = no label
    std::vector<std::string> names; ///< known classes first, then generated labels sorted
};

/// Labelled nodes keep their class; rejected nodes take their final ledger
/// label; accepted unlabelled nodes take ALT's prediction.  Throws DataError
/// naming any rejected node the ledger does not cover.
AugmentedLabels allocate_labels(const TextAttributedGraph& graph, const alt::RejectionOutcome& outcome,
                                const gla::Ledger& ledger);

struct BackboneConfig {
    std::size_t hidden = 32;
    int epochs = 200;
    double learning_rate = 0.01;
    std::uint64_t seed = 0;
};

/// logits = T relu(T X W0) W1 with T the row-stochastic mean operator.
struct MiniGcnParams {
    Matrix w0; ///< f x hidden
    Matrix w1; ///< hidden x classes
};

/// Precomputed T and T X for one graph.
class Backbone {
public:
    Backbone(const TextAttributedGraph& graph, const Matrix& features);

    Matrix logits(const MiniGcnParams& params) const;
    /// Mean cross-entropy over nodes with label >= 0; fills gradients when given.
    double loss(const MiniGcnParams& params, std::span<const int> labels, MiniGcnParams* grad = nullptr) const;

    MiniGcnParams train(std::span<const int> labels, std::size_t classes, const BackboneConfig& config) const;
    /// Argmax (lowest id on ties) accuracy over nodes where target >= 0, with
    /// predicted ids passed through `to_truth`.
    double accuracy(const MiniGcnParams& params, std::span<const int> target,
                    std::span<const int> to_truth = {}) const;

private:
    SparseMatrix t_;
    Matrix tx_;
};

struct BackboneScores {
    double lower = 0.0; ///< original labels only
    double ours = 0.0;  ///< augmented labels
    double upper = 0.0; ///< ground truth for every class
};

/// Trains the three variants on the train split and scores them on the
/// test split of every class.  Generated label ids are mapped to the true
/// class holding most of their nodes.
BackboneScores evaluate_backbone(const TextAttributedGraph& graph, const Matrix& features, const GroundTruth& truth,
                                 const AugmentedLabels& augmented, const BackboneConfig& config);

// ---------------------------------------------------------------------------
// Report

struct LlmCalls {
    std::uint64_t pure = 0;   ///< one annotation per rejected node
    std::uint64_t actual = 0; ///< gateway counter
    double reduction = 0.0;   ///< 1 - actual / pure
};

LlmCalls llm_calls(std::uint64_t rejected, std::uint64_t actual);

struct MetricsReport {
    double accuracy = 0.0;
    double coverage = 0.0;
    double precision = 0.0;
    bool nothing_rejected = false;
    LabelQuality quality;
    BackboneScores backbone;
    LlmCalls llm_calls;
};

void write_metrics_json(const std::filesystem::path& path, const MetricsReport& report);
MetricsReport read_metrics_json(const std::filesystem::path& path);

} // namespace oga::eval
