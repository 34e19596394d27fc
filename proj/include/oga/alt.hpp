#pragma once

// Adaptive label traceability: propagated node embeddings, class concepts
// built from labelled neighbourhoods, distance-softmax classification with
// confidence rejection, and the composite training objective.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oga/embedding.hpp"
#include "oga/fields.hpp"
#include "oga/graph.hpp"

namespace oga::alt {

struct AltConfig {
    int k = 5;                  ///< propagation steps
    double kappa = 0.2;         ///< propagation intensity
    double r = 0.5;             ///< kernel exponent of the adjacency operator
    double lambda = 10.0;       ///< softmax sharpness
    double epsilon = 0.6;       ///< rejection threshold on max probability
    double alpha = 0.4;         ///< smoothness weight
    double beta = 0.6;          ///< separation weight
    double theta = 0.8;         ///< separation margin cap
    int hop_max = 5;            ///< neighbourhood depth is drawn from 1..hop_max
    std::size_t sample_size = 16;
    int epochs = 300;
    double learning_rate = 0.01;
    double dropout = 0.1;
    std::size_t hidden = 128;   ///< attention MLP width
    bool normalize_input = true; ///< L2-normalise embedding rows before propagation
    std::uint64_t seed = 0;

    /// Throws ConfigError on out-of-range values.
    void validate() const;
};

/// Config-file bindings for every field except the seed.
FieldList fields(AltConfig& config);

/// Trainable state: propagation weights and the two-layer attention scorer
/// score(x) = w2 . relu(W1 x + b1) + b2.
struct AltParameters {
    Eigen::VectorXd w;
    Matrix w1;            // hidden x f
    Eigen::VectorXd b1;   // hidden
    Eigen::VectorXd w2;   // hidden
    double b2 = 0.0;

    /// w_i = 1/k, attention weights Glorot-uniform, biases zero.
    static AltParameters initialize(int k, std::size_t dim, std::size_t hidden, std::uint64_t seed);

    std::size_t size() const;
    std::vector<double> pack() const;
    void unpack(std::span<const double> flat);
};

/// One prototype row per known class.
struct ConceptSet {
    Matrix centers; // classes x f
};

inline constexpr ClassId kUnknown = -1;

struct RejectionOutcome {
    std::vector<ClassId> prediction; ///< kUnknown for rejected nodes
    std::vector<double> confidence;  ///< max probability
    std::vector<double> entropy;     ///< natural-log Shannon entropy

    std::size_t size() const noexcept { return prediction.size(); }
    bool rejected(NodeIndex i) const { return prediction[i] == kUnknown; }
};

struct LossBreakdown {
    double total = 0.0;
    double ce = 0.0;
    double smooth = 0.0;
    double separate = 0.0;
};

// ---------------------------------------------------------------------------
// Stateless operations

/// E + kappa * sum_{i=1..k} w_i T^i E, by k sparse products.
Matrix propagate(const Matrix& embeddings, const NormalizedAdjacencyOperator& op,
                 std::span<const double> weights, double kappa, int k);

/// Softmax of the attention scores of each row.
Eigen::VectorXd attention_weights(const Matrix& neighbor_rows, const AltParameters& params);

/// Concepts from freshly sampled neighbourhoods of every labelled node.
/// Throws DataError naming any known class without labelled nodes.
ConceptSet build_concepts(const Matrix& propagated, const TextAttributedGraph& graph,
                          const AltConfig& config, const AltParameters& params,
                          std::uint64_t epoch_seed);

/// D[i,c] = softmax_c(-lambda * ||e_i - C_c||).
Matrix classify(const Matrix& propagated, const ConceptSet& concepts, double lambda);

/// Argmax with lowest-id ties when max >= epsilon, otherwise kUnknown.
RejectionOutcome reject(const Matrix& probabilities, double epsilon);

/// Smallest entropy of a distribution over `classes` outcomes whose largest
/// mass is below epsilon: -(m eps log eps + rho log rho), m = floor(1/eps).
double min_entropy_bound(double epsilon, int classes);

/// The closed-form expression log c - (1/lambda) log((1 - eps)/eps), kept
/// for diagnostics only; it is not a valid lower bound in general.
double reported_entropy_expression(double epsilon, int classes, double lambda);

/// Composite objective for fixed probabilities and concepts.
LossBreakdown loss(const Matrix& probabilities, const TextAttributedGraph& graph,
                   const ConceptSet& concepts, const NormalizedAdjacencyOperator& op,
                   const AltConfig& config);

// ---------------------------------------------------------------------------
// Training

/// Stochastic choices of one epoch: a neighbourhood per labelled node and
/// an optional dropout mask (already scaled by 1/(1-p)).
struct EpochSample {
    std::vector<std::vector<NodeIndex>> neighborhoods; // parallel to labelled nodes
    std::optional<Matrix> dropout_mask;
};

struct AltGradient {
    Eigen::VectorXd w;
    Matrix w1;
    Eigen::VectorXd b1;
    Eigen::VectorXd w2;
    double b2 = 0.0;

    std::vector<double> pack() const;
};

/// Everything that stays fixed during training: graph operator powers,
/// labelled node lists and the neighbourhood index.  Evaluates the loss and
/// its exact gradient with respect to all parameters.
class AltObjective {
public:
    AltObjective(const TextAttributedGraph& graph, const Matrix& embeddings, const AltConfig& config);

    EpochSample draw(std::uint64_t epoch_seed, bool training) const;

    Matrix propagated(const AltParameters& params) const;
    ConceptSet concepts(const AltParameters& params, const EpochSample& sample) const;

    /// Loss for the given sample; fills `grad` when non-null.
    LossBreakdown evaluate(const AltParameters& params, const EpochSample& sample,
                           AltGradient* grad = nullptr) const;

    const AltConfig& config() const noexcept { return config_; }
    const NormalizedAdjacencyOperator& op() const noexcept { return op_; }
    std::span<const NodeIndex> labeled() const noexcept { return labeled_; }

private:
    const TextAttributedGraph& graph_;
    AltConfig config_;
    NormalizedAdjacencyOperator op_;
    Matrix embeddings_;
    std::vector<Matrix> powers_; // T^i E, i = 1..k
    std::vector<NodeIndex> labeled_;
    std::vector<ClassId> labeled_class_;
    std::vector<std::size_t> class_sizes_;
    NeighborhoodIndex neighborhoods_;
};

struct TrainResult {
    AltParameters params;
    ConceptSet concepts;
    std::vector<LossBreakdown> log; ///< one entry per epoch, before the update
};

/// Full-batch Adam over the propagation weights and the attention scorer.
/// Throws NumericError naming the first non-finite loss component.
TrainResult train(const TextAttributedGraph& graph, const EmbeddingMatrix& embeddings,
                  const AltConfig& config);

/// Inference: propagated embeddings, probabilities and rejection outcome.
struct Inference {
    Matrix propagated;
    Matrix probabilities;
    RejectionOutcome outcome;
};

Inference infer(const TextAttributedGraph& graph, const EmbeddingMatrix& embeddings,
                const AltConfig& config, const AltParameters& params, const ConceptSet& concepts);

// ---------------------------------------------------------------------------
// Persistence

struct AltModel {
    AltConfig config;
    std::vector<std::string> class_names;
    AltParameters params;
    ConceptSet concepts;
};

/// Layout documented in docs/formats.md (magic "OGAALT1\0").
void save_model(const AltModel& model, const std::filesystem::path& path);
AltModel load_model(const std::filesystem::path& path);

/// `node_id,prediction,confidence,entropy`, prediction = class name or UNKNOWN.
void write_rejection_csv(const std::filesystem::path& path, const TextAttributedGraph& graph,
                         const RejectionOutcome& outcome);
RejectionOutcome read_rejection_csv(const std::filesystem::path& path,
                                    const TextAttributedGraph& graph);

} // namespace oga::alt
