#pragma once

// Building blocks shared by the stateless operations and the trainer.

#include <span>
#include <vector>

#include "oga/alt.hpp"

namespace oga::alt::detail {

inline constexpr double kLogFloor = 1e-12;

struct AttentionForward {
    Matrix pre;            // n x hidden, W1 x + b1
    Matrix act;            // relu(pre)
    Eigen::VectorXd score; // act w2 + b2
};

/// Scores of every row of `rows`; fills the intermediate activations when
/// `forward` is non-null.
Eigen::VectorXd attention_scores(const Matrix& rows, const AltParameters& params,
                                 AttentionForward* forward);

Eigen::VectorXd softmax(const Eigen::VectorXd& scores);

void require_every_class(const TextAttributedGraph& graph, std::span<const ClassId> classes);

/// C_c = mean over labelled i of class c of sum_{j in N(i)} (1 + a_j) x_j / |N(i)|,
/// a = softmax of the attention scores over N(i).
Matrix aggregate_concepts(const Matrix& rows, const Eigen::VectorXd& scores,
                          std::span<const ClassId> classes, std::size_t class_count,
                          std::span<const std::vector<NodeIndex>> neighborhoods);

/// n x c Euclidean distances.
Matrix concept_distances(const Matrix& rows, const Matrix& centers);

Matrix distance_softmax(const Matrix& distances, double lambda);

struct ProbabilityTerms {
    double ce = 0.0;
    double smooth = 0.0;
};

/// ce = -mean log D[i, y_i]; smooth = tr(D^T (I - T) D)/n + ||(D - Y) masked||_F^2 / |V_l|.
/// Gradients w.r.t. D are written when the pointers are non-null.
ProbabilityTerms probability_terms(const Matrix& probabilities, std::span<const NodeIndex> labeled,
                                   std::span<const ClassId> classes,
                                   const NormalizedAdjacencyOperator& op, Matrix* grad_ce,
                                   Matrix* grad_smooth);

/// Mean over ordered class pairs of cos(C_i, C_j) + max(0, theta - ||C_i - C_j||^2).
double separation(const Matrix& centers, double theta, Matrix* grad);

inline LossBreakdown combine(const ProbabilityTerms& terms, double separate, const AltConfig& config) {
    LossBreakdown out;
    out.ce = terms.ce;
    out.smooth = terms.smooth;
    out.separate = separate;
    out.total = out.ce + config.alpha * out.smooth + config.beta * out.separate;
    return out;
}

} // namespace oga::alt::detail
