#include "objective_terms.hpp"

#include <cmath>

#include "oga/error.hpp"

namespace oga::alt::detail {

Eigen::VectorXd attention_scores(const Matrix& rows, const AltParameters& params,
                                 AttentionForward* forward) {
    if (rows.cols() != params.w1.cols())
        throw DataError("attention input has dimension " + std::to_string(rows.cols()) +
                        ", expected " + std::to_string(params.w1.cols()));
    Matrix pre = rows * params.w1.transpose();
    pre.rowwise() += params.b1.transpose();
    Matrix act = pre.cwiseMax(0.0);
    Eigen::VectorXd score = act * params.w2;
    score.array() += params.b2;
    if (forward) {
        forward->pre = std::move(pre);
        forward->act = std::move(act);
        forward->score = score;
    }
    return score;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& scores) {
    const double top = scores.maxCoeff();
    Eigen::VectorXd e = (scores.array() - top).exp();
    return e / e.sum();
}

void require_every_class(const TextAttributedGraph& graph, std::span<const ClassId> classes) {
    std::vector<bool> present(graph.class_count(), false);
    for (ClassId c : classes) present[static_cast<std::size_t>(c)] = true;
    for (std::size_t c = 0; c < present.size(); ++c)
        if (!present[c])
            throw DataError("known class `" + graph.class_names()[c] + "` has no labelled node");
    if (classes.empty()) throw DataError("the graph has no labelled nodes");
}

Matrix aggregate_concepts(const Matrix& rows, const Eigen::VectorXd& scores,
                          std::span<const ClassId> classes, std::size_t class_count,
                          std::span<const std::vector<NodeIndex>> neighborhoods) {
    std::vector<double> members(class_count, 0.0);
    for (ClassId c : classes) members[static_cast<std::size_t>(c)] += 1.0;

    Matrix centers = Matrix::Zero(static_cast<Eigen::Index>(class_count), rows.cols());
    Eigen::VectorXd local;
    for (std::size_t t = 0; t < neighborhoods.size(); ++t) {
        const auto& hood = neighborhoods[t];
        const auto c = static_cast<Eigen::Index>(classes[t]);
        local.resize(static_cast<Eigen::Index>(hood.size()));
        for (std::size_t q = 0; q < hood.size(); ++q)
            local[static_cast<Eigen::Index>(q)] = scores[static_cast<Eigen::Index>(hood[q])];
        const Eigen::VectorXd a = softmax(local);
        const double inv = 1.0 / (members[static_cast<std::size_t>(c)] * static_cast<double>(hood.size()));
        for (std::size_t q = 0; q < hood.size(); ++q)
            centers.row(c) += (inv * (1.0 + a[static_cast<Eigen::Index>(q)])) *
                              rows.row(static_cast<Eigen::Index>(hood[q]));
    }
    return centers;
}

Matrix concept_distances(const Matrix& rows, const Matrix& centers) {
    Matrix dist(rows.rows(), centers.rows());
    for (Eigen::Index c = 0; c < centers.rows(); ++c)
        dist.col(c) = (rows.rowwise() - centers.row(c)).rowwise().norm();
    return dist;
}

Matrix distance_softmax(const Matrix& distances, double lambda) {
    Matrix out(distances.rows(), distances.cols());
    for (Eigen::Index i = 0; i < distances.rows(); ++i) {
        const auto logits = (-lambda * distances.row(i)).eval();
        const double top = logits.maxCoeff();
        const auto e = (logits.array() - top).exp().eval();
        out.row(i) = e / e.sum();
    }
    return out;
}

ProbabilityTerms probability_terms(const Matrix& probabilities, std::span<const NodeIndex> labeled,
                                   std::span<const ClassId> classes,
                                   const NormalizedAdjacencyOperator& op, Matrix* grad_ce,
                                   Matrix* grad_smooth) {
    const Matrix& d = probabilities;
    const double n = static_cast<double>(d.rows());
    const double nl = static_cast<double>(labeled.size());
    ProbabilityTerms out;

    if (grad_ce) *grad_ce = Matrix::Zero(d.rows(), d.cols());
    for (std::size_t t = 0; t < labeled.size(); ++t) {
        const auto i = static_cast<Eigen::Index>(labeled[t]);
        const auto y = static_cast<Eigen::Index>(classes[t]);
        const double p = d(i, y) + kLogFloor;
        out.ce -= std::log(p) / nl;
        if (grad_ce) (*grad_ce)(i, y) -= 1.0 / (nl * p);
    }

    const Matrix td = op.matrix * d;
    const double dirichlet = (d.array() * (d - td).array()).sum() / n;
    double fit = 0.0;
    for (std::size_t t = 0; t < labeled.size(); ++t) {
        const auto i = static_cast<Eigen::Index>(labeled[t]);
        for (Eigen::Index c = 0; c < d.cols(); ++c) {
            const double target = c == classes[t] ? 1.0 : 0.0;
            fit += (d(i, c) - target) * (d(i, c) - target);
        }
    }
    out.smooth = dirichlet + fit / nl;

    if (grad_smooth) {
        const Matrix ttd = op.matrix.transpose() * d;
        *grad_smooth = (2.0 * d - td - ttd) / n;
        for (std::size_t t = 0; t < labeled.size(); ++t) {
            const auto i = static_cast<Eigen::Index>(labeled[t]);
            for (Eigen::Index c = 0; c < d.cols(); ++c) {
                const double target = c == classes[t] ? 1.0 : 0.0;
                (*grad_smooth)(i, c) += 2.0 * (d(i, c) - target) / nl;
            }
        }
    }
    return out;
}

double separation(const Matrix& centers, double theta, Matrix* grad) {
    const Eigen::Index c = centers.rows();
    if (grad) *grad = Matrix::Zero(centers.rows(), centers.cols());
    if (c < 2) return 0.0;
    const double pairs = static_cast<double>(c * (c - 1));
    Eigen::VectorXd norms = centers.rowwise().norm();
    double total = 0.0;
    // Each unordered pair stands for two ordered pairs.
    for (Eigen::Index i = 0; i < c; ++i) {
        for (Eigen::Index j = i + 1; j < c; ++j) {
            const double ni = norms[i], nj = norms[j];
            double cosine = 0.0;
            if (ni > 0.0 && nj > 0.0) {
                cosine = centers.row(i).dot(centers.row(j)) / (ni * nj);
                if (grad) {
                    grad->row(i) += (2.0 / pairs) *
                                    (centers.row(j) / (ni * nj) - cosine * centers.row(i) / (ni * ni));
                    grad->row(j) += (2.0 / pairs) *
                                    (centers.row(i) / (ni * nj) - cosine * centers.row(j) / (nj * nj));
                }
            }
            const auto diff = (centers.row(i) - centers.row(j)).eval();
            const double gap = theta - diff.squaredNorm();
            const double hinge = gap > 0.0 ? gap : 0.0;
            if (grad && gap > 0.0) {
                grad->row(i) -= (2.0 / pairs) * 2.0 * diff;
                grad->row(j) += (2.0 / pairs) * 2.0 * diff;
            }
            total += 2.0 * (cosine + hinge);
        }
    }
    return total / pairs;
}

} // namespace oga::alt::detail
