#include <algorithm>
#include <cmath>
#include <limits>

#include "objective_terms.hpp"
#include "oga/alt.hpp"
#include "oga/error.hpp"
#include "oga/random.hpp"

namespace oga::alt {

void AltConfig::validate() const {
    auto fail = [](const std::string& what) { throw ConfigError(what); };
    if (k < 1) fail("k (propagation steps) must be >= 1");
    if (!(kappa >= 0.0)) fail("kappa must be >= 0");
    if (!(r >= 0.0 && r <= 1.0)) fail("r must lie in [0, 1]");
    if (!(lambda > 0.0)) fail("lambda must be > 0");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) fail("epsilon must lie in [0, 1]");
    if (!(alpha >= 0.0) || !(beta >= 0.0)) fail("alpha and beta must be >= 0");
    if (!(theta > 0.0)) fail("theta must be > 0");
    if (hop_max < 1) fail("hop_max must be >= 1");
    if (sample_size < 1) fail("sample_size must be >= 1");
    if (epochs < 0) fail("epochs must be >= 0");
    if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
    if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
    if (hidden < 1) fail("hidden must be >= 1");
}

AltParameters AltParameters::initialize(int k, std::size_t dim, std::size_t hidden,
                                        std::uint64_t seed) {
    AltParameters p;
    p.w = Eigen::VectorXd::Constant(k, 1.0 / k);
    Rng rng(seed);
    const double a1 = std::sqrt(6.0 / static_cast<double>(dim + hidden));
    const double a2 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
    std::uniform_real_distribution<double> u1(-a1, a1), u2(-a2, a2);
    p.w1.resize(static_cast<Eigen::Index>(hidden), static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < p.w1.size(); ++i) p.w1.data()[i] = u1(rng);
    p.b1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(hidden));
    p.w2.resize(static_cast<Eigen::Index>(hidden));
    for (Eigen::Index i = 0; i < p.w2.size(); ++i) p.w2[i] = u2(rng);
    p.b2 = 0.0;
    return p;
}

std::size_t AltParameters::size() const {
    return static_cast<std::size_t>(w.size() + w1.size() + b1.size() + w2.size() + 1);
}

namespace {

template <typename Fn>
void for_each_block(Fn&& fn, auto&... blocks) {
    (fn(blocks.data(), static_cast<std::size_t>(blocks.size())), ...);
}

} // namespace

std::vector<double> AltParameters::pack() const {
    std::vector<double> flat;
    flat.reserve(size());
    for_each_block([&](const double* d, std::size_t n) { flat.insert(flat.end(), d, d + n); }, w, w1,
                   b1, w2);
    flat.push_back(b2);
    return flat;
}

void AltParameters::unpack(std::span<const double> flat) {
    if (flat.size() != size()) throw DataError("parameter vector has the wrong length");
    std::size_t pos = 0;
    for_each_block(
        [&](double* d, std::size_t n) {
            std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), n, d);
            pos += n;
        },
        w, w1, b1, w2);
    b2 = flat[pos];
}

std::vector<double> AltGradient::pack() const {
    std::vector<double> flat;
    for_each_block([&](const double* d, std::size_t n) { flat.insert(flat.end(), d, d + n); }, w, w1,
                   b1, w2);
    flat.push_back(b2);
    return flat;
}

Matrix propagate(const Matrix& embeddings, const NormalizedAdjacencyOperator& op,
                 std::span<const double> weights, double kappa, int k) {
    if (k < 1) throw ConfigError("propagation needs k >= 1");
    if (weights.size() < static_cast<std::size_t>(k))
        throw DataError("propagation needs " + std::to_string(k) + " weights");
    if (op.matrix.rows() != embeddings.rows())
        throw DataError("operator and embedding row counts differ");
    Matrix out = embeddings;
    if (kappa == 0.0) return out;
    Matrix power = embeddings;
    for (int i = 0; i < k; ++i) {
        power = op.matrix * power;
        out += (kappa * weights[static_cast<std::size_t>(i)]) * power;
    }
    return out;
}

Eigen::VectorXd attention_weights(const Matrix& neighbor_rows, const AltParameters& params) {
    if (neighbor_rows.rows() == 0) throw DataError("attention over an empty neighbourhood");
    Eigen::VectorXd scores = detail::attention_scores(neighbor_rows, params, nullptr);
    return detail::softmax(scores);
}

ConceptSet build_concepts(const Matrix& propagated, const TextAttributedGraph& graph,
                          const AltConfig& config, const AltParameters& params,
                          std::uint64_t epoch_seed) {
    const auto labeled = graph.labeled_nodes();
    std::vector<ClassId> classes;
    for (NodeIndex i : labeled) classes.push_back(*graph.label(i));
    detail::require_every_class(graph, classes);

    Rng rng(epoch_seed);
    std::uniform_int_distribution<int> hop_dist(1, config.hop_max);
    std::vector<std::vector<NodeIndex>> neighborhoods;
    neighborhoods.reserve(labeled.size());
    for (NodeIndex i : labeled) {
        const int hop = hop_dist(rng);
        const std::uint64_t seed = rng();
        neighborhoods.push_back(sample_neighborhood(graph, i, hop, config.sample_size, seed));
    }
    Eigen::VectorXd scores = detail::attention_scores(propagated, params, nullptr);
    return {detail::aggregate_concepts(propagated, scores, classes, graph.class_count(), neighborhoods)};
}

Matrix classify(const Matrix& propagated, const ConceptSet& concepts, double lambda) {
    if (!(lambda > 0.0)) throw ConfigError("lambda must be > 0");
    if (concepts.centers.cols() != propagated.cols())
        throw DataError("concept and embedding dimensions differ");
    Matrix dist = detail::concept_distances(propagated, concepts.centers);
    return detail::distance_softmax(dist, lambda);
}

RejectionOutcome reject(const Matrix& probabilities, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
    RejectionOutcome out;
    const auto n = static_cast<std::size_t>(probabilities.rows());
    out.prediction.resize(n);
    out.confidence.resize(n);
    out.entropy.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = probabilities.row(static_cast<Eigen::Index>(i));
        Eigen::Index best = 0;
        double h = 0.0;
        for (Eigen::Index c = 0; c < row.size(); ++c) {
            if (row(c) > row(best)) best = c;
            if (row(c) > 0.0) h -= row(c) * std::log(row(c));
        }
        out.confidence[i] = row(best);
        out.entropy[i] = h;
        out.prediction[i] = row(best) >= epsilon ? static_cast<ClassId>(best) : kUnknown;
    }
    return out;
}

double min_entropy_bound(double epsilon, int classes) {
    if (!(epsilon > 0.0) || epsilon > 1.0) throw ConfigError("entropy bound needs 0 < epsilon <= 1");
    if (classes < 2) throw ConfigError("entropy bound needs at least two classes");
    const double m = std::floor(1.0 / epsilon);
    // Fewer classes than 1/eps: every distribution already has max >= 1/c.
    if (m >= classes) return std::log(static_cast<double>(classes));
    const double rho = std::max(0.0, 1.0 - m * epsilon);
    double h = -m * epsilon * std::log(epsilon);
    if (rho > 0.0) h -= rho * std::log(rho);
    return h;
}

double reported_entropy_expression(double epsilon, int classes, double lambda) {
    return std::log(static_cast<double>(classes)) - std::log((1.0 - epsilon) / epsilon) / lambda;
}

LossBreakdown loss(const Matrix& probabilities, const TextAttributedGraph& graph,
                   const ConceptSet& concepts, const NormalizedAdjacencyOperator& op,
                   const AltConfig& config) {
    const auto labeled = graph.labeled_nodes();
    std::vector<ClassId> classes;
    for (NodeIndex i : labeled) classes.push_back(*graph.label(i));
    return detail::combine(detail::probability_terms(probabilities, labeled, classes, op, nullptr,
                                                     nullptr),
                           detail::separation(concepts.centers, config.theta, nullptr), config);
}

} // namespace oga::alt
