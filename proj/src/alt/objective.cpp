#include <cmath>

#include "objective_terms.hpp"
#include "oga/alt.hpp"
#include "oga/error.hpp"
#include "oga/random.hpp"

namespace oga::alt {

namespace {

std::vector<ClassId> classes_of(const TextAttributedGraph& graph, std::span<const NodeIndex> nodes) {
    std::vector<ClassId> out;
    out.reserve(nodes.size());
    for (NodeIndex i : nodes) out.push_back(*graph.label(i));
    return out;
}

} // namespace

AltObjective::AltObjective(const TextAttributedGraph& graph, const Matrix& embeddings,
                           const AltConfig& config)
    : graph_(graph),
      config_((config.validate(), config)),
      op_(build_operator(graph, config.r)),
      embeddings_(embeddings),
      labeled_(graph.labeled_nodes()),
      labeled_class_(classes_of(graph, labeled_)),
      class_sizes_(graph.class_count(), 0),
      neighborhoods_(graph, labeled_, config.hop_max) {
    if (static_cast<std::size_t>(embeddings.rows()) != graph.node_count())
        throw DataError("embedding matrix has " + std::to_string(embeddings.rows()) +
                        " rows but the graph has " + std::to_string(graph.node_count()) + " nodes");
    detail::require_every_class(graph, labeled_class_);
    for (ClassId c : labeled_class_) ++class_sizes_[static_cast<std::size_t>(c)];

    powers_.reserve(static_cast<std::size_t>(config_.k));
    Matrix power = embeddings_;
    for (int i = 0; i < config_.k; ++i) {
        power = op_.matrix * power;
        powers_.push_back(power);
    }
}

EpochSample AltObjective::draw(std::uint64_t epoch_seed, bool training) const {
    EpochSample sample;
    Rng rng(epoch_seed);
    std::uniform_int_distribution<int> hop_dist(1, config_.hop_max);
    sample.neighborhoods.reserve(labeled_.size());
    for (NodeIndex i : labeled_) {
        const int hop = hop_dist(rng);
        const std::uint64_t seed = rng();
        sample.neighborhoods.push_back(neighborhoods_.sample(i, hop, config_.sample_size, seed));
    }
    if (training && config_.dropout > 0.0) {
        std::bernoulli_distribution keep(1.0 - config_.dropout);
        const double scale = 1.0 / (1.0 - config_.dropout);
        Matrix mask(embeddings_.rows(), embeddings_.cols());
        for (Eigen::Index q = 0; q < mask.size(); ++q) mask.data()[q] = keep(rng) ? scale : 0.0;
        sample.dropout_mask = std::move(mask);
    }
    return sample;
}

Matrix AltObjective::propagated(const AltParameters& params) const {
    Matrix out = embeddings_;
    for (int i = 0; i < config_.k; ++i)
        out += (config_.kappa * params.w[i]) * powers_[static_cast<std::size_t>(i)];
    return out;
}

ConceptSet AltObjective::concepts(const AltParameters& params, const EpochSample& sample) const {
    Matrix x = propagated(params);
    if (sample.dropout_mask) x.array() *= sample.dropout_mask->array();
    const Eigen::VectorXd scores = detail::attention_scores(x, params, nullptr);
    return {detail::aggregate_concepts(x, scores, labeled_class_, graph_.class_count(),
                                       sample.neighborhoods)};
}

LossBreakdown AltObjective::evaluate(const AltParameters& params, const EpochSample& sample,
                                     AltGradient* grad) const {
    // Forward.
    Matrix x = propagated(params);
    if (sample.dropout_mask) x.array() *= sample.dropout_mask->array();

    detail::AttentionForward att;
    detail::attention_scores(x, params, &att);
    const Matrix centers = detail::aggregate_concepts(x, att.score, labeled_class_,
                                                      graph_.class_count(), sample.neighborhoods);
    const Matrix dist = detail::concept_distances(x, centers);
    const Matrix d = detail::distance_softmax(dist, config_.lambda);

    Matrix g_ce, g_smooth, g_sep;
    const auto terms = detail::probability_terms(d, labeled_, labeled_class_, op_,
                                                 grad ? &g_ce : nullptr, grad ? &g_smooth : nullptr);
    const double sep = detail::separation(centers, config_.theta, grad ? &g_sep : nullptr);
    const LossBreakdown out = detail::combine(terms, sep, config_);
    if (!grad) return out;

    // Backward through the distance softmax.
    const Matrix g_d = g_ce + config_.alpha * g_smooth;
    const Eigen::VectorXd row_dot = (g_d.array() * d.array()).rowwise().sum();
    Matrix g_z = d.array() * (g_d.colwise() - row_dot).array();
    const Matrix g_dist = -config_.lambda * g_z;

    Matrix g_x = Matrix::Zero(x.rows(), x.cols());
    Matrix g_c = config_.beta * g_sep;
    for (Eigen::Index c = 0; c < centers.rows(); ++c) {
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const double len = dist(i, c);
            if (len <= 0.0 || g_dist(i, c) == 0.0) continue;
            const auto g = ((g_dist(i, c) / len) * (x.row(i) - centers.row(c))).eval();
            g_x.row(i) += g;
            g_c.row(c) -= g;
        }
    }

    // Backward through concept aggregation and the attention softmax.
    Eigen::VectorXd g_score = Eigen::VectorXd::Zero(x.rows());
    Eigen::VectorXd local, g_a;
    for (std::size_t t = 0; t < sample.neighborhoods.size(); ++t) {
        const auto& hood = sample.neighborhoods[t];
        const auto c = static_cast<Eigen::Index>(labeled_class_[t]);
        const auto m = static_cast<Eigen::Index>(hood.size());
        local.resize(m);
        g_a.resize(m);
        for (Eigen::Index q = 0; q < m; ++q) local[q] = att.score[static_cast<Eigen::Index>(hood[static_cast<std::size_t>(q)])];
        const Eigen::VectorXd a = detail::softmax(local);
        const double inv = 1.0 / (static_cast<double>(class_sizes_[static_cast<std::size_t>(c)]) *
                                  static_cast<double>(m));
        for (Eigen::Index q = 0; q < m; ++q) {
            const auto j = static_cast<Eigen::Index>(hood[static_cast<std::size_t>(q)]);
            g_x.row(j) += (inv * (1.0 + a[q])) * g_c.row(c);
            g_a[q] = inv * x.row(j).dot(g_c.row(c));
        }
        const double mean = a.dot(g_a);
        for (Eigen::Index q = 0; q < m; ++q)
            g_score[static_cast<Eigen::Index>(hood[static_cast<std::size_t>(q)])] += a[q] * (g_a[q] - mean);
    }

    // Attention MLP.
    grad->w2 = att.act.transpose() * g_score;
    grad->b2 = g_score.sum();
    Matrix g_pre = g_score * params.w2.transpose();
    g_pre.array() *= (att.pre.array() > 0.0).cast<double>();
    grad->w1 = g_pre.transpose() * x;
    grad->b1 = g_pre.colwise().sum().transpose();
    g_x += g_pre * params.w1;

    if (sample.dropout_mask) g_x.array() *= sample.dropout_mask->array();

    grad->w.resize(config_.k);
    for (int i = 0; i < config_.k; ++i)
        grad->w[i] = config_.kappa * (g_x.array() * powers_[static_cast<std::size_t>(i)].array()).sum();
    return out;
}

} // namespace oga::alt
