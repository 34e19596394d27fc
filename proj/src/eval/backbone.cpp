#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "oga/adam.hpp"
#include "oga/error.hpp"
#include "oga/eval.hpp"
#include "oga/random.hpp"

namespace oga::eval {

namespace {

Matrix softmax_rows(const Matrix& z) {
    Matrix p(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double top = z.row(i).maxCoeff();
        p.row(i) = (z.row(i).array() - top).exp();
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

std::vector<double> pack(const MiniGcnParams& p) {
    std::vector<double> flat(p.w0.data(), p.w0.data() + p.w0.size());
    flat.insert(flat.end(), p.w1.data(), p.w1.data() + p.w1.size());
    return flat;
}

void unpack(MiniGcnParams& p, std::span<const double> flat) {
    std::copy_n(flat.begin(), p.w0.size(), p.w0.data());
    std::copy_n(flat.begin() + p.w0.size(), p.w1.size(), p.w1.data());
}

int argmax(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    int best = 0;
    for (Eigen::Index c = 1; c < row.size(); ++c)
        if (row(c) > row(best)) best = static_cast<int>(c);
    return best;
}

} // namespace

Backbone::Backbone(const TextAttributedGraph& graph, const Matrix& features) {
    if (static_cast<std::size_t>(features.rows()) != graph.node_count())
        throw DataError("backbone features and graph sizes differ");
    t_ = build_operator(graph, 0.0).matrix;
    tx_ = t_ * features;
}

Matrix Backbone::logits(const MiniGcnParams& p) const {
    const Matrix h = (tx_ * p.w0).cwiseMax(0.0);
    return t_ * (h * p.w1);
}

double Backbone::loss(const MiniGcnParams& p, std::span<const int> labels, MiniGcnParams* grad) const {
    const Matrix z = tx_ * p.w0;
    const Matrix h = z.cwiseMax(0.0);
    const Matrix th = t_ * h;
    const Matrix probs = softmax_rows(th * p.w1);
    std::size_t count = 0;
    for (int y : labels) count += y >= 0;
    if (count == 0) throw DataError("backbone training needs at least one labelled node");
    double total = 0.0;
    Matrix d = Matrix::Zero(probs.rows(), probs.cols());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0) continue;
        const auto r = static_cast<Eigen::Index>(i);
        total -= std::log(probs(r, labels[i]));
        d.row(r) = probs.row(r) / static_cast<double>(count);
        d(r, labels[i]) -= 1.0 / static_cast<double>(count);
    }
    if (grad) {
        grad->w1 = th.transpose() * d;
        const Matrix dh = t_.transpose() * (d * p.w1.transpose());
        const Matrix dz = dh.cwiseProduct((z.array() > 0.0).cast<double>().matrix());
        grad->w0 = tx_.transpose() * dz;
    }
    return total / static_cast<double>(count);
}

MiniGcnParams Backbone::train(std::span<const int> labels, std::size_t classes, const BackboneConfig& config) const {
    MiniGcnParams p;
    const auto f = tx_.cols(), h = static_cast<Eigen::Index>(config.hidden), c = static_cast<Eigen::Index>(classes);
    Rng rng = make_rng(config.seed);
    auto glorot = [&](Matrix& m, Eigen::Index rows, Eigen::Index cols) {
        const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
        std::uniform_real_distribution<double> u(-a, a);
        m.resize(rows, cols);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    };
    glorot(p.w0, f, h);
    glorot(p.w1, h, c);
    for (int y : labels)
        if (y >= c) throw DataError("label id " + std::to_string(y) + " outside " + std::to_string(classes) + " classes");

    auto flat = pack(p);
    AdamOptimizer adam(flat.size(), config.learning_rate);
    MiniGcnParams grad;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double l = loss(p, labels, &grad);
        if (!std::isfinite(l)) throw NumericError("backbone loss is not finite at epoch " + std::to_string(epoch));
        const auto g = pack(grad);
        adam.step(flat, g);
        unpack(p, flat);
    }
    return p;
}

double Backbone::accuracy(const MiniGcnParams& params, std::span<const int> target,
                          std::span<const int> to_truth) const {
    const Matrix z = logits(params);
    std::size_t total = 0, correct = 0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        if (target[i] < 0) continue;
        ++total;
        int pred = argmax(z.row(static_cast<Eigen::Index>(i)));
        if (!to_truth.empty()) pred = to_truth[static_cast<std::size_t>(pred)];
        correct += pred == target[i];
    }
    if (total == 0) throw DataError("backbone evaluation mask is empty");
    return static_cast<double>(correct) / static_cast<double>(total);
}

BackboneScores evaluate_backbone(const TextAttributedGraph& graph, const Matrix& features, const GroundTruth& truth,
                                 const AugmentedLabels& augmented, const BackboneConfig& config) {
    const std::size_t n = graph.node_count();
    if (augmented.label.size() != n || truth.truth.size() != n)
        throw DataError("augmented labels, truth and graph cover different node counts");
    const Backbone net(graph, features);

    // Truth ids of the known graph classes.
    const auto known = graph.class_names();
    std::vector<int> class_to_truth(known.size(), -1);
    for (std::size_t c = 0; c < known.size(); ++c) {
        const auto it = std::find(truth.topics.begin(), truth.topics.end(), known[c]);
        if (it == truth.topics.end()) throw DataError("class `" + known[c] + "` missing from the ground truth");
        class_to_truth[c] = static_cast<int>(it - truth.topics.begin());
    }

    std::vector<int> test(n, -1), lower(n, -1), upper(n, -1), ours(n, -1);
    for (NodeIndex i = 0; i < n; ++i) {
        if (truth.split[i] == Split::test) test[i] = truth.truth[i];
        if (truth.split[i] != Split::train) continue;
        upper[i] = truth.truth[i];
        if (auto y = graph.label(i)) lower[i] = *y;
        ours[i] = augmented.label[i];
    }

    // Generated ids go to the true class holding most of their nodes
    // (lowest class id on ties); known ids to their own class.
    std::vector<int> ours_to_truth(augmented.names.size(), 0);
    for (std::size_t c = 0; c < known.size(); ++c) ours_to_truth[c] = class_to_truth[c];
    std::vector<std::map<int, std::size_t>> votes(augmented.names.size());
    for (NodeIndex i = 0; i < n; ++i)
        if (augmented.label[i] >= 0) ++votes[static_cast<std::size_t>(augmented.label[i])][truth.truth[i]];
    for (std::size_t g = known.size(); g < augmented.names.size(); ++g) {
        std::size_t best = 0;
        for (auto [t, count] : votes[g])
            if (count > best) best = count, ours_to_truth[g] = t;
    }

    BackboneScores s;
    auto cfg = config;
    s.lower = net.accuracy(net.train(lower, known.size(), cfg), test, class_to_truth);
    s.ours = net.accuracy(net.train(ours, augmented.names.size(), cfg), test, ours_to_truth);
    s.upper = net.accuracy(net.train(upper, truth.topics.size(), cfg), test);
    return s;
}

} // namespace oga::eval
