#include "doctest.h"

#include <cmath>
#include <random>
#include <set>

#include "oga/error.hpp"
#include "oga/eval.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace oga;
using namespace oga::eval;
using oga::testing::make_graph;

namespace {

alt::RejectionOutcome outcome_of(std::vector<ClassId> prediction) {
    alt::RejectionOutcome o;
    o.confidence.assign(prediction.size(), 1.0);
    o.entropy.assign(prediction.size(), 0.0);
    o.prediction = std::move(prediction);
    return o;
}

// Known classes "a" (0) and "b" (1), unknown "u" (2).
GroundTruth truth_abu(std::vector<int> truth) {
    GroundTruth g;
    g.topics = {"a", "b", "u"};
    g.unknown = {false, false, true};
    g.split.assign(truth.size(), Split::test);
    g.truth = std::move(truth);
    return g;
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    return m;
}

} // namespace

TEST_CASE("accuracy") {
    // Nodes 0 and 1 are labelled and ignored.
    const auto g = make_graph(6, {}, {"a", "b"});
    const auto t = truth_abu({0, 1, 0, 1, 0, 2});
    CHECK(metric_accuracy(g, outcome_of({0, 1, 0, 1, 0, alt::kUnknown}), t) == 1.0);
    CHECK(metric_accuracy(g, outcome_of({0, 1, 0, alt::kUnknown, 1, 0}), t) == doctest::Approx(1.0 / 3.0));
    // Half correct, half rejected.
    const auto t4 = truth_abu({0, 1, 0, 1, 2, 2});
    CHECK(metric_accuracy(g, outcome_of({0, 1, 0, alt::kUnknown, 0, 0}), t4) == 0.5);
    CHECK(metric_accuracy(g, outcome_of({0, 1, 0, alt::kUnknown, 0, 0}), t4, true) == 1.0);
    const auto all_unknown = truth_abu({0, 1, 2, 2, 2, 2});
    CHECK_THROWS_AS(metric_accuracy(g, outcome_of({0, 1, 0, 0, 0, 0}), all_unknown), DataError);
}

TEST_CASE("coverage and precision") {
    const auto g = make_graph(20, {});
    std::vector<int> truth(20, 0);
    for (int i = 0; i < 10; ++i) truth[static_cast<std::size_t>(i)] = 2;
    const auto t = truth_abu(truth);

    std::vector<ClassId> pred(20, 0);
    for (int i = 0; i < 10; ++i) pred[static_cast<std::size_t>(i)] = alt::kUnknown;
    auto cp = metric_coverage_precision(g, outcome_of(pred), t);
    CHECK(cp.coverage == 1.0);
    CHECK(cp.precision == 1.0);

    // 10 true unknown, 8 rejected of which 6 true.
    pred.assign(20, 0);
    for (int i = 0; i < 6; ++i) pred[static_cast<std::size_t>(i)] = alt::kUnknown;
    pred[15] = pred[16] = alt::kUnknown;
    cp = metric_coverage_precision(g, outcome_of(pred), t);
    CHECK(cp.coverage == doctest::Approx(0.6));
    CHECK(cp.precision == doctest::Approx(0.75));
    CHECK_FALSE(cp.nothing_rejected);

    cp = metric_coverage_precision(g, outcome_of(std::vector<ClassId>(20, 0)), t);
    CHECK(cp.coverage == 0.0);
    CHECK(cp.precision == 0.0);
    CHECK(cp.nothing_rejected);

    CHECK_THROWS_AS(metric_coverage_precision(g, outcome_of(pred), truth_abu(std::vector<int>(20, 1))), DataError);
}

TEST_CASE("coverage and precision match a confusion-matrix oracle") {
    std::mt19937_64 rng(4);
    std::bernoulli_distribution coin(0.5), lab(0.2);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 5 + static_cast<std::size_t>(trial % 30);
        std::vector<std::string> labels(n);
        std::vector<int> truth(n);
        std::vector<ClassId> pred(n);
        for (std::size_t i = 0; i < n; ++i) {
            truth[i] = coin(rng) ? 2 : static_cast<int>(i % 2);
            if (truth[i] != 2 && lab(rng)) labels[i] = truth[i] ? "b" : "a";
            pred[i] = coin(rng) ? alt::kUnknown : 0;
        }
        labels[0] = "a";
        labels[1] = "b";
        truth[0] = 0;
        truth[1] = 1;
        const auto g = make_graph(n, {}, labels);
        // tp: rejected & unknown, fn: accepted & unknown, fp: rejected & known.
        double tp = 0, fn = 0, fp = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!labels[i].empty()) continue;
            const bool u = truth[i] == 2, r = pred[i] == alt::kUnknown;
            tp += u && r;
            fn += u && !r;
            fp += !u && r;
        }
        if (tp + fn == 0) continue;
        const auto cp = metric_coverage_precision(g, outcome_of(pred), truth_abu(truth));
        CHECK(cp.coverage == tp / (tp + fn));
        CHECK(cp.precision == (tp + fp > 0 ? tp / (tp + fp) : 0.0));
    }
}

TEST_CASE("label quality") {
    const std::vector<std::string> known{"neural_network", "rule_learning"};
    const auto mock = mock_label_embedder();
    auto q = metric_label_quality(known, known, known, mock);
    CHECK(q.k_to_g == doctest::Approx(
                          (1.0 + 1.0 + 2.0 * cosine(mock(std::vector<std::string>{"neural_network"}).row(0),
                                                    mock(std::vector<std::string>{"rule_learning"}).row(0))) /
                          4.0));

    std::vector<std::string> one{"neural_network"};
    q = metric_label_quality(one, one, {}, mock);
    CHECK(q.k_to_g == doctest::Approx(1.0));
    CHECK(q.single_known);
    CHECK(q.k_to_k == 1.0);
    CHECK(std::isnan(q.g_to_u));

    // Constructed embedder: labels starting with 'k' on axis 0, others on axis 1.
    const LabelEmbedder axes = [](std::span<const std::string> labels) {
        Matrix m = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), 2);
        for (std::size_t i = 0; i < labels.size(); ++i) m(static_cast<Eigen::Index>(i), labels[i][0] == 'k' ? 0 : 1) = 1.0;
        return m;
    };
    q = metric_label_quality(std::vector<std::string>{"k1", "k2"}, std::vector<std::string>{"g1"}, {}, axes);
    CHECK(q.k_to_g == 0.0);
    CHECK(q.k_to_k == 1.0);

    // Two known labels with hand-chosen vectors: cos = 3/5.
    const LabelEmbedder hand = [](std::span<const std::string> labels) {
        Matrix m(static_cast<Eigen::Index>(labels.size()), 2);
        for (std::size_t i = 0; i < labels.size(); ++i)
            m.row(static_cast<Eigen::Index>(i)) = labels[i] == "x" ? Eigen::RowVector2d(1, 0) : Eigen::RowVector2d(3, 4);
        return m;
    };
    q = metric_label_quality(std::vector<std::string>{"x", "y"}, {}, {}, hand);
    CHECK(q.k_to_k == doctest::Approx(0.6));
    CHECK_THROWS_AS(metric_label_quality({}, one, one, mock), DataError);
}

TEST_CASE("allocate labels") {
    // 0: labelled a, 1: accepted as b, 2..4: rejected.
    const auto g = make_graph(5, {}, {"a", "", "", "", "", ""});
    const auto o = outcome_of({0, 0, alt::kUnknown, alt::kUnknown, alt::kUnknown});
    gla::Ledger ledger;
    ledger.nodes = {{2, "x", gla::Provenance::llm, "merged_ijk", gla::Provenance::fused},
                    {3, "y", gla::Provenance::llm, "merged_ijk", gla::Provenance::fused},
                    {4, "z", gla::Provenance::llm, "a", gla::Provenance::distilled}};
    const auto aug = allocate_labels(g, o, ledger);
    CHECK(aug.names == std::vector<std::string>{"a", "merged_ijk"});
    CHECK(aug.label == std::vector<int>{0, 0, 1, 1, 0});

    ledger.nodes.pop_back();
    CHECK_THROWS_WITH_AS(allocate_labels(g, o, ledger), doctest::Contains("4"), DataError);
}

TEST_CASE("backbone loss and gradient") {
    std::mt19937_64 rng(8);
    SUBCASE("zero weights give log c") {
        const auto g = oga::testing::random_graph(6, 0.4, 1);
        const Backbone net(g, random_matrix(6, 4, rng));
        MiniGcnParams p{Matrix::Zero(4, 5), Matrix::Zero(5, 3)};
        const std::vector<int> y{0, 1, 2, -1, 0, 1};
        CHECK(net.loss(p, y) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
        CHECK_THROWS_AS(net.loss(p, std::vector<int>(6, -1)), DataError);
    }
    SUBCASE("analytic gradient matches central differences") {
        double worst = 0.0;
        for (std::uint64_t seed = 0; seed < 24; ++seed)
            worst = std::max(worst, oga::testing::backbone_gradient_error(seed));
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("backbone training and evaluation") {
    SUBCASE("exact weights reproduce the labels") {
        const auto g = make_graph(3, {});
        const Backbone net(g, Matrix::Identity(3, 3));
        MiniGcnParams p{Matrix::Identity(3, 3), Matrix::Zero(3, 3)};
        p.w1 << 0, 0, 1, 1, 0, 0, 0, 1, 0; // node i -> class (i + 2) % 3
        CHECK(net.accuracy(p, std::vector<int>{2, 0, 1}) == 1.0);
    }
    SUBCASE("uniform logits pick class 0") {
        const auto g = make_graph(4, {{0, 1}});
        std::mt19937_64 rng(1);
        const Backbone net(g, random_matrix(4, 2, rng));
        MiniGcnParams p{random_matrix(2, 3, rng), Matrix::Zero(3, 3)};
        CHECK(net.accuracy(p, std::vector<int>{0, 1, 0, 2}) == 0.5);
        CHECK_THROWS_AS(net.accuracy(p, std::vector<int>(4, -1)), DataError);
    }
    SUBCASE("hand four node case") {
        // Path 0-1, isolated 2 and 3.  T rows: 0,1 -> (x0 + x1)/2; 2 -> x2; 3 -> x3.
        const auto g = make_graph(4, {{0, 1}});
        Matrix x(4, 2);
        x << 1, 0, 0, 3, 1, 0, 0, 1;
        const Backbone net(g, x);
        MiniGcnParams p{Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
        // h = relu(T X): rows (.5,1.5), (.5,1.5), (1,0), (0,1); logits T h:
        // (.5,1.5), (.5,1.5), (1,0), (0,1) -> argmax 1, 1, 0, 1.
        CHECK(net.accuracy(p, std::vector<int>{0, 1, 0, 1}) == 0.75);
    }
    SUBCASE("training is deterministic and fits separable data") {
        SyntheticSpec spec;
        spec.nodes_per_class = 20;
        const auto data = generate_synthetic(spec);
        const Backbone net(data.graph, data.embeddings.values);
        BackboneConfig cfg;
        cfg.seed = 3;
        const auto a = net.train(data.truth, 6, cfg);
        const auto b = net.train(data.truth, 6, cfg);
        CHECK((a.w0.array() == b.w0.array()).all());
        CHECK((a.w1.array() == b.w1.array()).all());
        CHECK(net.accuracy(a, data.truth) > 0.95);
    }
}

TEST_CASE("synthetic generator") {
    SyntheticSpec spec;
    spec.nodes_per_class = 20;
    const auto a = generate_synthetic(spec);
    const auto b = generate_synthetic(spec);
    CHECK(a.graph == b.graph);
    CHECK((a.embeddings.values.array() == b.embeddings.values.array()).all());
    CHECK(a.split == b.split);
    CHECK(a.graph.node_count() == 120);
    CHECK(a.graph.class_count() == 4);
    CHECK(a.known_classes() == 4);

    for (int k = 0; k < 6; ++k) {
        std::size_t tr = 0, va = 0, te = 0, labelled = 0;
        for (NodeIndex i = 0; i < a.graph.node_count(); ++i) {
            if (a.truth[i] != k) continue;
            tr += a.split[i] == Split::train;
            va += a.split[i] == Split::val;
            te += a.split[i] == Split::test;
            labelled += a.graph.label(i).has_value();
        }
        CHECK(tr == 8);
        CHECK(va == 4);
        CHECK(te == 8);
        CHECK(labelled == (k < 4 ? 8u : 0u));
    }
    // Texts name the class topic for the mock annotator.
    for (NodeIndex i = 0; i < a.graph.node_count(); ++i)
        CHECK(llm::mock_annotate(a.graph.text(i)) == a.topics[static_cast<std::size_t>(a.truth[i])]);

    spec.p_inter = 0.0;
    const auto sep = generate_synthetic(spec);
    for (const auto& e : sep.graph.edges()) CHECK(sep.truth[e.u] == sep.truth[e.v]);

    spec.separation = 0.0;
    spec.noise = 0.0;
    CHECK(generate_synthetic(spec).embeddings.values.cwiseAbs().maxCoeff() == 0.0);

    spec = {};
    spec.nodes_per_class = 0;
    CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
    spec = {};
    spec.p_inter = 0.5;
    CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
    spec = {};
    spec.unknown_holdout = 6;
    CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
}

TEST_CASE("truth and metrics files") {
    SyntheticSpec spec;
    spec.nodes_per_class = 10;
    const auto data = generate_synthetic(spec);
    oga::testing::TempDir dir;
    write_truth_csv(dir / "truth.csv", data);
    const auto back = read_truth_csv(dir / "truth.csv", data.graph);
    const auto direct = truth_of(data);
    CHECK(back.split == direct.split);
    for (NodeIndex i = 0; i < data.graph.node_count(); ++i)
        CHECK(back.topics[static_cast<std::size_t>(back.truth[i])] ==
              direct.topics[static_cast<std::size_t>(direct.truth[i])]);
    CHECK(std::count(back.unknown.begin(), back.unknown.end(), true) == 2);

    MetricsReport r;
    r.accuracy = 0.9;
    r.coverage = 0.8;
    r.precision = 0.7;
    r.quality = {0.1, 0.2, std::nan(""), false};
    r.backbone = {0.5, 0.6, 0.7};
    r.llm_calls = llm_calls(100, 13);
    CHECK(r.llm_calls.reduction == 1.0 - 13.0 / 100.0);
    CHECK(llm_calls(0, 0).reduction == 0.0);
    write_metrics_json(dir / "metrics.json", r);
    const auto m = read_metrics_json(dir / "metrics.json");
    CHECK(m.accuracy == r.accuracy);
    CHECK(std::isnan(m.quality.g_to_u));
    CHECK(m.llm_calls.reduction == r.llm_calls.reduction);
    CHECK(m.backbone.ours == 0.6);
}
