#include "doctest.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "oga/embedding.hpp"
#include "oga/error.hpp"
#include "support/fixtures.hpp"

using namespace oga;
using oga::testing::TempDir;

namespace {

std::string random_text(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> letter('a', 'z');
    std::uniform_int_distribution<int> word_len(4, 9);
    std::uniform_int_distribution<int> words(3, 10);
    std::string text;
    const int count = words(rng);
    for (int w = 0; w < count; ++w) {
        if (w) text.push_back(' ');
        const int len = word_len(rng);
        for (int c = 0; c < len; ++c) text.push_back(static_cast<char>(letter(rng)));
    }
    return text;
}

} // namespace

TEST_CASE("binary embeddings round-trip bit for bit") {
    TempDir dir;
    std::mt19937_64 rng(3);
    std::normal_distribution<float> gauss;
    EmbeddingMatrix m;
    m.values.resize(7, 5);
    for (Eigen::Index i = 0; i < m.values.size(); ++i) m.values.data()[i] = gauss(rng);
    m.values(2, 3) = -0.0f;
    save_embeddings(m, dir / "e.bin");
    auto loaded = load_embeddings(dir / "e.bin");
    REQUIRE(loaded.rows() == 7);
    REQUIRE(loaded.dim() == 5);
    CHECK(std::memcmp(loaded.values.data(), m.values.data(), sizeof(double) * 35) == 0);
    CHECK(std::filesystem::file_size(dir / "e.bin") == 24 + 4 * 35);
}

TEST_CASE("binary embedding header is little endian") {
    TempDir dir;
    EmbeddingMatrix m;
    m.values = Matrix::Constant(1, 2, 1.0);
    save_embeddings(m, dir / "e.bin");
    std::ifstream in(dir / "e.bin", std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    REQUIRE(bytes.size() == 32);
    CHECK(std::memcmp(bytes.data(), "OGAEMB1\0", 8) == 0);
    CHECK(bytes[8] == 1);
    CHECK(bytes[16] == 2);
    // 1.0f = 0x3F800000
    CHECK(bytes[24] == 0x00);
    CHECK(bytes[27] == 0x3F);
}

TEST_CASE("corrupted embedding files are rejected") {
    TempDir dir;
    EmbeddingMatrix m;
    m.values = Matrix::Ones(3, 4);
    save_embeddings(m, dir / "e.bin");
    SUBCASE("bad magic") {
        std::fstream f(dir / "e.bin", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.put('X');
        f.close();
        CHECK_THROWS_AS(load_embeddings(dir / "e.bin"), FormatError);
    }
    SUBCASE("truncated payload") {
        std::filesystem::resize_file(dir / "e.bin", 24 + 4 * 11);
        try {
            load_embeddings(dir / "e.bin");
            FAIL("expected truncation error");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("truncated") != std::string::npos);
        }
    }
    SUBCASE("row count mismatch names both counts") {
        auto g = oga::testing::make_graph(5, {});
        try {
            bind_to_graph(load_embeddings(dir / "e.bin"), g);
            FAIL("expected binding error");
        } catch (const DataError& e) {
            const std::string msg = e.what();
            CHECK(msg.find('3') != std::string::npos);
            CHECK(msg.find('5') != std::string::npos);
        }
    }
}

TEST_CASE("csv embedding import") {
    TempDir dir;
    auto g = oga::testing::make_graph(2, {{0, 1}});
    oga::testing::write_text(dir / "e.csv", "node_id,v0,v1\n1,0.5,2\n0,-1,0\n");
    auto e = load_embeddings_csv(dir / "e.csv", g);
    CHECK(e.values(1, 1) == 2.0);
    CHECK(e.values(0, 0) == -1.0);
}

TEST_CASE("mock_embed is deterministic and normalised") {
    std::vector<std::string> texts{"graph neural networks", "graph neural networks", "quantum chemistry",
                                   "", "Graph, NEURAL networks!"};
    auto e = mock_embed(texts, 64, 11);
    for (std::size_t i = 0; i < texts.size(); ++i)
        CHECK(std::abs(e.values.row(static_cast<Eigen::Index>(i)).norm() - 1.0) < 1e-9);
    CHECK(e.values.row(0) == e.values.row(1));
    // Tokenisation ignores case and punctuation.
    CHECK(e.values.row(0) == e.values.row(4));
    auto again = mock_embed(texts, 64, 11);
    CHECK(std::memcmp(again.values.data(), e.values.data(), sizeof(double) * 5 * 64) == 0);
    auto other_seed = mock_embed(texts, 64, 12);
    CHECK(other_seed.values.row(0) != e.values.row(0));
    CHECK_THROWS_AS(mock_embed(texts, 1, 0), ConfigError);
}

TEST_CASE("mock_embed rows of distinct texts are nearly orthogonal") {
    // Calibrated once: the +-1 token hashing gives mean |cos| ~ 0.07 at f=128
    // for texts without shared words.
    std::mt19937_64 rng(2024);
    double total = 0.0;
    const int pairs = 1000;
    for (int p = 0; p < pairs; ++p) {
        std::vector<std::string> texts{random_text(rng), random_text(rng)};
        if (texts[0] == texts[1]) continue;
        auto e = mock_embed(texts, 128, 5);
        total += std::abs(cosine(e.values.row(0), e.values.row(1)));
    }
    const double mean_abs_cos = total / pairs;
    MESSAGE("mean |cos| = " << mean_abs_cos);
    CHECK(mean_abs_cos < 0.2);
}

TEST_CASE("cosine") {
    std::vector<double> x{1, 0}, y{0, 1}, z{0, 0}, w{3, 4};
    CHECK(cosine(x, y) == 0.0);
    CHECK(cosine(w, w) == doctest::Approx(1.0));
    CHECK(cosine(z, w) == 0.0);
    std::vector<double> three{1, 2, 3};
    CHECK_THROWS_AS(cosine(x, three), DataError);

    std::mt19937_64 rng(9);
    std::normal_distribution<double> gauss;
    for (int t = 0; t < 200; ++t) {
        std::vector<double> a(6), b(6);
        for (auto& v : a) v = gauss(rng);
        for (auto& v : b) v = gauss(rng);
        const double ab = cosine(a, b);
        CHECK(ab == cosine(b, a));
        CHECK(ab <= 1.0);
        CHECK(ab >= -1.0);
    }
}
