#include "oga/embedding.hpp"

#include <openssl/sha.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <vector>

#include "oga/binary_io.hpp"
#include "oga/csv.hpp"
#include "oga/error.hpp"
#include "oga/random.hpp"

namespace oga {

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    const std::string what = path.string();

    char magic[8];
    binary::read_exact(in, magic, 8, what);
    if (std::memcmp(magic, kEmbeddingMagic, 8) != 0)
        throw FormatError(what + ": bad magic, expected OGAEMB1");
    const std::uint64_t n = binary::read_u64(in, what);
    const std::uint64_t f = binary::read_u64(in, what);

    in.seekg(0, std::ios::end);
    const auto file_size = static_cast<std::uint64_t>(in.tellg());
    in.seekg(24, std::ios::beg);
    if (f != 0 && n > (file_size / 4) / f)
        throw FormatError(what + ": truncated, header declares " + std::to_string(n) + "x" +
                          std::to_string(f) + " values but the file holds " +
                          std::to_string((file_size - 24) / 4));
    const std::uint64_t expected = 24 + 4 * n * f;
    if (file_size != expected)
        throw FormatError(what + ": truncated or oversized, header declares " + std::to_string(n) +
                          "x" + std::to_string(f) + " values (" + std::to_string(expected) +
                          " bytes) but the file has " + std::to_string(file_size) + " bytes");

    EmbeddingMatrix out;
    out.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(f));
    std::vector<unsigned char> buffer(4 * f);
    for (std::uint64_t i = 0; i < n; ++i) {
        binary::read_exact(in, reinterpret_cast<char*>(buffer.data()), buffer.size(), what);
        for (std::uint64_t j = 0; j < f; ++j)
            out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                binary::decode_f32(buffer.data() + 4 * j);
    }
    return out;
}

void save_embeddings(const EmbeddingMatrix& embeddings, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(kEmbeddingMagic, 8);
    binary::write_u64(out, embeddings.rows());
    binary::write_u64(out, embeddings.dim());
    const double* data = embeddings.values.data();
    for (std::size_t k = 0; k < embeddings.rows() * embeddings.dim(); ++k)
        binary::write_f32(out, static_cast<float>(data[k]));
    if (!out) throw DataError("write failed for " + path.string());
}

EmbeddingMatrix load_embeddings_csv(const std::filesystem::path& path,
                                    const TextAttributedGraph& graph) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto rows = csv::parse(text);
    if (rows.empty() || rows[0].empty() || rows[0][0] != "node_id")
        throw FormatError(path.string() + ": header must start with node_id");
    const std::size_t f = rows[0].size() - 1;
    for (std::size_t j = 0; j < f; ++j)
        if (rows[0][j + 1] != "v" + std::to_string(j))
            throw FormatError(path.string() + ": column " + std::to_string(j + 1) + " must be v" +
                              std::to_string(j));

    EmbeddingMatrix out;
    out.values = Matrix::Zero(static_cast<Eigen::Index>(graph.node_count()),
                              static_cast<Eigen::Index>(f));
    std::vector<bool> seen(graph.node_count(), false);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != f + 1)
            throw FormatError(path.string() + ": row " + std::to_string(r + 1) + " has wrong width");
        std::int64_t id = -1;
        std::from_chars(row[0].data(), row[0].data() + row[0].size(), id);
        auto idx = graph.index_of(id);
        if (!idx) throw DataError(path.string() + ": node_id " + row[0] + " is not in the graph");
        if (seen[*idx]) throw DataError(path.string() + ": duplicate node_id " + row[0]);
        seen[*idx] = true;
        for (std::size_t j = 0; j < f; ++j) {
            try {
                out.values(static_cast<Eigen::Index>(*idx), static_cast<Eigen::Index>(j)) =
                    std::stod(row[j + 1]);
            } catch (const std::exception&) {
                throw FormatError(path.string() + ": bad number `" + row[j + 1] + "`");
            }
        }
    }
    for (NodeIndex i = 0; i < graph.node_count(); ++i)
        if (!seen[i])
            throw DataError(path.string() + ": no embedding for node_id " +
                            std::to_string(graph.node_id(i)));
    return out;
}

void bind_to_graph(const EmbeddingMatrix& embeddings, const TextAttributedGraph& graph) {
    if (embeddings.rows() != graph.node_count())
        throw DataError("embedding matrix has " + std::to_string(embeddings.rows()) +
                        " rows but the graph has " + std::to_string(graph.node_count()) + " nodes");
    if (!embeddings.values.allFinite()) throw DataError("embedding matrix has non-finite entries");
}

namespace {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || c >= 0x80) {
            current.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

// Token -> stream seed through SHA-256 so the mapping is identical on every
// platform and process.
std::uint64_t token_seed(const std::string& token, std::uint64_t seed) {
    std::string material(8, '\0');
    for (int i = 0; i < 8; ++i) material[static_cast<std::size_t>(i)] = static_cast<char>((seed >> (8 * i)) & 0xFF);
    material += token;
    std::array<unsigned char, SHA256_DIGEST_LENGTH> digest{};
    SHA256(reinterpret_cast<const unsigned char*>(material.data()), material.size(), digest.data());
    std::uint64_t out = 0;
    for (int i = 7; i >= 0; --i) out = (out << 8) | digest[static_cast<std::size_t>(i)];
    return out;
}

} // namespace

EmbeddingMatrix mock_embed(std::span<const std::string> texts, std::size_t dim, std::uint64_t seed) {
    if (dim < 2) throw ConfigError("mock embedding dimension must be >= 2");
    EmbeddingMatrix out;
    out.values = Matrix::Zero(static_cast<Eigen::Index>(texts.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < texts.size(); ++i) {
        auto tokens = tokenize(texts[i]);
        if (tokens.empty()) tokens.push_back(texts[i]);
        auto row = out.values.row(static_cast<Eigen::Index>(i));
        for (const auto& token : tokens) {
            Rng rng(token_seed(token, seed));
            std::uint64_t bits = 0;
            for (std::size_t j = 0; j < dim; ++j) {
                if (j % 64 == 0) bits = rng();
                row(static_cast<Eigen::Index>(j)) += (bits >> (j % 64)) & 1u ? 1.0 : -1.0;
            }
        }
        const double norm = row.norm();
        if (norm > 0.0) {
            row /= norm;
        } else {
            // Opposite tokens cancelled exactly; fall back to the first basis vector.
            row(0) = 1.0;
        }
    }
    return out;
}

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw DataError("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                        std::to_string(v.size()) + ")");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) return 0.0;
    const double c = dot / (std::sqrt(nu) * std::sqrt(nv));
    return std::clamp(c, -1.0, 1.0);
}

Matrix normalized_rows(const Matrix& values) {
    Matrix out = values;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double norm = out.row(i).norm();
        if (norm > 0.0) out.row(i) /= norm;
    }
    return out;
}

} // namespace oga
