#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "oga/graph.hpp"

namespace oga {

/// Dense n x f node-embedding table; row i is the embedding of node i.
struct EmbeddingMatrix {
    Matrix values;

    std::size_t rows() const noexcept { return static_cast<std::size_t>(values.rows()); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(values.cols()); }
    std::span<const double> row(std::size_t i) const {
        return {values.data() + i * dim(), dim()};
    }
};

/// Binary layout: magic "OGAEMB1\0", u64 rows, u64 cols (little endian),
/// then rows*cols little-endian float32 values in row-major order.
inline constexpr char kEmbeddingMagic[8] = {'O', 'G', 'A', 'E', 'M', 'B', '1', '\0'};

EmbeddingMatrix load_embeddings(const std::filesystem::path& path);

/// Values are narrowed to float32 on write.
void save_embeddings(const EmbeddingMatrix& embeddings, const std::filesystem::path& path);

/// Debug import of `node_id,v0,...,v{f-1}`; rows are placed by the graph's
/// node index for each id.
EmbeddingMatrix load_embeddings_csv(const std::filesystem::path& path,
                                    const TextAttributedGraph& graph);

/// Throws DataError naming both counts when the row count differs from the
/// graph's node count, or when any entry is non-finite.
void bind_to_graph(const EmbeddingMatrix& embeddings, const TextAttributedGraph& graph);

/// Deterministic stand-in encoder.  Each text is split into lowercase
/// alphanumeric tokens; every token contributes a pseudo-random +-1 vector
/// derived from (token, seed) and the sum is L2-normalised.  Identical
/// texts give identical rows, and shared words give correlated rows.
EmbeddingMatrix mock_embed(std::span<const std::string> texts, std::size_t dim, std::uint64_t seed);

/// Cosine similarity; 0 when either vector has zero norm.
double cosine(std::span<const double> u, std::span<const double> v);

inline double cosine(const Eigen::Ref<const Eigen::RowVectorXd>& u,
                     const Eigen::Ref<const Eigen::RowVectorXd>& v) {
    return cosine(std::span<const double>(u.data(), static_cast<std::size_t>(u.size())),
                  std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

/// Rows scaled to unit norm; zero rows stay zero.
Matrix normalized_rows(const Matrix& values);

} // namespace oga
