#pragma once

#include "coderag/clients.hpp"
#include "coderag/code_kb.hpp"
#include "coderag/sparse_index.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace coderag {

/// Exact-scan cosine index. Rows are L2-normalized at build time so scoring
/// is a dot product; all-zero rows are kept but never returned.
class DenseIndex {
public:
    DenseIndex() = default;
    DenseIndex(std::size_t dim, std::vector<std::string> ids, std::vector<float> rows);

    /// Embeds every item's text. Throws EmbedderUnavailable (with the number
    /// of items embedded so far in the message) if the embedder fails.
    static DenseIndex build(const CodeKnowledgeBase& kb, EmbedderClient& embedder);
    static DenseIndex from_vectors(std::vector<std::string> ids, const std::vector<std::vector<float>>& raw);

    /// Top-j by cosine with the unit-normalized query vector, ties by ascending
    /// ordinal. No score floor: orthogonal items are returned with score 0.
    std::vector<ScoredItem> search(std::span<const float> query, std::size_t j) const;
    std::vector<ScoredItem> retrieve(std::string_view query_text, EmbedderClient& embedder, std::size_t j) const;

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return ids_.size(); }
    std::span<const float> row(std::size_t i) const { return {rows_.data() + i * dim_, dim_}; }
    bool is_zero(std::size_t i) const { return zero_[i] != 0; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }

    /// `dense.vec`: "CRDV" magic, u32 version, u32 dim, u32 count, then
    /// count*dim float32 little-endian, then per row u32 length + id bytes.
    void save(const std::filesystem::path& file) const;
    static DenseIndex load(const std::filesystem::path& file);

    friend bool operator==(const DenseIndex&, const DenseIndex&) = default;

private:
    std::size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<float> rows_;
    std::vector<char> zero_;
};

/// Scales v to unit L2 norm in place; returns false (leaving zeros) for a zero vector.
bool normalize(std::vector<float>& v);

}  // namespace coderag
