#pragma once

#include "coderag/code_kb.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace coderag {

/// Result entry of any retrieval path. `item` is the KB ordinal.
struct ScoredItem {
    std::size_t item = 0;
    double score = 0.0;

    friend bool operator==(const ScoredItem&, const ScoredItem&) = default;
};

/// Identifier-aware search terms: split on non-alphanumerics, then on
/// snake_case and CamelCase boundaries, lowercased.
/// "parseHTTPConfig_v2" -> ["parse", "http", "config", "v2"]
std::vector<std::string> search_terms(std::string_view text);

struct Posting {
    std::uint32_t item = 0;
    std::uint32_t tf = 0;

    friend bool operator==(const Posting&, const Posting&) = default;
};

/// TF-IDF inverted index, tf = raw count, idf = ln(N / df) + 1, cosine scoring.
class SparseIndex {
public:
    static SparseIndex build(const CodeKnowledgeBase& kb);
    static SparseIndex build(const std::vector<std::string>& documents);

    /// At most j items with score > 0, descending score, ties by ascending ordinal.
    std::vector<ScoredItem> retrieve(std::string_view query_text, std::size_t j) const;

    std::size_t item_count() const noexcept { return item_norms_.size(); }
    std::size_t vocabulary_size() const noexcept { return terms_.size(); }
    std::optional<std::uint32_t> term_id(std::string_view term) const;
    std::size_t document_frequency(std::string_view term) const;
    double idf(std::string_view term) const;
    double item_norm(std::size_t item) const { return item_norms_.at(item); }
    const std::vector<std::string>& terms() const noexcept { return terms_; }
    const std::vector<double>& idf_table() const noexcept { return idf_; }
    const std::vector<Posting>& postings(std::uint32_t term) const { return postings_.at(term); }

    void save(const std::filesystem::path& file) const;
    static SparseIndex load(const std::filesystem::path& file);

    friend bool operator==(const SparseIndex&, const SparseIndex&) = default;

private:
    std::vector<std::string> terms_;  // sorted; position = term id
    std::vector<double> idf_;
    std::vector<std::vector<Posting>> postings_;
    std::vector<double> item_norms_;
};

}  // namespace coderag
