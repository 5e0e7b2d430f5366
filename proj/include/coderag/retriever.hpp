#pragma once

#include "coderag/code_kb.hpp"
#include "coderag/dataflow.hpp"
#include "coderag/dense_index.hpp"
#include "coderag/query_builder.hpp"
#include "coderag/sparse_index.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace coderag {

enum class RetrievalPath { Sparse, Dense, Dataflow };

std::string_view to_string(RetrievalPath path);

struct PathSet {
    bool sparse = true;
    bool dense = true;
    bool dataflow = true;

    /// "sparse,dense,dataflow" (any subset, any order; "df" accepted for dataflow).
    static PathSet parse(std::string_view spec);
    std::string to_string() const;
    bool empty() const { return !sparse && !dense && !dataflow; }

    friend bool operator==(const PathSet&, const PathSet&) = default;
};

struct RetrievalCandidate {
    std::size_t item = 0;  // KB ordinal
    std::string item_id;
    RetrievalPath path = RetrievalPath::Sparse;
    std::size_t path_rank = 1;
    double path_score = 0.0;

    friend bool operator==(const RetrievalCandidate&, const RetrievalCandidate&) = default;
};

struct RetrievalList {
    RetrievalQuery query;
    std::vector<RetrievalCandidate> candidates;

    friend bool operator==(const RetrievalList&, const RetrievalList&) = default;
};

/// Raw per-path results before the merge.
struct PathResults {
    std::vector<ScoredItem> dataflow;
    std::vector<ScoredItem> sparse;
    std::vector<ScoredItem> dense;
};

/// Dataflow (0 or 1) ++ sparse ranks 1..j ++ dense ranks 1..j, keeping the
/// first occurrence of each item. Length <= 2j+1.
RetrievalList merge_paths(const RetrievalQuery& query, const PathResults& results, const CodeKnowledgeBase& kb);

struct RetrieverInputs {
    const CodeKnowledgeBase& kb;
    const SparseIndex& sparse;
    const DenseIndex* dense = nullptr;      // required when paths.dense
    EmbedderClient* embedder = nullptr;     // required when paths.dense
    const DataflowGraph* graph = nullptr;   // dataflow path contributes nothing when null
};

RetrievalList retrieve_all(const RetrievalQuery& query, const RetrieverInputs& inputs, std::size_t j,
                           const PathSet& paths = {}, PathResults* raw = nullptr);

}  // namespace coderag
