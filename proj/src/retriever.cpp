#include "coderag/retriever.hpp"

#include <spdlog/spdlog.h>

#include <set>

namespace coderag {

std::string_view to_string(RetrievalPath path) {
    switch (path) {
        case RetrievalPath::Sparse: return "sparse";
        case RetrievalPath::Dense: return "dense";
        case RetrievalPath::Dataflow: return "dataflow";
    }
    return "sparse";
}

PathSet PathSet::parse(std::string_view spec) {
    PathSet set{false, false, false};
    std::size_t start = 0;
    while (start <= spec.size()) {
        std::size_t comma = spec.find_first_of(",+", start);
        if (comma == std::string_view::npos) comma = spec.size();
        const auto name = spec.substr(start, comma - start);
        if (name == "sparse" || name == "s") set.sparse = true;
        else if (name == "dense" || name == "d") set.dense = true;
        else if (name == "dataflow" || name == "df") set.dataflow = true;
        else if (!name.empty()) throw std::invalid_argument("unknown retrieval path '" + std::string(name) + "'");
        start = comma + 1;
    }
    if (set.empty()) throw std::invalid_argument("at least one retrieval path is required");
    return set;
}

std::string PathSet::to_string() const {
    std::string out;
    auto append = [&](bool on, std::string_view name) {
        if (!on) return;
        if (!out.empty()) out += ',';
        out += name;
    };
    append(sparse, "sparse");
    append(dense, "dense");
    append(dataflow, "dataflow");
    return out;
}

RetrievalList merge_paths(const RetrievalQuery& query, const PathResults& results, const CodeKnowledgeBase& kb) {
    RetrievalList list;
    list.query = query;
    std::set<std::size_t> seen;
    auto append = [&](const std::vector<ScoredItem>& hits, RetrievalPath path) {
        for (std::size_t r = 0; r < hits.size(); ++r) {
            const auto& hit = hits[r];
            if (hit.item >= kb.items.size()) throw std::out_of_range("retrieval returned an item outside the KB");
            if (!seen.insert(hit.item).second) continue;
            list.candidates.push_back({hit.item, kb.items[hit.item].id, path, r + 1, hit.score});
        }
    };
    append(results.dataflow, RetrievalPath::Dataflow);
    append(results.sparse, RetrievalPath::Sparse);
    append(results.dense, RetrievalPath::Dense);
    return list;
}

RetrievalList retrieve_all(const RetrievalQuery& query, const RetrieverInputs& inputs, std::size_t j,
                           const PathSet& paths, PathResults* raw) {
    if (j == 0) throw std::invalid_argument("j must be >= 1");
    PathResults results;
    if (paths.dataflow && inputs.graph) {
        results.dataflow = dataflow_retrieve(*inputs.graph, inputs.kb);
    }
    if (paths.sparse) results.sparse = inputs.sparse.retrieve(query.combined_text, j);
    if (paths.dense) {
        if (!inputs.dense || !inputs.embedder) throw std::invalid_argument("dense path enabled without an index");
        try {
            results.dense = inputs.dense->retrieve(query.combined_text, *inputs.embedder, j);
        } catch (const ClientUnavailable& e) {
            throw EmbedderUnavailable(std::string("dense retrieval: ") + e.what());
        }
    }
    if (!paths.dense || !paths.sparse || !paths.dataflow) {
        spdlog::debug("retrieval paths limited to {}; list holds at most {} candidates", paths.to_string(),
                      (paths.sparse ? j : 0) + (paths.dense ? j : 0) + (paths.dataflow ? 1 : 0));
    }
    auto list = merge_paths(query, results, inputs.kb);
    if (raw) *raw = std::move(results);
    return list;
}

}  // namespace coderag
