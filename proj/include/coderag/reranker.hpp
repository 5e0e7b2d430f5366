#pragma once

#include "coderag/clients.hpp"
#include "coderag/code_kb.hpp"
#include "coderag/retriever.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace coderag {

struct TraceEntry {
    std::vector<std::string> window;  // item ids shown to the picker
    std::string chosen;
    bool fallback = false;  // reply unusable twice; position 0 taken

    friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

struct RerankOutcome {
    std::vector<std::string> ordered_items;      // extraction order, length min(u, n)
    std::vector<std::size_t> ordered_positions;  // positions in the input list
    std::size_t picker_calls = 0;
    std::vector<TraceEntry> trace;
    bool degraded = false;  // picker unavailable; input order kept

    friend bool operator==(const RerankOutcome&, const RerankOutcome&) = default;
};

/// Window k covers [k(w-1), k(w-1)+w); consecutive windows share one item and
/// the last may be shorter. Empty input gives no windows.
std::vector<std::vector<std::size_t>> make_windows(std::size_t count, std::size_t window_size);

/// Shape of the tournament over `count` items: level 0 holds the windows,
/// every further level groups the previous level's nodes w at a time.
struct TournamentShape {
    std::size_t window_size = 2;
    std::vector<std::vector<std::size_t>> level_sizes;  // children (or items) per node

    static TournamentShape of(std::size_t count, std::size_t window_size);
    /// Picker calls needed to find the first winner.
    std::size_t build_calls() const;
    /// Most calls one extraction can trigger: the union of the root paths of
    /// two adjacent leaves (an item lives in at most two windows).
    std::size_t replay_calls() const;
    /// Upper bound on picker calls for extracting u items with a picker that
    /// always returns a valid selection.
    std::size_t call_bound(std::size_t u) const;
};

/// BestFit tournament: windows are the leaves, each node keeps the picker's
/// choice among its children's winners, the root winner is extracted u times
/// and only nodes that had the extracted item as winner are replayed.
/// A picker that throws ClientUnavailable degrades to the input order.
RerankOutcome heap_rerank(const std::vector<std::string>& item_ids, const std::vector<std::string>& texts,
                          std::string_view query, PickerClient& picker, std::size_t u, std::size_t window_size);

struct RerankParams {
    std::size_t keep = 10;        // u
    std::size_t window_size = 3;  // w
};

RerankOutcome rerank(const RetrievalList& list, const CodeKnowledgeBase& kb, PickerClient& picker,
                     const RerankParams& params = {});

}  // namespace coderag
