#include "coderag/reranker.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <optional>
#include <set>

namespace coderag {

std::vector<std::vector<std::size_t>> make_windows(std::size_t count, std::size_t window_size) {
    if (window_size < 2) throw std::invalid_argument("window size must be >= 2");
    std::vector<std::vector<std::size_t>> windows;
    if (count == 0) return windows;
    for (std::size_t start = 0;; start += window_size - 1) {
        auto& window = windows.emplace_back();
        for (std::size_t i = start; i < std::min(count, start + window_size); ++i) window.push_back(i);
        if (start + window_size >= count) break;
    }
    return windows;
}

TournamentShape TournamentShape::of(std::size_t count, std::size_t window_size) {
    TournamentShape shape;
    shape.window_size = window_size;
    if (count == 0) return shape;
    auto& leaves = shape.level_sizes.emplace_back();
    for (const auto& w : make_windows(count, window_size)) leaves.push_back(w.size());
    while (shape.level_sizes.back().size() > 1) {
        const std::size_t below = shape.level_sizes.back().size();
        std::vector<std::size_t> level;
        for (std::size_t i = 0; i < below; i += window_size) level.push_back(std::min(window_size, below - i));
        shape.level_sizes.push_back(std::move(level));
    }
    return shape;
}

std::size_t TournamentShape::build_calls() const {
    std::size_t calls = 0;
    for (const auto& level : level_sizes) {
        calls += static_cast<std::size_t>(std::count_if(level.begin(), level.end(), [](std::size_t s) { return s >= 2; }));
    }
    return calls;
}

std::size_t TournamentShape::replay_calls() const {
    if (level_sizes.empty()) return 0;
    const std::size_t leaves = level_sizes.front().size();
    std::size_t worst = 0;
    for (std::size_t leaf = 0; leaf < leaves; ++leaf) {
        std::set<std::size_t> nodes{leaf, std::min(leaf + 1, leaves - 1)};
        std::size_t calls = 0;
        for (const auto& level : level_sizes) {
            std::set<std::size_t> parents;
            for (auto n : nodes) {
                if (level[n] >= 2) ++calls;
                parents.insert(n / window_size);
            }
            nodes = std::move(parents);
        }
        worst = std::max(worst, calls);
    }
    return worst;
}

std::size_t TournamentShape::call_bound(std::size_t u) const {
    if (level_sizes.empty() || u == 0) return 0;
    return build_calls() + (u - 1) * replay_calls();
}

namespace {

class Tournament {
public:
    Tournament(const std::vector<std::string>& ids, const std::vector<std::string>& texts, std::string_view query,
               PickerClient& picker, std::size_t window_size)
        : ids_(ids), texts_(texts), query_(query), picker_(picker), w_(window_size), removed_(ids.size(), false) {
        for (auto& window : make_windows(ids.size(), window_size)) {
            nodes_.push_back({std::move(window), {}, std::nullopt});
        }
        std::vector<std::size_t> level(nodes_.size());
        for (std::size_t i = 0; i < level.size(); ++i) level[i] = i;
        levels_.push_back(level);
        while (levels_.back().size() > 1) {
            const auto& below = levels_.back();
            std::vector<std::size_t> next;
            for (std::size_t i = 0; i < below.size(); i += w_) {
                Node node;
                node.children.assign(below.begin() + static_cast<std::ptrdiff_t>(i),
                                     below.begin() + static_cast<std::ptrdiff_t>(std::min(below.size(), i + w_)));
                nodes_.push_back(std::move(node));
                next.push_back(nodes_.size() - 1);
            }
            levels_.push_back(std::move(next));
        }
        for (const auto& lvl : levels_) {
            for (auto n : lvl) evaluate(n);
        }
    }

    std::optional<std::size_t> winner() const {
        return levels_.empty() ? std::nullopt : nodes_[levels_.back().front()].winner;
    }

    void remove(std::size_t item) {
        removed_[item] = true;
        for (const auto& lvl : levels_) {
            for (auto n : lvl) {
                if (nodes_[n].winner == item) evaluate(n);
            }
        }
    }

    std::size_t calls = 0;
    std::vector<TraceEntry> trace;

private:
    struct Node {
        std::vector<std::size_t> items;     // leaf: item positions
        std::vector<std::size_t> children;  // internal: node indices
        std::optional<std::size_t> winner;
    };

    const std::vector<std::string>& ids_;
    const std::vector<std::string>& texts_;
    std::string_view query_;
    PickerClient& picker_;
    std::size_t w_;
    std::vector<bool> removed_;
    std::vector<Node> nodes_;
    std::vector<std::vector<std::size_t>> levels_;

    void evaluate(std::size_t n) {
        Node& node = nodes_[n];
        std::vector<std::size_t> candidates;
        if (node.children.empty()) {
            for (auto item : node.items) {
                if (!removed_[item]) candidates.push_back(item);
            }
        } else {
            for (auto child : node.children) {
                const auto& win = nodes_[child].winner;
                if (win && !removed_[*win] &&
                    std::find(candidates.begin(), candidates.end(), *win) == candidates.end()) {
                    candidates.push_back(*win);
                }
            }
        }
        if (candidates.empty()) {
            node.winner.reset();
        } else if (candidates.size() == 1) {
            node.winner = candidates.front();
        } else {
            node.winner = candidates[choose(candidates)];
        }
    }

    std::size_t choose(const std::vector<std::size_t>& candidates) {
        std::vector<std::string> window;
        TraceEntry entry;
        for (auto c : candidates) {
            window.push_back(texts_[c]);
            entry.window.push_back(ids_[c]);
        }
        std::optional<std::size_t> pick;
        for (int attempt = 0; attempt < 2; ++attempt) {
            ++calls;
            pick = picker_.pick(query_, window);
            if (pick && *pick < window.size()) break;
            pick.reset();
        }
        if (!pick) {
            entry.fallback = true;
            pick = 0;
        }
        entry.chosen = ids_[candidates[*pick]];
        trace.push_back(std::move(entry));
        return *pick;
    }
};

}  // namespace

RerankOutcome heap_rerank(const std::vector<std::string>& item_ids, const std::vector<std::string>& texts,
                          std::string_view query, PickerClient& picker, std::size_t u, std::size_t window_size) {
    if (item_ids.size() != texts.size()) throw std::invalid_argument("one text per item required");
    if (u == 0) throw std::invalid_argument("u must be >= 1");
    RerankOutcome outcome;
    if (item_ids.empty()) return outcome;
    const std::size_t keep = std::min(u, item_ids.size());
    try {
        Tournament tournament(item_ids, texts, query, picker, window_size);
        while (outcome.ordered_positions.size() < keep) {
            auto win = tournament.winner();
            if (!win) break;
            outcome.ordered_positions.push_back(*win);
            if (outcome.ordered_positions.size() < keep) tournament.remove(*win);
        }
        outcome.picker_calls = tournament.calls;
        outcome.trace = std::move(tournament.trace);
    } catch (const ClientUnavailable& e) {
        spdlog::warn("picker unavailable, keeping retrieval order: {}", e.what());
        outcome = RerankOutcome{};
        outcome.degraded = true;
        for (std::size_t i = 0; i < keep; ++i) outcome.ordered_positions.push_back(i);
    }
    for (auto p : outcome.ordered_positions) outcome.ordered_items.push_back(item_ids[p]);
    return outcome;
}

RerankOutcome rerank(const RetrievalList& list, const CodeKnowledgeBase& kb, PickerClient& picker,
                     const RerankParams& params) {
    std::vector<std::string> ids;
    std::vector<std::string> texts;
    for (const auto& c : list.candidates) {
        ids.push_back(c.item_id);
        texts.push_back(kb.items.at(c.item).text);
    }
    return heap_rerank(ids, texts, list.query.combined_text, picker, params.keep, params.window_size);
}

}  // namespace coderag
