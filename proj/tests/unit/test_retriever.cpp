#include "coderag/retriever.hpp"
#include "coderag/stub_clients.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace coderag;

namespace {

CodeKnowledgeBase synthetic_kb(const std::vector<std::string>& texts) {
    CodeKnowledgeBase kb;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        CodeKnowledgeItem item;
        item.id = "item" + std::to_string(i);
        item.qualified_name = "f" + std::to_string(i);
        item.file_path = "m.py";
        item.line_span = {static_cast<int>(i) + 1, static_cast<int>(i) + 1};
        item.text = texts[i];
        kb.items.push_back(item);
    }
    return kb;
}

std::vector<ScoredItem> hits(std::initializer_list<std::size_t> items) {
    std::vector<ScoredItem> out;
    double score = 1.0;
    for (auto i : items) out.push_back({i, score -= 0.1});
    return out;
}

std::vector<std::size_t> order_of(const RetrievalList& list) {
    std::vector<std::size_t> out;
    for (const auto& c : list.candidates) out.push_back(c.item);
    return out;
}

}  // namespace

TEST_CASE("merge order: dataflow, sparse, dense") {
    const auto kb = synthetic_kb(std::vector<std::string>(8, "x"));
    const auto list = merge_paths({}, {hits({4}), hits({0, 1}), hits({2, 3})}, kb);
    CHECK(list.candidates.size() == 5);
    CHECK(order_of(list) == std::vector<std::size_t>{4, 0, 1, 2, 3});
    CHECK(list.candidates[0].path == RetrievalPath::Dataflow);
    CHECK(list.candidates[1].path == RetrievalPath::Sparse);
    CHECK(list.candidates[2].path_rank == 2);
    CHECK(list.candidates[3].path == RetrievalPath::Dense);
    CHECK(list.candidates[3].path_rank == 1);
    CHECK(list.candidates[4].item_id == "item3");
}

TEST_CASE("duplicates keep the earliest provenance") {
    const auto kb = synthetic_kb(std::vector<std::string>(4, "x"));
    const auto list = merge_paths({}, {{}, hits({0, 1}), hits({0, 2})}, kb);
    REQUIRE(list.candidates.size() == 3);
    CHECK(list.candidates[0].item == 0);
    CHECK(list.candidates[0].path == RetrievalPath::Sparse);
    CHECK(list.candidates[2].path == RetrievalPath::Dense);
    CHECK(list.candidates[2].path_rank == 2);

    const auto df = merge_paths({}, {hits({1}), hits({1}), hits({1})}, kb);
    REQUIRE(df.candidates.size() == 1);
    CHECK(df.candidates[0].path == RetrievalPath::Dataflow);
}

TEST_CASE("empty results give an empty list") {
    const auto kb = synthetic_kb({"alpha beta", "gamma delta"});
    const auto sparse = SparseIndex::build(kb);
    RetrievalQuery query;
    query.combined_text = "zzz qqq";
    const auto list = retrieve_all(query, {kb, sparse}, 3, PathSet::parse("sparse,dataflow"));
    CHECK(list.candidates.empty());
}

TEST_CASE("out-of-range items are rejected") {
    const auto kb = synthetic_kb({"a"});
    CHECK_THROWS_AS(merge_paths({}, {{}, hits({3}), {}}, kb), std::out_of_range);
}

TEST_CASE("path set parsing") {
    CHECK(PathSet::parse("sparse") == PathSet{true, false, false});
    CHECK(PathSet::parse("df+s") == PathSet{true, false, true});
    CHECK(PathSet::parse("dense,dataflow") == PathSet{false, true, true});
    CHECK(PathSet::parse("sparse,dense,dataflow") == PathSet{});
    CHECK(PathSet::parse("df+s+d").to_string() == "sparse,dense,dataflow");
    CHECK_THROWS_AS(PathSet::parse("bm25"), std::invalid_argument);
    CHECK_THROWS_AS(PathSet::parse(""), std::invalid_argument);
}

TEST_CASE("dense path needs an index and embedder") {
    const auto kb = synthetic_kb({"a"});
    const auto sparse = SparseIndex::build(kb);
    CHECK_THROWS_AS(retrieve_all({}, {kb, sparse}, 2), std::invalid_argument);
    CHECK_THROWS_AS(retrieve_all({}, {kb, sparse}, 0, PathSet::parse("sparse")), std::invalid_argument);
}

namespace {

class FailingEmbedder final : public EmbedderClient {
public:
    std::vector<float> embed(std::string_view) override { throw ClientUnavailable("down"); }
    std::size_t dimension() override { return 4; }
};

}  // namespace

TEST_CASE("embedder failure propagates as EmbedderUnavailable") {
    const auto kb = synthetic_kb({"a b", "c d"});
    const auto sparse = SparseIndex::build(kb);
    StubEmbedder stub(8);
    const auto dense = DenseIndex::build(kb, stub);
    FailingEmbedder failing;
    RetrievalQuery q;
    q.combined_text = "a";
    CHECK_THROWS_AS(retrieve_all(q, {kb, sparse, &dense, &failing}, 2), EmbedderUnavailable);
}

TEST_CASE("property: list bounds, KB membership, determinism") {
    std::mt19937_64 rng(7);
    const std::vector<std::string> words{"load", "save", "config", "parse", "user", "item", "cache", "path"};
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::string> texts;
        const std::size_t n = 1 + rng() % 30;
        for (std::size_t i = 0; i < n; ++i) {
            std::string t;
            for (int k = 0; k < 4; ++k) t += words[rng() % words.size()] + " ";
            texts.push_back(t);
        }
        const auto kb = synthetic_kb(texts);
        const auto sparse = SparseIndex::build(kb);
        StubEmbedder embedder(16);
        const auto dense = DenseIndex::build(kb, embedder);
        RetrievalQuery q;
        q.combined_text = words[rng() % words.size()] + " " + words[rng() % words.size()];
        const std::size_t j = 1 + rng() % 6;
        PathResults raw;
        const auto list = retrieve_all(q, {kb, sparse, &dense, &embedder}, j, {}, &raw);
        CHECK(list.candidates.size() <= 2 * j + 1);
        std::set<std::size_t> seen;
        for (const auto& c : list.candidates) {
            CHECK(c.item < kb.items.size());
            CHECK(c.item_id == kb.items[c.item].id);
            CHECK(c.path_rank >= 1);
            CHECK(seen.insert(c.item).second);
        }
        std::set<std::size_t> raw_items;
        for (const auto* v : {&raw.dataflow, &raw.sparse, &raw.dense}) {
            for (const auto& h : *v) raw_items.insert(h.item);
        }
        CHECK(seen == raw_items);
        CHECK(retrieve_all(q, {kb, sparse, &dense, &embedder}, j) == list);
    }
}
