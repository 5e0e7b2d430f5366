#include "coderag/dense_index.hpp"
#include "coderag/stub_clients.hpp"

#include "corpus.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cstring>
#include <fstream>

using namespace coderag;

namespace {

std::vector<std::string> ids_for(std::size_t n) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("item" + std::to_string(i));
    return ids;
}

CodeKnowledgeBase two_item_kb() {
    CodeKnowledgeBase kb;
    CodeKnowledgeItem f;
    f.id = "f";
    f.kind = ItemKind::Function;
    f.text = "def load(path):\n    return open(path).read()";
    CodeKnowledgeItem g;
    g.id = "g";
    g.kind = ItemKind::GlobalVariable;
    g.text = "LIMIT = 10";
    kb.items = {f, g};
    return kb;
}

}  // namespace

TEST_CASE("build produces unit rows and is deterministic") {
    StubEmbedder embedder;
    const auto kb = two_item_kb();
    const auto index = DenseIndex::build(kb, embedder);
    REQUIRE(index.size() == 2);
    CHECK(index.dim() == 64);
    for (std::size_t i = 0; i < 2; ++i) {
        double s = 0.0;
        for (float x : index.row(i)) s += static_cast<double>(x) * x;
        CHECK(std::abs(std::sqrt(s) - 1.0) < 1e-6);
    }
    CHECK(DenseIndex::build(kb, embedder) == index);
}

TEST_CASE("identical query vector ranks first with score 1") {
    std::mt19937_64 rng(4);
    std::vector<std::vector<float>> rows;
    for (int i = 0; i < 5; ++i) rows.push_back(corpus::random_vector(rng, 8));
    const auto index = DenseIndex::from_vectors(ids_for(5), rows);
    const auto hits = index.search(rows[3], 5);
    REQUIRE_FALSE(hits.empty());
    CHECK(hits[0].item == 3);
    CHECK(hits[0].score == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("orthogonal items come back with score 0 and zero rows never do") {
    std::vector<std::vector<float>> rows{{1, 0, 0}, {0, 1, 0}, {0, 0, 0}};
    const auto index = DenseIndex::from_vectors(ids_for(3), rows);
    CHECK(index.is_zero(2));
    const std::vector<float> q{1, 0, 0};
    const auto hits = index.search(q, 3);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].item == 0);
    CHECK(hits[1].item == 1);
    CHECK(hits[1].score == 0.0);
}

TEST_CASE("five hand-set vectors rank like the exhaustive oracle") {
    std::vector<std::vector<float>> rows{{1, 2, 0}, {2, 1, 0}, {0, 0, 3}, {1, 1, 1}, {-1, 0, 0}};
    const auto index = DenseIndex::from_vectors(ids_for(5), rows);
    const std::vector<float> q{1, 1, 0};
    const auto got = index.search(q, 5);
    const auto want = oracle::exhaustive_cosine(rows, q, 5);
    REQUIRE(got.size() == want.size());
    for (std::size_t r = 0; r < got.size(); ++r) {
        CHECK(got[r].item == want[r].item);
        CHECK(got[r].score == doctest::Approx(want[r].score).epsilon(1e-6));
    }
    // Items 0 and 1 tie exactly; the lower ordinal wins.
    CHECK(got[0].item == 0);
    CHECK(got[1].item == 1);
}

TEST_CASE("random corpora agree with the exhaustive oracle") {
    std::mt19937_64 rng(17);
    for (int c = 0; c < 50; ++c) {
        const std::size_t n = 1 + rng() % 50;
        std::vector<std::vector<float>> rows;
        for (std::size_t i = 0; i < n; ++i) rows.push_back(corpus::random_vector(rng, 16));
        if (n > 4) rows[n - 1] = rows[2];
        const auto index = DenseIndex::from_vectors(ids_for(n), rows);
        const auto q = corpus::random_vector(rng, 16);
        const std::size_t j = 1 + rng() % 15;
        const auto got = index.search(q, j);
        const auto want = oracle::exhaustive_cosine(rows, q, j);
        REQUIRE(got.size() == want.size());
        for (std::size_t r = 0; r < got.size(); ++r) CHECK(got[r].item == want[r].item);
    }
}

TEST_CASE("scaling raw embeddings leaves results unchanged") {
    std::mt19937_64 rng(23);
    std::vector<std::vector<float>> rows;
    for (int i = 0; i < 30; ++i) rows.push_back(corpus::random_vector(rng, 12));
    const auto q = corpus::random_vector(rng, 12);
    const auto base = DenseIndex::from_vectors(ids_for(30), rows).search(q, 10);
    for (float c : {0.125f, 2.0f, 64.0f, 3.0f}) {
        auto scaled = rows;
        for (auto& r : scaled) {
            for (auto& x : r) x *= c;
        }
        const auto hits = DenseIndex::from_vectors(ids_for(30), scaled).search(q, 10);
        REQUIRE(hits.size() == base.size());
        for (std::size_t r = 0; r < hits.size(); ++r) CHECK(hits[r].item == base[r].item);
    }
}

TEST_CASE("dense.vec layout and round-trip") {
    std::vector<std::vector<float>> rows{{3, 4}, {0, 0}, {1, 0}};
    const auto index = DenseIndex::from_vectors({"a", "bb", "ccc"}, rows);
    const auto file = std::filesystem::temp_directory_path() / "coderag_dense_rt.vec";
    index.save(file);
    std::ifstream in(file, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    REQUIRE(bytes.size() >= 16 + 3 * 2 * 4);
    CHECK(std::string(bytes.data(), 4) == "CRDV");
    auto u32 = [&](std::size_t off) {
        std::uint32_t v = 0;
        for (int b = 3; b >= 0; --b) v = (v << 8) | static_cast<unsigned char>(bytes[off + b]);
        return v;
    };
    CHECK(u32(4) == 1);
    CHECK(u32(8) == 2);
    CHECK(u32(12) == 3);
    float first = 0;
    std::memcpy(&first, bytes.data() + 16, 4);
    CHECK(first == doctest::Approx(0.6f));
    CHECK(DenseIndex::load(file) == index);
    std::filesystem::remove(file);
}

TEST_CASE("embedder failures surface as EmbedderUnavailable") {
    struct Failing final : EmbedderClient {
        int calls = 0;
        std::vector<float> embed(std::string_view) override {
            if (++calls > 1) throw EmbedderUnavailable("down");
            return {1, 0};
        }
        std::size_t dimension() override { return 2; }
    } failing;
    CHECK_THROWS_AS(DenseIndex::build(two_item_kb(), failing), EmbedderUnavailable);
}
