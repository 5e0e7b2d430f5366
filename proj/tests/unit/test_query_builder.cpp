#include "coderag/query_builder.hpp"
#include "coderag/stub_clients.hpp"

#include "oracles.hpp"
#include "probes.hpp"

#include <doctest.h>

#include <random>

using namespace coderag;

namespace {

std::string numbered_lines(int n) {
    std::string s;
    for (int i = 1; i <= n; ++i) s += "v" + std::to_string(i) + " = " + std::to_string(i) + "\n";
    return s;
}

const std::string kFixture =
    "import json\n"
    "from util import parse_config\n"
    "path = \"a.json\"\n"
    "x = 1\n"
    "y = 2\n"
    "z = x + y\n"
    "cfg = parse_config(path";

}  // namespace

TEST_CASE("chunk boundaries") {
    const auto seven = chunk_file(numbered_lines(7), 3, 7);
    REQUIRE(seven.chunks.size() == 3);
    CHECK(seven.chunks[0].line_span == LineSpan{1, 3});
    CHECK(seven.chunks[1].line_span == LineSpan{4, 6});
    CHECK(seven.chunks[2].line_span == LineSpan{7, 7});
    CHECK(seven.target_index == 2);

    const auto three = chunk_file(numbered_lines(3), 3, 2);
    CHECK(three.chunks.size() == 1);
    CHECK(three.target_index == 0);

    const auto ones = chunk_file(numbered_lines(4), 1, 3);
    CHECK(ones.chunks.size() == 4);
    CHECK(ones.target_index == 2);

    CHECK(chunk_file("a\r\nb\r\n", 1, 2).chunks[1].text == "b");
    CHECK_THROWS_AS(chunk_file("", 3, 1), EmptyFile);
    CHECK_THROWS_AS(chunk_file("a\n", 3, 2), std::invalid_argument);
    CHECK_THROWS_AS(chunk_file("a\n", 0, 1), std::invalid_argument);
}

TEST_CASE("scoring skips the target chunk") {
    const auto chunked = chunk_file(numbered_lines(7), 3, 7);
    StubProbe probe(3);
    const auto scores = score_chunks(chunked.chunks, chunked.target_index, probe, 8);
    REQUIRE(scores.size() == 2);
    CHECK(scores[0].chunk_index == 0);
    CHECK(scores[1].chunk_index == 1);
}

TEST_CASE("stub probe scores on the three-chunk fixture") {
    // Target ids {cfg, parse_config, path}. Chunk 0 ids {json, util,
    // parse_config, path}: 2 unshared. Chunk 1 ids {x, y, z}: 3 unshared.
    const auto chunked = chunk_file(kFixture, 3, 7);
    StubProbe probe(3);
    const auto scores = score_chunks(chunked.chunks, chunked.target_index, probe, 8);
    REQUIRE(scores.size() == 2);
    CHECK(scores[0].confidence == -2.0);
    CHECK(scores[1].confidence == -3.0);

    const auto query = construct_query(kFixture, 7, {3, 8, 1}, probe);
    CHECK(query.selected_indices == std::vector<std::size_t>{0});
    CHECK(query.combined_text == chunked.chunks[0].text + "\n" + chunked.chunks[2].text);
}

TEST_CASE("equal confidences break toward the lower index") {
    const std::string text = "a = 1\nb = 2\na = 1\nb = 2\nc = a";
    StubProbe probe(2);
    const auto query = construct_query(text, 5, {2, 8, 1}, probe);
    REQUIRE(query.scores.size() == 2);
    CHECK(query.scores[0].confidence == query.scores[1].confidence);
    CHECK(query.selected_indices == std::vector<std::size_t>{0});
}

TEST_CASE("single chunk and large g") {
    StubProbe probe(3);
    const auto single = construct_query("x = 1\ny = x", 2, {3, 8, 1}, probe);
    CHECK(single.selected_chunks.empty());
    CHECK(single.combined_text == "x = 1\ny = x");

    const auto all = construct_query(numbered_lines(10), 10, {3, 8, 5}, probe);
    CHECK(all.selected_indices == std::vector<std::size_t>{0, 1, 2});
    CHECK(all.combined_text == numbered_lines(9) + "v10 = 10");
}

TEST_CASE("lines after the cursor are ignored") {
    StubProbe probe(3);
    const auto a = construct_query(kFixture, 4, {3, 8, 1}, probe);
    const auto b = construct_query(kFixture.substr(0, kFixture.find("y = 2")), 4, {3, 8, 1}, probe);
    CHECK(a.target_chunk == "x = 1");
    CHECK(a == b);
}

TEST_CASE("trailing newline puts the cursor on an empty line") {
    StubProbe probe(1);
    const auto q = construct_query("a = 1\nb = a\n", 3, {1, 8, 1}, probe);
    CHECK(q.target_chunk.empty());
}

TEST_CASE("probe failures carry chunk context") {
    struct Down final : ProbeClient {
        double greedy_score(std::string_view, int) override { throw ProbeUnavailable("connection refused"); }
    } down;
    try {
        construct_query(numbered_lines(7), 7, {3, 8, 1}, down);
        FAIL("expected ProbeUnavailable");
    } catch (const ProbeUnavailable& e) {
        CHECK(std::string(e.what()).find("chunk 0") != std::string::npos);
    }
}

TEST_CASE("property: top-g selection matches a sort oracle") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const int lines = 1 + static_cast<int>(rng() % 30);
        const int f = 1 + static_cast<int>(rng() % 5);
        const int g = static_cast<int>(rng() % 5);
        const int cursor = 1 + static_cast<int>(rng() % lines);
        const std::string text = numbered_lines(lines);
        const auto chunked = chunk_file(text, f, cursor);

        std::vector<double> pool(chunked.chunks.size());
        std::iota(pool.begin(), pool.end(), 0.0);
        std::shuffle(pool.begin(), pool.end(), rng);
        std::map<std::string, double> table;
        std::vector<std::pair<std::size_t, double>> expected_scores;
        for (const auto& c : chunked.chunks) {
            if (c.index == chunked.target_index) continue;
            table[c.text] = -pool[c.index];
            expected_scores.emplace_back(c.index, -pool[c.index]);
        }
        // The cursor chunk is truncated at the cursor; later chunks are dropped.
        std::erase_if(expected_scores, [&](const auto& s) { return s.first > chunked.target_index; });
        std::string target_text;
        {
            const auto& t = chunked.chunks[chunked.target_index];
            for (int l = t.line_span.start; l <= cursor; ++l) {
                if (!target_text.empty()) target_text += "\n";
                target_text += "v" + std::to_string(l) + " = " + std::to_string(l);
            }
        }
        TableProbe probe(table, target_text);
        const auto query = construct_query(text, cursor, {f, 8, g}, probe, 2);
        const auto want = oracle::top_g_indices(expected_scores, static_cast<std::size_t>(g));
        INFO("lines=" << lines << " f=" << f << " g=" << g << " cursor=" << cursor);
        CHECK(query.selected_indices == want);
        CHECK(std::find(query.selected_indices.begin(), query.selected_indices.end(), chunked.target_index) ==
              query.selected_indices.end());
        CHECK(query.target_chunk == target_text);
    }
}
