#include "coderag/metrics.hpp"

#include "oracles.hpp"

#include <doctest.h>
#include <json.hpp>

#include <fstream>
#include <random>
#include <sstream>

using namespace coderag;

namespace {

std::string random_string(std::mt19937_64& rng, std::size_t max_len) {
    static const std::string alphabet = "abcd_ (x)=\n";
    std::uniform_int_distribution<std::size_t> len(0, max_len);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::string s(len(rng), ' ');
    for (auto& c : s) c = alphabet[pick(rng)];
    return s;
}

}  // namespace

TEST_CASE("levenshtein examples") {
    CHECK(levenshtein("", "abc") == 3);
    CHECK(levenshtein("abc", "abc") == 0);
    CHECK(levenshtein("kitten", "sitting") == oracle::levenshtein_table("kitten", "sitting"));
    CHECK(levenshtein("kitten", "sitting") == 3);
}

TEST_CASE("levenshtein counts code points, not bytes") {
    CHECK(levenshtein("\xc3\xa9", "e") == 1);
    CHECK(levenshtein("h\xc3\xa9llo", "hello") == 1);
    CHECK(edit_similarity("\xc3\xa9", "e") == doctest::Approx(0.0));
}

TEST_CASE("levenshtein matches the DP table on random pairs") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 300; ++i) {
        const auto a = random_string(rng, 40);
        const auto b = random_string(rng, 40);
        REQUIRE(levenshtein(a, b) == oracle::levenshtein_table(a, b));
    }
}

TEST_CASE("levenshtein is a metric") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
        const auto a = random_string(rng, 12);
        const auto b = random_string(rng, 12);
        const auto c = random_string(rng, 12);
        CHECK(levenshtein(a, b) == levenshtein(b, a));
        CHECK((levenshtein(a, b) == 0) == (a == b));
        CHECK(levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c));
        const double es = edit_similarity(a, b);
        CHECK(es >= 0.0);
        CHECK(es <= 1.0);
    }
}

TEST_CASE("edit similarity") {
    CHECK(edit_similarity("abc", "abc") == 1.0);
    CHECK(edit_similarity("", "abc") == 0.0);
    CHECK(edit_similarity("", "") == 1.0);
    const double oracle = 1.0 - static_cast<double>(oracle::levenshtein_table("kitten", "sitting")) / 7.0;
    CHECK(edit_similarity("kitten", "sitting") == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(std::abs(edit_similarity("kitten", "sitting") - (1.0 - 3.0 / 7.0)) < 1e-9);
}

TEST_CASE("exact match") {
    CHECK(exact_match("a=1", "a=1") == 1);
    CHECK(exact_match("a=1", "a = 1") == 0);
    CHECK(exact_match("", "") == 1);
    CHECK(exact_match("a=1\r\n", "a=1") == 1);
    CHECK(exact_match("a=1\n\n", "a=1") == 0);
}

TEST_CASE("identifier extraction") {
    CHECK(extract_identifiers("cfg = parse_config(path)") == std::vector<std::string>{"cfg", "parse_config", "path"});
    CHECK(extract_identifiers("x = 1 + 2") == std::vector<std::string>{"x"});
    CHECK(extract_identifiers("# comment only").empty());
    CHECK(extract_identifiers("if not done: return 'name'") == std::vector<std::string>{"done"});
    CHECK(extract_identifiers("f(a, \"unterminated") == std::vector<std::string>{"f", "a"});
}

TEST_CASE("identifier scores") {
    const auto s = identifier_scores("a + b", "b + c");
    CHECK(s.em == 0);
    CHECK(s.precision == doctest::Approx(0.5));
    CHECK(s.recall == doctest::Approx(0.5));
    CHECK(s.f1 == doctest::Approx(0.5));

    const auto same = identifier_scores("x = f(y)", "x = f(y)");
    CHECK(same.em == 1);
    CHECK(same.f1 == 1.0);

    const auto empty = identifier_scores("1 + 2", "# nothing");
    CHECK(empty.em == 1);
    CHECK(empty.f1 == 1.0);

    CHECK(identifier_scores("", "x").f1 == 0.0);
    // multiset: two copies of a in gen, one in gt
    const auto multi = identifier_scores("a + a", "a");
    CHECK(multi.precision == doctest::Approx(0.5));
    CHECK(multi.recall == doctest::Approx(1.0));
}

TEST_CASE("identifier F1 is symmetric and EM implies perfect scores") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        const auto a = random_string(rng, 16);
        const auto b = random_string(rng, 16);
        CHECK(identifier_scores(a, b).f1 == doctest::Approx(identifier_scores(b, a).f1));
        if (exact_match(a, b)) {
            CHECK(edit_similarity(a, b) == 1.0);
            CHECK(identifier_scores(a, b).em == 1);
            CHECK(identifier_scores(a, b).f1 == 1.0);
        }
    }
}

TEST_CASE("evaluate means") {
    std::vector<CompletionTask> tasks(2);
    tasks[0] = {"hit", "", "", "p", std::string("abc"), 0};
    tasks[1] = {"miss", "", "", "p", std::string("abc"), 0};
    const auto report = evaluate(tasks, [](const CompletionTask& t) {
        return t.task_id == "hit" ? std::string("abc") : std::string("xyz");
    });
    CHECK(format_percent(report.em) == "50.00");
    CHECK(format_percent(report.es) == "50.00");

    const auto all = evaluate(tasks, [](const CompletionTask&) { return std::string("abc"); });
    CHECK(format_percent(all.em) == "100.00");
    CHECK(format_percent(all.es) == "100.00");
    CHECK(format_percent(all.id_em) == "100.00");
    CHECK(format_percent(all.id_f1) == "100.00");
}

TEST_CASE("failed tasks score zero and are flagged") {
    std::vector<CompletionTask> tasks(2);
    tasks[0] = {"ok", "", "", "p", std::string("abc"), 0};
    tasks[1] = {"boom", "", "", "p", std::string("abc"), 0};
    const auto report = evaluate(tasks, [](const CompletionTask& t) -> std::string {
        if (t.task_id == "boom") throw std::runtime_error("generator down");
        return "abc";
    });
    CHECK(report.per_task[1].failed);
    CHECK(report.per_task[1].es == 0.0);
    CHECK(report.em == doctest::Approx(0.5));
    CHECK_THROWS_AS(evaluate({}, [](const CompletionTask&) { return std::string(); }), std::invalid_argument);
}

TEST_CASE("ten-task fixture matches the reference scorer") {
    const std::string dir = CODERAG_FIXTURES "/eval";
    const auto tasks = load_tasks(dir + "/tasks.jsonl");
    REQUIRE(tasks.size() == 10);
    std::map<std::string, std::string> predictions;
    std::ifstream in(dir + "/predictions.jsonl");
    for (std::string line; std::getline(in, line);) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        predictions[j["task_id"]] = j["generated"];
    }
    const auto report = evaluate(tasks, [&](const CompletionTask& t) { return predictions.at(t.task_id); });

    std::ifstream expected_in(dir + "/expected_report.json");
    const auto expected = nlohmann::json::parse(expected_in);
    const auto actual = nlohmann::json::parse(report_to_json(report));
    for (const char* key : {"em", "es", "id_em", "id_f1"}) {
        CHECK_MESSAGE(actual[key].get<double>() == doctest::Approx(expected[key].get<double>()).epsilon(1e-12), key);
    }
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const auto& e = expected["per_task"][i];
        const auto& m = report.per_task[i];
        INFO(m.task_id);
        CHECK(m.task_id == e["task_id"].get<std::string>());
        CHECK(m.em == e["em"].get<int>());
        CHECK(m.es == doctest::Approx(e["es"].get<double>()).epsilon(1e-12));
        CHECK(m.id_em == e["id_em"].get<int>());
        CHECK(m.id_f1 == doctest::Approx(e["id_f1"].get<double>()).epsilon(1e-12));
    }
}

TEST_CASE("task loading resolves relative repositories") {
    const auto tasks = load_tasks(CODERAG_FIXTURES "/eval/tasks.jsonl");
    CHECK(tasks[0].repo_root.find("cli_repo") != std::string::npos);
    CHECK(tasks[0].ground_truth.has_value());
    CHECK(tasks[0].cursor_line == 4);
    CHECK(tasks[0].file_path == "run.py");
}
