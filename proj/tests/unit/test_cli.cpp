#include "cli.hpp"
#include "coderag/run_config.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace coderag;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures(CODERAG_FIXTURES);

struct Run {
    int status = 0;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "coderag");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    Run r;
    r.status = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

class TempDir {
public:
    explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / ("coderag_cli_" + name)) {
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }
    std::string str(const std::string& child = "") const { return (child.empty() ? path_ : path_ / child).string(); }

private:
    fs::path path_;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string parse_conf_index(const TempDir& dir) {
    const auto kb = dir.str("kb");
    REQUIRE(run({"index", (kFixtures / "parse_conf_repo").string(), "--out", kb}).status == 0);
    return kb;
}

}  // namespace

TEST_CASE("index prints counts per kind") {
    TempDir dir("index");
    const auto r = run({"index", (kFixtures / "cli_repo").string(), "-o", dir.str("kb")});
    CHECK(r.status == 0);
    CHECK(r.out.find("indexed 5 items from 1 files") != std::string::npos);
    CHECK(r.out.find("Function: 2") != std::string::npos);
    CHECK(r.out.find("GlobalVariable: 1") != std::string::npos);
    CHECK(r.out.find("ClassVariable: 1") != std::string::npos);
    CHECK(r.out.find("ClassFunction: 1") != std::string::npos);
    for (const char* f : {"kb.jsonl", "manifest.json", "sparse.idx", "dense.vec"}) {
        CHECK(fs::exists(dir.path() / "kb" / f));
    }
}

TEST_CASE("usage and input errors exit 2") {
    TempDir dir("errors");
    const auto empty = run({"index", (kFixtures / "empty_repo").string(), "-o", dir.str("kb")});
    CHECK(empty.status == 2);
    CHECK(empty.err.find("no source files") != std::string::npos);

    const auto missing = run({"complete", "--task", (kFixtures / "parse_conf_task.json").string(), "--kb-dir",
                              dir.str("nowhere")});
    CHECK(missing.status == 2);
    CHECK(missing.err.find("coderag index") != std::string::npos);

    CHECK(run({"frobnicate"}).status == 2);
    CHECK(run({"index"}).status == 2);
    CHECK(run({"index", (kFixtures / "cli_repo").string(), "-o", dir.str("kb"), "-w", "1"}).status == 2);
    CHECK(run({"index", (kFixtures / "cli_repo").string(), "-o", dir.str("kb"), "--paths", "bm25"}).status == 2);
}

TEST_CASE("complete is deterministic and dumps artifacts") {
    TempDir dir("complete");
    const auto kb = parse_conf_index(dir);
    const auto task = (kFixtures / "parse_conf_task.json").string();
    const auto first = run({"complete", "--task", task, "--kb-dir", kb, "--dump-dir", dir.str("d1"),
                            "--dump-dataflow", dir.str("graph.dot")});
    const auto second = run({"complete", "--task", task, "--kb-dir", kb, "--dump-dir", dir.str("d2")});
    REQUIRE(first.status == 0);
    CHECK(first.out == second.out);
    const auto dump = slurp(dir.path() / "d1" / "parse_conf.json");
    CHECK(dump == slurp(dir.path() / "d2" / "parse_conf.json"));

    const auto j = nlohmann::json::parse(dump);
    for (const char* key : {"config", "query", "paths", "retrieval_list", "rerank_outcome", "prompt", "generated"}) {
        CHECK(j.contains(key));
    }
    CHECK_FALSE(j.contains("timings"));
    CHECK(j["paths"].contains("sparse"));
    CHECK(j["paths"].contains("dense"));
    CHECK(j["paths"].contains("dataflow"));
    CHECK(j["retrieval_list"][0]["qualified_name"] == "parse_config");
    CHECK(slurp(dir.path() / "graph.dot").rfind("digraph dataflow", 0) == 0);
}

TEST_CASE("--paths limits provenance in the dump") {
    TempDir dir("paths");
    const auto kb = parse_conf_index(dir);
    const auto r = run({"complete", "--task", (kFixtures / "parse_conf_task.json").string(), "--kb-dir", kb,
                        "--paths", "sparse", "--dump-dir", dir.str("d")});
    REQUIRE(r.status == 0);
    const auto j = nlohmann::json::parse(slurp(dir.path() / "d" / "parse_conf.json"));
    CHECK(j["paths"].size() == 1);
    CHECK(j["paths"].contains("sparse"));
    for (const auto& c : j["retrieval_list"]) CHECK(c["path"] == "sparse");
    CHECK(j["config"]["paths"] == "sparse");
}

TEST_CASE("evaluate scores predictions like the reference scorer") {
    TempDir dir("evaluate");
    const auto r = run({"evaluate", "--dataset", (kFixtures / "eval" / "tasks.jsonl").string(), "--predictions",
                        (kFixtures / "eval" / "predictions.jsonl").string(), "--report", dir.str("report.json")});
    REQUIRE(r.status == 0);
    CHECK(r.out.find("tasks   10") != std::string::npos);
    const auto report = nlohmann::json::parse(slurp(dir.path() / "report.json"));
    const auto expected = nlohmann::json::parse(slurp(kFixtures / "eval" / "expected_report.json"));
    for (const char* key : {"em", "es", "id_em", "id_f1"}) {
        CAPTURE(key);
        CHECK(report[key].get<double>() == doctest::Approx(expected[key].get<double>()).epsilon(1e-9));
    }
    REQUIRE(report["per_task"].size() == expected["per_task"].size());
    for (std::size_t i = 0; i < expected["per_task"].size(); ++i) {
        const auto& got = report["per_task"][i];
        const auto& want = expected["per_task"][i];
        CAPTURE(want["task_id"].get<std::string>());
        CHECK(got["task_id"] == want["task_id"]);
        CHECK(got["em"] == want["em"]);
        CHECK(got["id_em"] == want["id_em"]);
        CHECK(got["es"].get<double>() == doctest::Approx(want["es"].get<double>()).epsilon(1e-12));
        CHECK(got["id_f1"].get<double>() == doctest::Approx(want["id_f1"].get<double>()).epsilon(1e-12));
    }
}

TEST_CASE("evaluate runs the pipeline end to end") {
    const auto r = run({"evaluate", "--dataset", (kFixtures / "eval" / "tasks.jsonl").string()});
    CHECK(r.status == 0);
    CHECK(r.out.find("tasks   10") != std::string::npos);
    CHECK(r.out.find("failed") == std::string::npos);
}

TEST_CASE("distill writes consensus samples") {
    TempDir dir("distill");
    {
        std::ofstream in(dir.path() / "lists.jsonl");
        in << R"({"query": "parse config", "candidates": [)"
           << R"({"id": "a", "text": "def parse_config(path): pass"}, {"id": "b", "text": "def write_file(): pass"},)"
           << R"({"id": "c", "text": "LIMIT = 3"}]})" << "\n";
    }
    const auto r = run({"distill", "--in", dir.str("lists.jsonl"), "--out", dir.str("out.jsonl"), "--seed", "3"});
    REQUIRE(r.status == 0);
    CHECK(r.out.find("queries 1") != std::string::npos);
    CHECK(r.out.find("skipped 4") != std::string::npos);
    const auto text = slurp(dir.path() / "out.jsonl");
    CHECK(std::count(text.begin(), text.end(), '\n') == 6);
    const auto again = run({"distill", "--in", dir.str("lists.jsonl"), "--out", dir.str("again.jsonl"), "--seed", "3"});
    CHECK(again.status == 0);
    CHECK(slurp(dir.path() / "again.jsonl") == text);
}

TEST_CASE("bench-timings prints one row per stage") {
    TempDir dir("bench");
    {
        auto task = nlohmann::json::parse(slurp(kFixtures / "parse_conf_task.json"));
        task["repo"] = (kFixtures / "parse_conf_repo").string();
        std::ofstream f(dir.path() / "tasks.jsonl");
        f << task.dump() << "\n";
    }
    const auto all = run({"bench-timings", "--dataset", dir.str("tasks.jsonl")});
    REQUIRE(all.status == 0);
    std::istringstream lines(all.out);
    std::vector<std::string> rows;
    for (std::string line; std::getline(lines, line);) rows.push_back(line);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].rfind("stage", 0) == 0);
    CHECK(all.out.find("skipped") == std::string::npos);

    const auto sparse = run({"bench-timings", "--dataset", dir.str("tasks.jsonl"), "--paths", "sparse"});
    REQUIRE(sparse.status == 0);
    CHECK(std::count(sparse.out.begin(), sparse.out.end(), '\n') == 6);
    int skipped_rows = 0;
    for (std::size_t p = 0; (p = sparse.out.find("skipped", p)) != std::string::npos; ++p) ++skipped_rows;
    CHECK(skipped_rows == 2);
}

TEST_CASE("run config round-trips and flags override the file") {
    RunConfig c;
    c.j = 7;
    c.u = 5;
    c.paths = PathSet::parse("df+s");
    const auto text = config_to_json(c);
    const auto back = config_from_json(text);
    CHECK(config_to_json(back) == text);
    CHECK(back.j == 7);
    CHECK(back.paths == PathSet{true, false, true});
    CHECK_THROWS_AS(config_from_json(R"({"config_version": 1, "bogus": 1})"), ConfigError);
    RunConfig bad;
    bad.u = 40;
    bad.j = 15;
    CHECK_THROWS_AS(validate(bad), ConfigError);

    TempDir dir("config");
    {
        std::ofstream f(dir.path() / "run.json");
        f << text;
    }
    const auto kb = parse_conf_index(dir);
    const auto r = run({"complete", "--task", (kFixtures / "parse_conf_task.json").string(), "--kb-dir", kb,
                        "--config", dir.str("run.json"), "-u", "2", "--dump-dir", dir.str("d")});
    REQUIRE(r.status == 0);
    const auto j = nlohmann::json::parse(slurp(dir.path() / "d" / "parse_conf.json"));
    CHECK(j["config"]["j"] == 7);
    CHECK(j["config"]["u"] == 2);
    CHECK(j["config"]["paths"] == "sparse,dataflow");
    CHECK(j["rerank_outcome"]["ordered_items"].size() <= 2);
}

TEST_CASE("bench-timings over the ten fixture tasks") {
    const auto r = run({"bench-timings", "--dataset", (kFixtures / "eval" / "tasks.jsonl").string()});
    REQUIRE(r.status == 0);
    std::istringstream lines(r.out);
    std::string line;
    std::getline(lines, line);
    int rows = 0;
    while (std::getline(lines, line)) {
        ++rows;
        std::istringstream fields(line.substr(20));
        double mean = -1;
        int n = 0;
        fields >> mean >> n;
        CAPTURE(line);
        CHECK(std::isfinite(mean));
        CHECK(mean >= 0.0);
        CHECK(n == 10);
    }
    CHECK(rows == 5);
}
