#include "coderag/metrics.hpp"

#include "coderag/parallel.hpp"
#include "coderag/python_lexer.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

namespace coderag {
namespace {

std::vector<char32_t> code_points(std::string_view s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const auto b = static_cast<unsigned char>(s[i]);
        std::size_t len = b < 0x80 ? 1 : (b >> 5) == 0x6 ? 2 : (b >> 4) == 0xe ? 3 : (b >> 3) == 0x1e ? 4 : 0;
        bool valid = len != 0 && i + len <= s.size();
        for (std::size_t k = 1; valid && k < len; ++k) {
            valid = (static_cast<unsigned char>(s[i + k]) & 0xc0) == 0x80;
        }
        if (!valid) {
            out.push_back(0xdc00 + b);  // lone surrogate range never collides with valid input
            ++i;
            continue;
        }
        char32_t cp = len == 1 ? b : b & (0x7f >> len);
        for (std::size_t k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3f);
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::string normalize_for_match(std::string_view s) {
    std::string out = python::normalize_newlines(s);
    if (!out.empty() && out.back() == '\n') out.pop_back();
    return out;
}

}  // namespace

std::size_t levenshtein(std::string_view x, std::string_view y) {
    const auto a = code_points(x);
    const auto b = code_points(y);
    if (a.empty()) return b.size();
    if (b.empty()) return a.size();
    std::vector<std::size_t> prev(b.size() + 1);
    std::vector<std::size_t> cur(b.size() + 1);
    std::iota(prev.begin(), prev.end(), 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double edit_similarity(std::string_view x, std::string_view y) {
    const std::size_t longest = std::max(code_points(x).size(), code_points(y).size());
    if (longest == 0) return 1.0;
    return 1.0 - static_cast<double>(levenshtein(x, y)) / static_cast<double>(longest);
}

int exact_match(std::string_view generated, std::string_view reference) {
    return normalize_for_match(generated) == normalize_for_match(reference) ? 1 : 0;
}

std::vector<std::string> extract_identifiers(std::string_view code) {
    return python::identifier_tokens(code);
}

IdentifierScores identifier_scores(std::string_view generated, std::string_view reference) {
    const auto gen = extract_identifiers(generated);
    const auto ref = extract_identifiers(reference);
    IdentifierScores s;
    s.em = gen == ref ? 1 : 0;
    if (gen.empty() && ref.empty()) {
        s.f1 = s.precision = s.recall = 1.0;
        return s;
    }
    if (gen.empty() || ref.empty()) return s;
    std::map<std::string, std::size_t> ref_counts;
    for (const auto& id : ref) ++ref_counts[id];
    std::size_t common = 0;
    for (const auto& id : gen) {
        auto it = ref_counts.find(id);
        if (it != ref_counts.end() && it->second > 0) {
            --it->second;
            ++common;
        }
    }
    s.precision = static_cast<double>(common) / static_cast<double>(gen.size());
    s.recall = static_cast<double>(common) / static_cast<double>(ref.size());
    s.f1 = common == 0 ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
    return s;
}

namespace {

CompletionTask task_from_json(const nlohmann::json& j, const std::filesystem::path& base) {
    CompletionTask task;
    task.task_id = j.at("task_id").get<std::string>();
    std::filesystem::path repo = j.value("repo", std::string{});
    if (!repo.empty() && repo.is_relative()) repo = base / repo;
    task.repo_root = repo.lexically_normal().string();
    task.file_path = j.value("file", std::string{});
    task.prefix = j.at("prefix").get<std::string>();
    if (j.contains("ground_truth") && !j.at("ground_truth").is_null()) {
        task.ground_truth = j.at("ground_truth").get<std::string>();
    }
    task.cursor_line = j.value("cursor_line", 0);
    if (task.prefix.empty()) throw std::invalid_argument("task " + task.task_id + " has an empty prefix");
    return task;
}

}  // namespace

std::vector<CompletionTask> load_tasks(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot read " + file.string());
    std::vector<CompletionTask> tasks;
    const auto base = file.parent_path();
    for (std::string line; std::getline(in, line);) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        tasks.push_back(task_from_json(nlohmann::json::parse(line), base));
    }
    return tasks;
}

CompletionTask load_task(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot read " + file.string());
    std::string line;
    while (std::getline(in, line) && line.find_first_not_of(" \t\r") == std::string::npos) {
    }
    // Either a single JSON document or the first line of a JSONL file.
    std::string rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
        j = nlohmann::json::parse(line + "\n" + rest);
    }
    return task_from_json(j, file.parent_path());
}

TaskMetrics score_task(const std::string& task_id, std::string_view generated, std::string_view reference) {
    TaskMetrics m;
    m.task_id = task_id;
    m.generated = std::string(generated);
    m.em = exact_match(generated, reference);
    m.es = edit_similarity(normalize_for_match(generated), normalize_for_match(reference));
    const auto ids = identifier_scores(generated, reference);
    m.id_em = ids.em;
    m.id_f1 = ids.f1;
    return m;
}

MetricsReport evaluate(const std::vector<CompletionTask>& dataset,
                       const std::function<std::string(const CompletionTask&)>& run, unsigned jobs) {
    if (dataset.empty()) throw std::invalid_argument("evaluation dataset is empty");
    MetricsReport report;
    report.per_task.resize(dataset.size());
    parallel_for(dataset.size(), jobs, [&](std::size_t i) {
        const auto& task = dataset[i];
        if (!task.ground_truth) throw std::invalid_argument("task " + task.task_id + " has no ground truth");
        try {
            report.per_task[i] = score_task(task.task_id, run(task), *task.ground_truth);
        } catch (const std::exception& e) {
            TaskMetrics failed;
            failed.task_id = task.task_id;
            failed.failed = true;
            failed.error = e.what();
            report.per_task[i] = std::move(failed);
        }
    });
    for (const auto& m : report.per_task) {
        report.em += m.em;
        report.es += m.es;
        report.id_em += m.id_em;
        report.id_f1 += m.id_f1;
    }
    const double n = static_cast<double>(report.per_task.size());
    report.em /= n;
    report.es /= n;
    report.id_em /= n;
    report.id_f1 /= n;
    return report;
}

std::string format_percent(double fraction) {
    return fmt::format("{:.2f}", fraction * 100.0);
}

std::string report_to_json(const MetricsReport& report) {
    auto pct = [](double f) { return std::round(f * 10000.0) / 100.0; };
    nlohmann::ordered_json j;
    j["em"] = pct(report.em);
    j["es"] = pct(report.es);
    j["id_em"] = pct(report.id_em);
    j["id_f1"] = pct(report.id_f1);
    j["tasks"] = report.per_task.size();
    auto& per = j["per_task"] = nlohmann::ordered_json::array();
    for (const auto& m : report.per_task) {
        nlohmann::ordered_json t;
        t["task_id"] = m.task_id;
        t["generated"] = m.generated;
        t["em"] = m.em;
        t["es"] = m.es;
        t["id_em"] = m.id_em;
        t["id_f1"] = m.id_f1;
        if (m.failed) {
            t["failed"] = true;
            t["error"] = m.error;
        }
        per.push_back(std::move(t));
    }
    return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

}  // namespace coderag
