#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace coderag {

/// Unit-cost insert/delete/substitute distance over Unicode code points
/// (invalid UTF-8 bytes count as one unit each).
std::size_t levenshtein(std::string_view x, std::string_view y);

/// 1 - Lev(x, y) / max(|x|, |y|) in code points; 1.0 when both are empty.
double edit_similarity(std::string_view x, std::string_view y);

/// 1 iff the strings are identical after normalizing line endings and
/// stripping one trailing newline. Inner whitespace is significant.
int exact_match(std::string_view generated, std::string_view reference);

/// Name tokens that are not keywords; literals and comments are dropped.
std::vector<std::string> extract_identifiers(std::string_view code);

struct IdentifierScores {
    int em = 0;
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

/// EM over the ordered identifier sequences; F1 over multisets. Two empty
/// sequences match vacuously (EM 1, F1 1); one empty side gives F1 0.
IdentifierScores identifier_scores(std::string_view generated, std::string_view reference);

struct CompletionTask {
    std::string task_id;
    std::string repo_root;
    std::string file_path;
    std::string prefix;
    std::optional<std::string> ground_truth;
    int cursor_line = 0;  // 0 = derive from the prefix
};

/// Line-delimited JSON {task_id, repo, file, prefix, ground_truth, cursor_line}.
/// Relative repo paths resolve against the dataset file's directory.
std::vector<CompletionTask> load_tasks(const std::filesystem::path& file);
CompletionTask load_task(const std::filesystem::path& file);

struct TaskMetrics {
    std::string task_id;
    std::string generated;
    int em = 0;
    double es = 0.0;
    int id_em = 0;
    double id_f1 = 0.0;
    bool failed = false;
    std::string error;
};

struct MetricsReport {
    double em = 0.0;  // fractions in [0, 1]
    double es = 0.0;
    double id_em = 0.0;
    double id_f1 = 0.0;
    std::vector<TaskMetrics> per_task;
};

TaskMetrics score_task(const std::string& task_id, std::string_view generated, std::string_view reference);

/// Runs `run` on every task (tasks must carry ground truth). Exceptions are
/// recorded per task; failed tasks score 0 everywhere.
MetricsReport evaluate(const std::vector<CompletionTask>& dataset,
                       const std::function<std::string(const CompletionTask&)>& run, unsigned jobs = 1);

/// Report as JSON; aggregate values are percentages rounded to 2 decimals.
std::string report_to_json(const MetricsReport& report);
std::string format_percent(double fraction);

}  // namespace coderag
