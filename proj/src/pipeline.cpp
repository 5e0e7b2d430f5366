#include "coderag/pipeline.hpp"

#include "coderag/python_lexer.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>

namespace coderag {

std::size_t prompt_budget(const GenerationConfig& config, const GeneratorClient& generator) {
    if (config.max_input_tokens <= 0 || config.max_new_tokens < 0) {
        throw std::invalid_argument("max_input_tokens must be positive and max_new_tokens non-negative");
    }
    double input = config.max_input_tokens;
    if (!generator.exact_token_count()) input = std::floor(input * 0.9);
    const double budget = input - config.max_new_tokens;
    return budget > 0 ? static_cast<std::size_t>(budget) : 0;
}

namespace {

std::string render(const std::vector<PromptSnippet>& snippets, std::size_t keep, std::string_view prefix) {
    std::string out;
    for (std::size_t i = 0; i < keep; ++i) {
        out += "# file: ";
        out += snippets[i].file_path;
        out += '\n';
        out += python::normalize_newlines(snippets[i].text);
        if (out.back() != '\n') out += '\n';
        out += '\n';
    }
    out += prefix;
    return out;
}

}  // namespace

AssembledPrompt assemble_prompt(const std::vector<PromptSnippet>& snippets, std::string_view prefix,
                                const GenerationConfig& config, GeneratorClient& generator) {
    AssembledPrompt result;
    result.budget = prompt_budget(config, generator);

    for (std::size_t keep = snippets.size() + 1; keep-- > 0;) {
        std::string text = render(snippets, keep, prefix);
        const std::size_t tokens = generator.count_tokens(text);
        if (tokens <= result.budget) {
            result.text = std::move(text);
            result.snippets_kept = keep;
            result.token_count = tokens;
            return result;
        }
    }

    // Even the bare prefix is too long: drop whole lines from the top.
    std::vector<std::size_t> line_starts{0};
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (prefix[i] == '\n') line_starts.push_back(i + 1);
    }
    const std::size_t last = line_starts.size() - 1;
    auto tail_tokens = [&](std::size_t drop) { return generator.count_tokens(prefix.substr(line_starts[drop])); };
    if (tail_tokens(last) > result.budget) {
        throw BudgetImpossible("cursor line needs " + std::to_string(tail_tokens(last)) + " tokens; budget is " +
                               std::to_string(result.budget));
    }
    std::size_t lo = 0;
    std::size_t hi = last;
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (tail_tokens(mid) <= result.budget) hi = mid;
        else lo = mid + 1;
    }
    while (tail_tokens(lo) > result.budget) ++lo;
    result.text = std::string(prefix.substr(line_starts[lo]));
    result.prefix_lines_dropped = lo;
    result.token_count = tail_tokens(lo);
    return result;
}

int task_cursor_line(const CompletionTask& task) {
    const std::string normalized = python::normalize_newlines(task.prefix);
    const auto lines = python::split_lines(normalized);
    const int derived = static_cast<int>(lines.size()) + (!normalized.empty() && normalized.back() == '\n' ? 1 : 0);
    if (task.cursor_line > 0 && task.cursor_line != derived) {
        spdlog::debug("task {}: cursor_line {} differs from the prefix's last line {}; using the prefix", task.task_id,
                      task.cursor_line, derived);
    }
    return derived;
}

namespace {

using Clock = std::chrono::steady_clock;

std::vector<ScoredItem> without_items(std::vector<ScoredItem> hits, const std::vector<char>& excluded,
                                      std::size_t limit) {
    std::erase_if(hits, [&](const ScoredItem& h) { return excluded[h.item] != 0; });
    if (hits.size() > limit) hits.resize(limit);
    return hits;
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename Fn>
auto run_stage(const char* stage, std::optional<double>& timing, Fn&& fn) {
    const auto start = Clock::now();
    try {
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            timing = seconds_since(start);
        } else {
            auto value = fn();
            timing = seconds_since(start);
            return value;
        }
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

}  // namespace

CompletionResult complete(const CompletionTask& task, const Indexes& indexes, Clients& clients,
                          const PipelineConfig& config) {
    if (task.prefix.empty()) throw std::invalid_argument("task " + task.task_id + " has an empty prefix");
    CompletionResult result;
    auto& art = result.artifacts;
    auto& t = result.timings;
    const int cursor = task_cursor_line(task);

    std::vector<char> excluded(indexes.kb.items.size(), 0);
    std::size_t excluded_count = 0;
    if (config.exclude_task_file && !task.file_path.empty()) {
        const auto own = std::filesystem::path(task.file_path).lexically_normal().generic_string();
        for (std::size_t i = 0; i < indexes.kb.items.size(); ++i) {
            if (std::filesystem::path(indexes.kb.items[i].file_path).lexically_normal().generic_string() == own) {
                excluded[i] = 1;
                ++excluded_count;
            }
        }
    }

    art.query = run_stage("query construction", t.query_construction, [&] {
        return construct_query(task.prefix, cursor, config.query, clients.probe, config.jobs);
    });

    if (config.paths.dataflow) {
        run_stage("dataflow retrieval", t.dataflow, [&] {
            try {
                art.graph = build_dataflow_graph(task.prefix);
            } catch (const GraphUnavailable& e) {
                spdlog::warn("task {}: no dataflow graph ({}); dataflow path contributes nothing", task.task_id,
                             e.what());
                return;
            }
            art.raw.dataflow = dataflow_retrieve(*art.graph, indexes.kb, kDefaultWalkDepth, &excluded);
        });
    }
    if (config.paths.sparse) {
        art.raw.sparse = run_stage("sparse retrieval", t.sparse,
                                   [&] {
            return without_items(indexes.sparse.retrieve(art.query.combined_text, config.j + excluded_count),
                                 excluded, config.j);
        });
    }
    if (config.paths.dense) {
        art.raw.dense = run_stage("dense retrieval", t.dense, [&] {
            if (!indexes.dense || !clients.embedder) throw std::invalid_argument("dense path enabled without an index");
            return without_items(
                indexes.dense->retrieve(art.query.combined_text, *clients.embedder, config.j + excluded_count),
                excluded, config.j);
        });
    }
    art.retrieval_list = merge_paths(art.query, art.raw, indexes.kb);

    std::vector<PromptSnippet> snippets;
    if (art.retrieval_list.candidates.empty()) {
        spdlog::info("task {}: retrieval list is empty; zero-shot prompt", task.task_id);
    } else {
        art.rerank_outcome = run_stage("rerank", t.rerank, [&] {
            return rerank(art.retrieval_list, indexes.kb, clients.picker, config.rerank);
        });
        if (art.rerank_outcome.degraded) {
            spdlog::warn("task {}: picker unavailable; retrieval order kept", task.task_id);
        }
        for (const auto& id : art.rerank_outcome.ordered_items) {
            const auto ordinal = indexes.kb.find(id);
            if (!ordinal) throw StageError("rerank", "unknown item id " + id);
            const auto& item = indexes.kb.items[*ordinal];
            snippets.push_back({item.file_path, item.text});
        }
    }

    std::optional<double> assembly_time;
    art.prompt = run_stage("prompt assembly", assembly_time, [&] {
        return assemble_prompt(snippets, task.prefix, config.generation, clients.generator);
    });
    if (art.prompt.token_count > static_cast<std::size_t>(config.generation.max_input_tokens)) {
        throw StageError("prompt assembly", "prompt exceeds max_input_tokens");
    }

    result.generated = run_stage("generation", t.generation, [&] {
        return clients.generator.generate(art.prompt.text, config.generation);
    });
    return result;
}

}  // namespace coderag
