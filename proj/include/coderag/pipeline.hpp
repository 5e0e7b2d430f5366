#pragma once

#include "coderag/clients.hpp"
#include "coderag/code_kb.hpp"
#include "coderag/dataflow.hpp"
#include "coderag/dense_index.hpp"
#include "coderag/metrics.hpp"
#include "coderag/query_builder.hpp"
#include "coderag/reranker.hpp"
#include "coderag/retriever.hpp"
#include "coderag/sparse_index.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace coderag {

class BudgetImpossible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A failure inside one pipeline stage; what() reads "<stage>: <cause>".
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& cause)
        : std::runtime_error(stage + ": " + cause), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

struct PromptSnippet {
    std::string file_path;
    std::string text;
};

struct AssembledPrompt {
    std::string text;
    std::size_t snippets_kept = 0;
    std::size_t prefix_lines_dropped = 0;
    std::size_t token_count = 0;
    std::size_t budget = 0;
};

/// Tokens available to the prompt: max_input_tokens (reduced by 10% when the
/// generator only approximates its tokenizer) minus the max_new_tokens reserve.
std::size_t prompt_budget(const GenerationConfig& config, const GeneratorClient& generator);

/// "# file: <path>" + code blocks in rank order, blank-line separated, then the
/// prefix. Over budget: drop snippets from the lowest rank, then prefix lines
/// from the top. Throws BudgetImpossible when the cursor line alone does not fit.
AssembledPrompt assemble_prompt(const std::vector<PromptSnippet>& snippets, std::string_view prefix,
                                const GenerationConfig& config, GeneratorClient& generator);

struct Indexes {
    const CodeKnowledgeBase& kb;
    const SparseIndex& sparse;
    const DenseIndex* dense = nullptr;
};

struct Clients {
    ProbeClient& probe;
    EmbedderClient* embedder = nullptr;
    PickerClient& picker;
    GeneratorClient& generator;
};

struct PipelineConfig {
    QueryParams query;
    std::size_t j = 15;
    RerankParams rerank;
    GenerationConfig generation;
    PathSet paths;
    unsigned jobs = 1;
    /// Drop KB items of the file being completed; its prefix is already in the prompt.
    bool exclude_task_file = true;
};

/// Wall-clock seconds per stage; nullopt when the stage did not run.
struct StageTimings {
    std::optional<double> query_construction;
    std::optional<double> sparse;
    std::optional<double> dense;
    std::optional<double> dataflow;
    std::optional<double> rerank;
    std::optional<double> generation;
};

struct CompletionArtifacts {
    RetrievalQuery query;
    std::optional<DataflowGraph> graph;
    PathResults raw;
    RetrievalList retrieval_list;
    RerankOutcome rerank_outcome;
    AssembledPrompt prompt;
};

struct CompletionResult {
    std::string generated;
    CompletionArtifacts artifacts;
    StageTimings timings;
};

/// Cursor line of a task: cursor_line when set, else the prefix's last line.
int task_cursor_line(const CompletionTask& task);

/// Query -> three-path retrieval -> rerank -> prompt -> generation. Stage
/// failures are rethrown as StageError; an empty retrieval list yields the
/// zero-shot prompt (the prefix alone).
CompletionResult complete(const CompletionTask& task, const Indexes& indexes, Clients& clients,
                          const PipelineConfig& config);

}  // namespace coderag
