#pragma once

#include "coderag/clients.hpp"
#include "coderag/code_kb.hpp"
#include "coderag/dense_index.hpp"
#include "coderag/pipeline.hpp"
#include "coderag/retriever.hpp"
#include "coderag/sparse_index.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

namespace coderag {

inline constexpr int kConfigVersion = 1;

/// Every setting of a run. Endpoints are "stub", an http:// URL, or empty
/// (then CODERAG_LM_ENDPOINT, then "stub").
struct RunConfig {
    int f = 3;
    int m = 8;
    int g = 1;
    std::size_t j = 15;
    std::size_t u = 10;
    std::size_t w = 3;
    int max_new_tokens = 48;
    double temperature = 0.0;
    int max_input_tokens = 2048;
    PathSet paths;
    std::string probe_endpoint;
    std::string embed_endpoint;
    std::string pick_endpoint;
    std::string generate_endpoint;
    std::string picker_template;  // empty = built-in template
    std::size_t snippet_chars = 1200;
    std::size_t stub_embedding_dim = 64;
    std::uint64_t seed = 0;
    unsigned jobs = 0;  // 0 = logical cores

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Throws ConfigError when a value is out of range (including u >= 2j+1).
void validate(const RunConfig& config);

std::string config_to_json(const RunConfig& config);
/// Keys absent from the JSON keep their defaults; unknown keys are rejected.
RunConfig config_from_json(std::string_view text);
RunConfig load_config(const std::filesystem::path& file);

PipelineConfig pipeline_config(const RunConfig& config);

/// Owns one client per role, built from the configured endpoints.
struct ClientSet {
    std::unique_ptr<ProbeClient> probe;
    std::unique_ptr<EmbedderClient> embedder;
    std::unique_ptr<PickerClient> picker;
    std::unique_ptr<GeneratorClient> generator;

    Clients view() { return {*probe, embedder.get(), *picker, *generator}; }
};

ClientSet make_clients(const RunConfig& config);
std::unique_ptr<EmbedderClient> make_embedder(const RunConfig& config);
std::unique_ptr<PickerClient> make_picker(const RunConfig& config);

/// KB plus retrieval indexes of one repository.
struct RepoIndex {
    CodeKnowledgeBase kb;
    SparseIndex sparse;
    std::optional<DenseIndex> dense;

    Indexes view() const { return {kb, sparse, dense ? &*dense : nullptr}; }
};

class MissingIndex : public std::runtime_error {
public:
    explicit MissingIndex(const std::filesystem::path& dir)
        : std::runtime_error("no index in " + dir.string() + "; run `coderag index <repo> --out " + dir.string() +
                             "` first") {}
};

/// Builds the KB and the sparse index; the dense index too when an embedder is given.
RepoIndex build_repo_index(const std::filesystem::path& repo_root, EmbedderClient* embedder, unsigned jobs);
/// kb.jsonl, manifest.json, sparse.idx and, when present, dense.vec.
void save_repo_index(const RepoIndex& index, const std::filesystem::path& dir);
/// Throws MissingIndex when kb.jsonl or manifest.json is absent. dense.vec is
/// loaded when present and checked against the KB's ids.
RepoIndex load_repo_index(const std::filesystem::path& dir);

}  // namespace coderag
