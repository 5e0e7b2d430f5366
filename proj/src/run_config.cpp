#include "coderag/run_config.hpp"

#include "coderag/lm_protocol.hpp"
#include "coderag/stub_clients.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <fstream>
#include <set>
#include <sstream>

namespace coderag {

void validate(const RunConfig& c) {
    auto require = [](bool ok, const std::string& message) {
        if (!ok) throw ConfigError(message);
    };
    require(c.f >= 1, "f must be >= 1");
    require(c.m >= 1, "m must be >= 1");
    require(c.g >= 1, "g must be >= 1");
    require(c.j >= 1, "j must be >= 1");
    require(c.u >= 1, "u must be >= 1");
    require(c.u < 2 * c.j + 1, "u must be smaller than the list length bound 2j+1 (u=" + std::to_string(c.u) +
                                   ", j=" + std::to_string(c.j) + ")");
    require(c.w >= 2, "w must be >= 2");
    require(c.max_new_tokens >= 1, "max_new_tokens must be >= 1");
    require(c.temperature >= 0.0, "temperature must be >= 0");
    require(c.max_input_tokens > c.max_new_tokens, "max_input_tokens must exceed max_new_tokens");
    require(!c.paths.empty(), "at least one retrieval path is required");
    require(c.snippet_chars >= 1, "snippet_chars must be >= 1");
    require(c.stub_embedding_dim >= 1, "stub_embedding_dim must be >= 1");
    if (!c.picker_template.empty()) {
        require(c.picker_template.find("{query}") != std::string::npos &&
                    c.picker_template.find("{snippets}") != std::string::npos,
                "picker_template needs {query} and {snippets}");
    }
}

std::string config_to_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["config_version"] = kConfigVersion;
    j["f"] = c.f;
    j["m"] = c.m;
    j["g"] = c.g;
    j["j"] = c.j;
    j["u"] = c.u;
    j["w"] = c.w;
    j["max_new_tokens"] = c.max_new_tokens;
    j["temperature"] = c.temperature;
    j["max_input_tokens"] = c.max_input_tokens;
    j["paths"] = c.paths.to_string();
    j["endpoints"] = {{"probe", c.probe_endpoint},
                      {"embed", c.embed_endpoint},
                      {"pick", c.pick_endpoint},
                      {"generate", c.generate_endpoint}};
    j["picker_template"] = c.picker_template;
    j["snippet_chars"] = c.snippet_chars;
    j["stub_embedding_dim"] = c.stub_embedding_dim;
    j["seed"] = c.seed;
    j["jobs"] = c.jobs;
    return j.dump(2) + "\n";
}

RunConfig config_from_json(std::string_view text) {
    const auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ConfigError("config is not a JSON object");
    static const std::set<std::string> known{"config_version", "f", "m", "g", "j", "u", "w",
                                             "max_new_tokens", "temperature", "max_input_tokens", "paths",
                                             "endpoints", "picker_template", "snippet_chars",
                                             "stub_embedding_dim", "seed", "jobs"};
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
    }
    if (j.value("config_version", kConfigVersion) != kConfigVersion) {
        throw ConfigError("unsupported config_version " + j.at("config_version").dump());
    }
    RunConfig c;
    try {
        c.f = j.value("f", c.f);
        c.m = j.value("m", c.m);
        c.g = j.value("g", c.g);
        c.j = j.value("j", c.j);
        c.u = j.value("u", c.u);
        c.w = j.value("w", c.w);
        c.max_new_tokens = j.value("max_new_tokens", c.max_new_tokens);
        c.temperature = j.value("temperature", c.temperature);
        c.max_input_tokens = j.value("max_input_tokens", c.max_input_tokens);
        if (j.contains("paths")) c.paths = PathSet::parse(j.at("paths").get<std::string>());
        if (j.contains("endpoints")) {
            const auto& e = j.at("endpoints");
            c.probe_endpoint = e.value("probe", c.probe_endpoint);
            c.embed_endpoint = e.value("embed", c.embed_endpoint);
            c.pick_endpoint = e.value("pick", c.pick_endpoint);
            c.generate_endpoint = e.value("generate", c.generate_endpoint);
        }
        c.picker_template = j.value("picker_template", c.picker_template);
        c.snippet_chars = j.value("snippet_chars", c.snippet_chars);
        c.stub_embedding_dim = j.value("stub_embedding_dim", c.stub_embedding_dim);
        c.seed = j.value("seed", c.seed);
        c.jobs = j.value("jobs", c.jobs);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read config " + file.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return config_from_json(buffer.str());
}

PipelineConfig pipeline_config(const RunConfig& c) {
    PipelineConfig p;
    p.query = {c.f, c.m, c.g};
    p.j = c.j;
    p.rerank = {c.u, c.w};
    p.generation = {c.max_new_tokens, c.temperature, c.max_input_tokens};
    p.paths = c.paths;
    p.jobs = c.jobs;
    return p;
}

std::unique_ptr<EmbedderClient> make_embedder(const RunConfig& c) {
    const auto url = resolve_endpoint(c.embed_endpoint);
    if (url == "stub") return std::make_unique<StubEmbedder>(c.stub_embedding_dim);
    return std::make_unique<RemoteEmbedder>(Endpoint::parse(url));
}

std::unique_ptr<PickerClient> make_picker(const RunConfig& c) {
    const auto url = resolve_endpoint(c.pick_endpoint);
    if (url == "stub") return std::make_unique<StubPicker>();
    return std::make_unique<RemotePicker>(
        Endpoint::parse(url), c.picker_template.empty() ? std::string(kDefaultPickerTemplate) : c.picker_template,
        c.snippet_chars);
}

ClientSet make_clients(const RunConfig& c) {
    ClientSet set;
    const auto probe = resolve_endpoint(c.probe_endpoint);
    if (probe == "stub") set.probe = std::make_unique<StubProbe>(c.f);
    else set.probe = std::make_unique<RemoteProbe>(Endpoint::parse(probe));
    set.embedder = make_embedder(c);
    set.picker = make_picker(c);
    const auto generator = resolve_endpoint(c.generate_endpoint);
    if (generator == "stub") set.generator = std::make_unique<EchoGenerator>();
    else set.generator = std::make_unique<RemoteGenerator>(Endpoint::parse(generator));
    return set;
}

RepoIndex build_repo_index(const std::filesystem::path& repo_root, EmbedderClient* embedder, unsigned jobs) {
    RepoIndex index;
    BuildOptions options;
    options.jobs = jobs;
    index.kb = build_knowledge_base(repo_root, options);
    index.sparse = SparseIndex::build(index.kb);
    if (embedder) index.dense = DenseIndex::build(index.kb, *embedder);
    return index;
}

void save_repo_index(const RepoIndex& index, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_knowledge_base(index.kb, dir);
    index.sparse.save(dir / "sparse.idx");
    if (index.dense) index.dense->save(dir / "dense.vec");
}

RepoIndex load_repo_index(const std::filesystem::path& dir) {
    if (!std::filesystem::exists(dir / "kb.jsonl") || !std::filesystem::exists(dir / "manifest.json")) {
        throw MissingIndex(dir);
    }
    RepoIndex index;
    index.kb = load_knowledge_base(dir);
    if (std::filesystem::exists(dir / "sparse.idx")) {
        index.sparse = SparseIndex::load(dir / "sparse.idx");
        if (index.sparse.item_count() != index.kb.items.size()) {
            throw std::runtime_error("sparse.idx does not match kb.jsonl; rebuild the index");
        }
    } else {
        spdlog::warn("{} has no sparse.idx; rebuilding it in memory", dir.string());
        index.sparse = SparseIndex::build(index.kb);
    }
    if (std::filesystem::exists(dir / "dense.vec")) {
        index.dense = DenseIndex::load(dir / "dense.vec");
        std::vector<std::string> ids;
        for (const auto& item : index.kb.items) ids.push_back(item.id);
        if (index.dense->ids() != ids) throw std::runtime_error("dense.vec does not match kb.jsonl; rebuild the index");
    }
    return index;
}

}  // namespace coderag
