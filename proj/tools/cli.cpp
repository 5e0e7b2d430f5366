#include "cli.hpp"

#include "coderag/distiller.hpp"
#include "coderag/metrics.hpp"
#include "coderag/parallel.hpp"
#include "coderag/pipeline.hpp"
#include "coderag/python_syntax.hpp"
#include "coderag/run_config.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>
#include <map>

namespace coderag {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Run-config flags shared by the subcommands. Only flags given on the command
/// line override the config file.
struct ConfigFlags {
    RunConfig defaults;
    RunConfig values;
    std::string config_file;
    std::string paths = defaults.paths.to_string();
    std::map<std::string, CLI::Option*> given;

    void add_model_flags(CLI::App* app) {
        add(app, "-f,--chunk-lines", values.f, "Lines per code chunk (f)");
        add(app, "-m,--probe-steps", values.m, "Greedy tokens generated per probe (m)");
        add(app, "-g,--selected-chunks", values.g, "Context chunks kept in the query (g)");
        add(app, "-j,--top-j", values.j, "Items retrieved per sparse/dense path (j)");
        add(app, "-u,--keep", values.u, "Items kept after reranking (u)");
        add(app, "-w,--window", values.w, "Reranking window size (w)");
        add(app, "--max-new-tokens", values.max_new_tokens, "Generated tokens per completion");
        add(app, "--temperature", values.temperature, "Generation temperature");
        add(app, "--max-input-tokens", values.max_input_tokens, "Model input length");
        given["paths"] = app->add_option("--paths", paths, "Retrieval paths, e.g. sparse,dense,dataflow")
                             ->capture_default_str();
        add(app, "--probe-endpoint", values.probe_endpoint, "Probe LM: stub or http:// URL");
        add(app, "--pick-endpoint", values.pick_endpoint, "Reranker LM: stub or http:// URL");
        add(app, "--generate-endpoint", values.generate_endpoint, "Generator LM: stub or http:// URL");
        add_common(app);
    }

    void add_common(CLI::App* app) {
        app->add_option("--config", config_file, "JSON run config; flags override it")->check(CLI::ExistingFile);
        add(app, "--embed-endpoint", values.embed_endpoint, "Embedding model: stub or http:// URL");
        add(app, "--jobs", values.jobs, "Worker threads (0 = logical cores)");
    }

    template <typename T>
    void add(CLI::App* app, const std::string& name, T& target, const std::string& help) {
        given[name] = app->add_option(name, target, help)->capture_default_str();
    }

    RunConfig resolve() {
        RunConfig c = config_file.empty() ? defaults : load_config(config_file);
        auto take = [&](const std::string& name, auto member) {
            auto it = given.find(name);
            if (it != given.end() && it->second->count() > 0) c.*member = values.*member;
        };
        take("-f,--chunk-lines", &RunConfig::f);
        take("-m,--probe-steps", &RunConfig::m);
        take("-g,--selected-chunks", &RunConfig::g);
        take("-j,--top-j", &RunConfig::j);
        take("-u,--keep", &RunConfig::u);
        take("-w,--window", &RunConfig::w);
        take("--max-new-tokens", &RunConfig::max_new_tokens);
        take("--temperature", &RunConfig::temperature);
        take("--max-input-tokens", &RunConfig::max_input_tokens);
        take("--probe-endpoint", &RunConfig::probe_endpoint);
        take("--embed-endpoint", &RunConfig::embed_endpoint);
        take("--pick-endpoint", &RunConfig::pick_endpoint);
        take("--generate-endpoint", &RunConfig::generate_endpoint);
        take("--jobs", &RunConfig::jobs);
        if (auto it = given.find("paths"); it != given.end() && it->second->count() > 0) {
            try {
                c.paths = PathSet::parse(paths);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        }
        c.jobs = resolve_jobs(c.jobs);
        validate(c);
        return c;
    }
};

std::string sanitize(std::string_view name) {
    std::string out;
    for (char ch : name) {
        const bool keep = std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.';
        out.push_back(keep ? ch : '_');
    }
    return out.empty() ? "task" : out;
}

void write_file(const fs::path& file, std::string_view content) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << content;
    if (!out) throw std::runtime_error("cannot write " + file.string());
}

ordered_json score_json(double score) {
    return std::isfinite(score) ? ordered_json(score) : ordered_json("inf");
}

ordered_json hits_json(const std::vector<ScoredItem>& hits, const CodeKnowledgeBase& kb) {
    auto out = ordered_json::array();
    for (std::size_t r = 0; r < hits.size(); ++r) {
        out.push_back({{"rank", r + 1}, {"id", kb.items[hits[r].item].id}, {"score", score_json(hits[r].score)}});
    }
    return out;
}

std::string artifacts_json(const CompletionTask& task, const RunConfig& config, const CompletionResult& result,
                           const CodeKnowledgeBase& kb) {
    const auto& a = result.artifacts;
    ordered_json j;
    j["task_id"] = task.task_id;
    j["file"] = task.file_path;
    j["config"] = ordered_json::parse(config_to_json(config));

    auto& q = j["query"];
    q["selected_indices"] = a.query.selected_indices;
    q["selected_chunks"] = a.query.selected_chunks;
    q["target_chunk"] = a.query.target_chunk;
    q["combined_text"] = a.query.combined_text;
    q["scores"] = ordered_json::array();
    for (const auto& s : a.query.scores) q["scores"].push_back({{"chunk", s.chunk_index}, {"confidence", s.confidence}});

    auto& paths = j["paths"] = ordered_json::object();
    if (config.paths.dataflow) {
        auto& df = paths["dataflow"];
        df["dependencies"] = a.graph ? ordered_json(dependency_names(*a.graph)) : ordered_json::array();
        df["hits"] = hits_json(a.raw.dataflow, kb);
    }
    if (config.paths.sparse) paths["sparse"] = hits_json(a.raw.sparse, kb);
    if (config.paths.dense) paths["dense"] = hits_json(a.raw.dense, kb);

    auto& list = j["retrieval_list"] = ordered_json::array();
    for (const auto& c : a.retrieval_list.candidates) {
        const auto& item = kb.items[c.item];
        list.push_back({{"id", c.item_id},
                        {"path", std::string(to_string(c.path))},
                        {"path_rank", c.path_rank},
                        {"score", score_json(c.path_score)},
                        {"kind", std::string(to_string(item.kind))},
                        {"qualified_name", item.qualified_name},
                        {"file", item.file_path}});
    }

    auto& r = j["rerank_outcome"];
    r["ordered_items"] = a.rerank_outcome.ordered_items;
    r["picker_calls"] = a.rerank_outcome.picker_calls;
    r["degraded"] = a.rerank_outcome.degraded;
    r["trace"] = ordered_json::array();
    for (const auto& t : a.rerank_outcome.trace) {
        r["trace"].push_back({{"window", t.window}, {"chosen", t.chosen}, {"fallback", t.fallback}});
    }

    auto& p = j["prompt"];
    p["text"] = a.prompt.text;
    p["snippets_kept"] = a.prompt.snippets_kept;
    p["prefix_lines_dropped"] = a.prompt.prefix_lines_dropped;
    p["token_count"] = a.prompt.token_count;
    p["budget"] = a.prompt.budget;
    j["generated"] = result.generated;
    return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

/// Indexes for every repository a dataset touches, loaded from kb_dir when
/// given, otherwise built in memory once per repository.
class IndexCache {
public:
    IndexCache(std::string kb_dir, const RunConfig& config) : kb_dir_(std::move(kb_dir)), config_(config) {}

    const RepoIndex& get(const std::string& repo_root) {
        const std::string key = kb_dir_.empty() ? repo_root : kb_dir_;
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        RepoIndex index;
        if (!kb_dir_.empty()) {
            index = load_repo_index(kb_dir_);
        } else {
            if (repo_root.empty() || !fs::is_directory(repo_root)) {
                throw UsageError("task repository '" + repo_root + "' is not a directory; pass --kb-dir");
            }
            auto embedder = config_.paths.dense ? make_embedder(config_) : nullptr;
            index = build_repo_index(repo_root, embedder.get(), config_.jobs);
        }
        if (config_.paths.dense && !index.dense) {
            throw UsageError("dense path enabled but the index has no dense.vec; rerun `coderag index`");
        }
        return cache_.emplace(key, std::move(index)).first->second;
    }

private:
    std::string kb_dir_;
    RunConfig config_;
    std::map<std::string, RepoIndex> cache_;
};

void check_embedder(const RepoIndex& index, ClientSet& clients, const RunConfig& config) {
    if (!config.paths.dense || !index.dense || !clients.embedder) return;
    if (clients.embedder->dimension() != index.dense->dim()) {
        throw UsageError(fmt::format("dense.vec has dimension {} but the embedder produces {}; rebuild the index "
                                     "with the same embedder",
                                     index.dense->dim(), clients.embedder->dimension()));
    }
}

int cmd_index(const std::string& repo, std::string out_dir, ConfigFlags& flags, std::ostream& out,
              std::ostream& err) {
    const RunConfig config = flags.resolve();
    if (!fs::is_directory(repo)) throw UsageError("repository '" + repo + "' is not a directory");
    if (out_dir.empty()) out_dir = (fs::path(repo) / ".coderag").string();
    auto embedder = make_embedder(config);
    RepoIndex index;
    index.kb = build_knowledge_base(repo, {{".py"}, config.jobs});
    index.sparse = SparseIndex::build(index.kb);
    for (const auto& issue : index.kb.report.parse_errors) {
        err << "warning: parse error in " << issue.file_path << ": " << issue.diagnostic << "\n";
    }
    for (const auto& issue : index.kb.report.skipped) {
        err << "warning: skipped " << issue.file_path << ": " << issue.diagnostic << "\n";
    }
    save_repo_index(index, out_dir);
    index.dense = DenseIndex::build(index.kb, *embedder);
    index.dense->save(fs::path(out_dir) / "dense.vec");

    out << fmt::format("indexed {} items from {} files into {}\n", index.kb.items.size(),
                       index.kb.report.files_parsed, out_dir);
    const auto counts = index.kb.counts_by_kind();
    for (auto kind : {ItemKind::Function, ItemKind::GlobalVariable, ItemKind::ClassVariable, ItemKind::ClassFunction}) {
        const auto it = counts.find(kind);
        out << fmt::format("  {}: {}\n", to_string(kind), it == counts.end() ? 0 : it->second);
    }
    return 0;
}

int cmd_complete(const std::string& task_file, const std::string& kb_dir, const std::string& dump_dir,
                 const std::string& dot_file, ConfigFlags& flags, std::ostream& out) {
    const RunConfig config = flags.resolve();
    const CompletionTask task = load_task(task_file);
    IndexCache cache(kb_dir, config);
    const RepoIndex& index = cache.get(task.repo_root);
    ClientSet clients = make_clients(config);
    check_embedder(index, clients, config);
    auto view = clients.view();
    const auto result = complete(task, index.view(), view, pipeline_config(config));
    if (!dump_dir.empty()) {
        write_file(fs::path(dump_dir) / (sanitize(task.task_id) + ".json"),
                   artifacts_json(task, config, result, index.kb));
    }
    if (!dot_file.empty()) {
        if (result.artifacts.graph) write_file(dot_file, result.artifacts.graph->to_dot());
        else spdlog::warn("no dataflow graph to write (dataflow path disabled or prefix not lexable)");
    }
    out << result.generated << "\n";
    return 0;
}

std::map<std::string, std::string> load_predictions(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw UsageError("cannot read " + file.string());
    std::map<std::string, std::string> predictions;
    for (std::string line; std::getline(in, line);) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto j = nlohmann::json::parse(line);
        predictions[j.at("task_id").get<std::string>()] = j.at("generated").get<std::string>();
    }
    return predictions;
}

int cmd_evaluate(const std::string& dataset_file, const std::string& report_file, const std::string& kb_dir,
                 const std::string& predictions_file, const std::string& dump_dir, ConfigFlags& flags,
                 std::ostream& out) {
    const RunConfig config = flags.resolve();
    const auto dataset = load_tasks(dataset_file);
    if (dataset.empty()) throw UsageError("dataset " + dataset_file + " has no tasks");
    for (const auto& task : dataset) {
        if (!task.ground_truth) throw UsageError("task " + task.task_id + " has no ground_truth");
    }

    MetricsReport report;
    if (!predictions_file.empty()) {
        const auto predictions = load_predictions(predictions_file);
        report = evaluate(
            dataset,
            [&](const CompletionTask& task) {
                const auto it = predictions.find(task.task_id);
                if (it == predictions.end()) throw std::runtime_error("no prediction for task " + task.task_id);
                return it->second;
            },
            config.jobs);
    } else {
        IndexCache cache(kb_dir, config);
        for (const auto& task : dataset) cache.get(task.repo_root);
        PipelineConfig pipeline = pipeline_config(config);
        pipeline.jobs = 1;
        report = evaluate(
            dataset,
            [&](const CompletionTask& task) {
                const RepoIndex& index = cache.get(task.repo_root);
                ClientSet clients = make_clients(config);
                check_embedder(index, clients, config);
                auto view = clients.view();
                const auto result = complete(task, index.view(), view, pipeline);
                if (!dump_dir.empty()) {
                    write_file(fs::path(dump_dir) / (sanitize(task.task_id) + ".json"),
                               artifacts_json(task, config, result, index.kb));
                }
                return result.generated;
            },
            config.jobs);
    }

    std::size_t failed = 0;
    for (const auto& m : report.per_task) {
        if (!m.failed) continue;
        ++failed;
        spdlog::warn("task {} failed: {}", m.task_id, m.error);
    }
    if (!report_file.empty()) write_file(report_file, report_to_json(report));
    out << fmt::format("tasks   {}\n", report.per_task.size());
    if (failed > 0) out << fmt::format("failed  {}\n", failed);
    out << fmt::format("EM      {}\n", format_percent(report.em));
    out << fmt::format("ES      {}\n", format_percent(report.es));
    out << fmt::format("ID-EM   {}\n", format_percent(report.id_em));
    out << fmt::format("ID-F1   {}\n", format_percent(report.id_f1));
    return 0;
}

int cmd_distill(const std::string& in_file, const std::string& out_file, std::uint64_t seed, ConfigFlags& flags,
                std::ostream& out) {
    RunConfig config = flags.resolve();
    const auto inputs = load_distillation_inputs(in_file);
    auto picker = make_picker(config);
    DistillParams params;
    params.seed = seed;
    DistillStats stats;
    std::vector<DistillationSample> partial;
    try {
        const auto samples = build_distillation_data(inputs, *picker, params, &stats, &partial);
        write_file(out_file, to_jsonl(samples));
    } catch (const ClientUnavailable&) {
        write_file(out_file, to_jsonl(partial));
        spdlog::error("picker failed after {} samples; partial output written to {}", partial.size(), out_file);
        throw;
    }
    out << fmt::format("queries {}\nsubsets {}\nskipped {}\nemitted {}\n", inputs.size(), stats.subsets,
                       stats.skipped, stats.emitted);
    return 0;
}

int cmd_bench_timings(const std::string& dataset_file, const std::string& kb_dir, ConfigFlags& flags,
                      std::ostream& out) {
    const RunConfig config = flags.resolve();
    const auto dataset = load_tasks(dataset_file);
    if (dataset.empty()) throw UsageError("dataset " + dataset_file + " has no tasks");
    IndexCache cache(kb_dir, config);
    const PipelineConfig pipeline = pipeline_config(config);

    struct Row {
        const char* name;
        std::optional<double> StageTimings::*field;
        double sum = 0.0;
        std::size_t n = 0;
    };
    std::vector<Row> rows{{"query construction", &StageTimings::query_construction},
                          {"sparse retrieval", &StageTimings::sparse},
                          {"dense retrieval", &StageTimings::dense},
                          {"dataflow retrieval", &StageTimings::dataflow},
                          {"rerank", &StageTimings::rerank}};
    for (const auto& task : dataset) {
        const RepoIndex& index = cache.get(task.repo_root);
        ClientSet clients = make_clients(config);
        check_embedder(index, clients, config);
        auto view = clients.view();
        try {
            const auto result = complete(task, index.view(), view, pipeline);
            for (auto& row : rows) {
                if (const auto& t = result.timings.*row.field) {
                    row.sum += *t;
                    ++row.n;
                }
            }
        } catch (const std::exception& e) {
            spdlog::warn("task {} failed: {}", task.task_id, e.what());
        }
    }
    out << fmt::format("{:<20} {:>12} {:>6}\n", "stage", "mean_s", "n");
    for (const auto& row : rows) {
        if (row.n == 0) out << fmt::format("{:<20} {:>12} {:>6}\n", row.name, "skipped", 0);
        else out << fmt::format("{:<20} {:>12.6f} {:>6}\n", row.name, row.sum / row.n, row.n);
    }
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
    auto logger = std::make_shared<spdlog::logger>("coderag", sink);
    logger->set_pattern("%l: %v");
    logger->set_level(spdlog::level::warn);
    const auto previous = spdlog::default_logger();
    spdlog::set_default_logger(logger);
    struct Restore {
        std::shared_ptr<spdlog::logger> logger;
        ~Restore() { spdlog::set_default_logger(logger); }
    } restore{previous};

    CLI::App app{"Repository-level code completion with multi-path retrieval and LLM reranking", "coderag"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

    auto* index = app.add_subcommand("index", "Build the code knowledge base and retrieval indexes");
    ConfigFlags index_flags;
    std::string repo;
    std::string index_out;
    index->add_option("repo", repo, "Repository root")->required();
    index->add_option("-o,--out", index_out, "Output directory (default <repo>/.coderag)");
    index_flags.add_common(index);

    auto* comp = app.add_subcommand("complete", "Complete one task");
    ConfigFlags comp_flags;
    std::string task_file, kb_dir, dump_dir, dot_file;
    comp->add_option("--task", task_file, "Task JSON (task_id, repo, file, prefix)")->required()->check(
        CLI::ExistingFile);
    comp->add_option("--kb-dir", kb_dir, "Index directory written by `coderag index`")->required();
    comp->add_option("--dump-dir", dump_dir, "Write per-stage artifacts as <task_id>.json");
    comp->add_option("--dump-dataflow", dot_file, "Write the prefix's dataflow graph as DOT");
    comp_flags.add_model_flags(comp);

    auto* eval = app.add_subcommand("evaluate", "Score a dataset with EM, ES, ID-EM and ID-F1");
    ConfigFlags eval_flags;
    std::string dataset, report, eval_kb, predictions, eval_dump;
    eval->add_option("--dataset", dataset, "Tasks JSONL with ground_truth")->required()->check(CLI::ExistingFile);
    eval->add_option("--report", report, "Write the report JSON here");
    eval->add_option("--kb-dir", eval_kb, "Index directory (default: index each task repository in memory)");
    eval->add_option("--predictions", predictions, "Score these completions (JSONL task_id, generated) instead")
        ->check(CLI::ExistingFile);
    eval->add_option("--dump-dir", eval_dump, "Write per-task artifacts");
    eval_flags.add_model_flags(eval);

    auto* distill = app.add_subcommand("distill", "Emit reranker distillation samples by vote consensus");
    ConfigFlags distill_flags;
    std::string distill_in, distill_out;
    std::uint64_t seed = 0;
    distill->add_option("--in", distill_in, "Retrieval lists JSONL (query, candidates)")->required()->check(
        CLI::ExistingFile);
    distill->add_option("--out", distill_out, "Samples JSONL")->required();
    distill->add_option("--seed", seed, "Subset sampling seed")->capture_default_str();
    distill_flags.add(distill, "--pick-endpoint", distill_flags.values.pick_endpoint, "Picker LM: stub or URL");
    distill_flags.add_common(distill);

    auto* bench = app.add_subcommand("bench-timings", "Mean wall-clock seconds per pipeline stage");
    ConfigFlags bench_flags;
    std::string bench_dataset, bench_kb;
    bench->add_option("--dataset", bench_dataset, "Tasks JSONL")->required()->check(CLI::ExistingFile);
    bench->add_option("--kb-dir", bench_kb, "Index directory (default: index each task repository in memory)");
    bench_flags.add_model_flags(bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }
    if (verbose) logger->set_level(spdlog::level::info);

    try {
        if (*index) return cmd_index(repo, index_out, index_flags, out, err);
        if (*comp) return cmd_complete(task_file, kb_dir, dump_dir, dot_file, comp_flags, out);
        if (*eval) return cmd_evaluate(dataset, report, eval_kb, predictions, eval_dump, eval_flags, out);
        if (*distill) return cmd_distill(distill_in, distill_out, seed, distill_flags, out);
        if (*bench) return cmd_bench_timings(bench_dataset, bench_kb, bench_flags, out);
    } catch (const EmptyRepository& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const MissingIndex& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        err << "error: config: " << e.what() << "\n";
        return 2;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        err << "error: malformed input: " << e.what() << "\n";
        return 2;
    } catch (const StageError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace coderag
