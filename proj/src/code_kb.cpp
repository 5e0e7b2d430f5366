#include "coderag/code_kb.hpp"

#include "coderag/parallel.hpp"
#include "coderag/python_lexer.hpp"

#include <json.hpp>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace coderag {
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, std::string_view data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

std::string join_lines(const std::vector<std::string>& lines, LineSpan span) {
    std::string text;
    for (int l = span.start; l <= span.end && l <= static_cast<int>(lines.size()); ++l) {
        if (l != span.start) text.push_back('\n');
        text += lines[static_cast<std::size_t>(l - 1)];
    }
    return text;
}

std::vector<std::string> distinct_identifiers(std::string_view text) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (auto& name : python::identifier_tokens(text)) {
        if (seen.insert(name).second) out.push_back(std::move(name));
    }
    return out;
}

bool is_hidden_or_cache(const fs::path& name) {
    const std::string s = name.string();
    return (!s.empty() && s[0] == '.') || s == "__pycache__";
}

std::int64_t mtime_seconds(const fs::path& path) {
    const auto ftime = fs::last_write_time(path);
    const auto sys = std::chrono::file_clock::to_sys(ftime);
    return std::chrono::duration_cast<std::chrono::seconds>(sys.time_since_epoch()).count();
}

struct FileOutcome {
    std::vector<CodeKnowledgeItem> items;
    std::string hash;
    std::optional<FileIssue> parse_error;
    std::optional<FileIssue> skipped;
    std::int64_t mtime = 0;
};

json item_to_json(const CodeKnowledgeItem& item) {
    json j;
    j["id"] = item.id;
    j["kind"] = to_string(item.kind);
    j["qualified_name"] = item.qualified_name;
    j["file_path"] = item.file_path;
    j["line_span"] = {item.line_span.start, item.line_span.end};
    j["text"] = item.text;
    j["identifiers"] = item.identifiers;
    return j;
}

CodeKnowledgeItem item_from_json(const json& j) {
    CodeKnowledgeItem item;
    item.id = j.at("id").get<std::string>();
    auto kind = item_kind_from_string(j.at("kind").get<std::string>());
    if (!kind) throw std::runtime_error("unknown item kind " + j.at("kind").dump());
    item.kind = *kind;
    item.qualified_name = j.at("qualified_name").get<std::string>();
    item.file_path = j.at("file_path").get<std::string>();
    item.line_span = {j.at("line_span").at(0).get<int>(), j.at("line_span").at(1).get<int>()};
    item.text = j.at("text").get<std::string>();
    item.identifiers = j.at("identifiers").get<std::vector<std::string>>();
    return item;
}

json issues_to_json(const std::vector<FileIssue>& issues) {
    json arr = json::array();
    for (const auto& issue : issues) arr.push_back({{"file_path", issue.file_path}, {"diagnostic", issue.diagnostic}});
    return arr;
}

std::vector<FileIssue> issues_from_json(const json& arr) {
    std::vector<FileIssue> out;
    for (const auto& j : arr) out.push_back({j.at("file_path").get<std::string>(), j.at("diagnostic").get<std::string>()});
    return out;
}

}  // namespace

std::string_view to_string(ItemKind kind) {
    switch (kind) {
        case ItemKind::Function: return "Function";
        case ItemKind::GlobalVariable: return "GlobalVariable";
        case ItemKind::ClassVariable: return "ClassVariable";
        case ItemKind::ClassFunction: return "ClassFunction";
    }
    return "Function";
}

std::optional<ItemKind> item_kind_from_string(std::string_view name) {
    for (auto kind : {ItemKind::Function, ItemKind::GlobalVariable, ItemKind::ClassVariable,
                      ItemKind::ClassFunction}) {
        if (to_string(kind) == name) return kind;
    }
    return std::nullopt;
}

std::map<ItemKind, std::size_t> CodeKnowledgeBase::counts_by_kind() const {
    std::map<ItemKind, std::size_t> counts;
    for (const auto& item : items) ++counts[item.kind];
    return counts;
}

std::optional<std::size_t> CodeKnowledgeBase::find(std::string_view id) const {
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].id == id) return i;
    }
    return std::nullopt;
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string make_item_id(std::string_view file_path, LineSpan span, ItemKind kind) {
    std::string key(file_path);
    key += '|' + std::to_string(span.start) + '|' + std::to_string(span.end) + '|';
    key += to_string(kind);
    return sha256_hex(key).substr(0, 16);
}

std::vector<CodeKnowledgeItem> extract_items(const python::SyntaxTree& tree,
                                             std::string_view source_text,
                                             const std::string& file_path) {
    using python::NodeKind;
    const auto lines = python::split_lines(python::normalize_newlines(source_text));
    std::vector<CodeKnowledgeItem> items;

    auto add = [&](ItemKind kind, std::string qualified_name, const python::SyntaxNode& node) {
        CodeKnowledgeItem item;
        item.kind = kind;
        item.qualified_name = std::move(qualified_name);
        item.file_path = file_path;
        item.line_span = {node.start_line, node.end_line};
        item.text = join_lines(lines, item.line_span);
        item.identifiers = distinct_identifiers(item.text);
        item.id = make_item_id(file_path, item.line_span, kind);
        items.push_back(std::move(item));
    };

    for (const auto& node : tree.root.body) {
        switch (node.kind) {
            case NodeKind::FunctionDef:
                add(ItemKind::Function, node.name, node);
                break;
            case NodeKind::Assignment:
                add(ItemKind::GlobalVariable, node.targets.front(), node);
                break;
            case NodeKind::ClassDef:
                for (const auto& member : node.body) {
                    if (member.kind == NodeKind::FunctionDef) {
                        add(ItemKind::ClassFunction, node.name + "." + member.name, member);
                    } else if (member.kind == NodeKind::Assignment) {
                        add(ItemKind::ClassVariable, node.name + "." + member.targets.front(), member);
                    }
                }
                break;
            default:
                break;
        }
    }
    return items;
}

CodeKnowledgeBase build_knowledge_base(const fs::path& repo_root, const BuildOptions& options) {
    if (!fs::is_directory(repo_root)) {
        throw std::runtime_error("repository root is not a directory: " + repo_root.string());
    }
    std::vector<std::pair<std::string, fs::path>> files;
    for (auto it = fs::recursive_directory_iterator(repo_root); it != fs::recursive_directory_iterator(); ++it) {
        const auto& entry = *it;
        if (entry.is_directory()) {
            if (is_hidden_or_cache(entry.path().filename())) it.disable_recursion_pending();
            continue;
        }
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension().string();
        if (std::find(options.extensions.begin(), options.extensions.end(), ext) == options.extensions.end()) {
            continue;
        }
        files.emplace_back(fs::relative(entry.path(), repo_root).generic_string(), entry.path());
    }
    if (files.empty()) throw EmptyRepository(repo_root);
    std::sort(files.begin(), files.end());

    std::vector<FileOutcome> outcomes(files.size());
    parallel_for(files.size(), options.jobs, [&](std::size_t i) {
        const auto& [rel, abs] = files[i];
        FileOutcome& out = outcomes[i];
        out.mtime = mtime_seconds(abs);
        std::string source;
        try {
            source = read_file(abs);
        } catch (const std::exception& e) {
            out.skipped = FileIssue{rel, e.what()};
            return;
        }
        out.hash = sha256_hex(source);
        if (source.size() > kMaxSourceBytes) {
            out.skipped = FileIssue{rel, "file larger than 1 MiB"};
            return;
        }
        try {
            auto tree = python::parse_file(source, rel);
            out.items = extract_items(tree, source, rel);
        } catch (const python::ParseError& e) {
            out.parse_error = FileIssue{rel, std::to_string(e.line()) + ": " + e.diagnostic()};
        }
    });

    CodeKnowledgeBase kb;
    kb.repo_root = fs::weakly_canonical(repo_root).generic_string();
    std::int64_t newest = 0;
    for (std::size_t i = 0; i < files.size(); ++i) {
        auto& out = outcomes[i];
        newest = std::max(newest, out.mtime);
        if (!out.hash.empty()) kb.file_manifest[files[i].first] = out.hash;
        if (out.skipped) {
            spdlog::warn("skipping {}: {}", out.skipped->file_path, out.skipped->diagnostic);
            kb.report.skipped.push_back(*out.skipped);
            continue;
        }
        if (out.parse_error) {
            spdlog::warn("parse error in {}", out.parse_error->file_path + ":" + out.parse_error->diagnostic);
            kb.report.parse_errors.push_back(*out.parse_error);
            continue;
        }
        ++kb.report.files_parsed;
        std::move(out.items.begin(), out.items.end(), std::back_inserter(kb.items));
    }
    std::stable_sort(kb.items.begin(), kb.items.end(), [](const auto& a, const auto& b) {
        return std::tie(a.file_path, a.line_span.start, a.line_span.end) <
               std::tie(b.file_path, b.line_span.start, b.line_span.end);
    });
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
        kb.build_timestamp = std::strtoll(epoch, nullptr, 10);
    } else {
        kb.build_timestamp = newest;
    }
    return kb;
}

void save_knowledge_base(const CodeKnowledgeBase& kb, const fs::path& dir) {
    fs::create_directories(dir);
    std::string lines;
    for (const auto& item : kb.items) {
        lines += item_to_json(item).dump(-1, ' ', false, json::error_handler_t::replace);
        lines.push_back('\n');
    }
    write_file(dir / "kb.jsonl", lines);

    json manifest;
    manifest["format_version"] = 1;
    manifest["tool_version"] = kToolVersion;
    manifest["repo_root"] = kb.repo_root;
    manifest["build_timestamp"] = kb.build_timestamp;
    manifest["files"] = kb.file_manifest;
    manifest["files_parsed"] = kb.report.files_parsed;
    manifest["parse_errors"] = issues_to_json(kb.report.parse_errors);
    manifest["skipped"] = issues_to_json(kb.report.skipped);
    write_file(dir / "manifest.json", manifest.dump(2, ' ', false, json::error_handler_t::replace) + "\n");
}

CodeKnowledgeBase load_knowledge_base(const fs::path& dir) {
    const auto manifest = json::parse(read_file(dir / "manifest.json"));
    if (manifest.at("format_version").get<int>() != 1) {
        throw std::runtime_error("unsupported manifest version in " + dir.string());
    }
    CodeKnowledgeBase kb;
    kb.repo_root = manifest.at("repo_root").get<std::string>();
    kb.build_timestamp = manifest.at("build_timestamp").get<std::int64_t>();
    kb.file_manifest = manifest.at("files").get<std::map<std::string, std::string>>();
    kb.report.files_parsed = manifest.at("files_parsed").get<std::size_t>();
    kb.report.parse_errors = issues_from_json(manifest.at("parse_errors"));
    kb.report.skipped = issues_from_json(manifest.at("skipped"));

    std::istringstream in(read_file(dir / "kb.jsonl"));
    std::set<std::string> ids;
    for (std::string line; std::getline(in, line);) {
        if (line.empty()) continue;
        auto item = item_from_json(json::parse(line));
        if (!ids.insert(item.id).second) throw std::runtime_error("duplicate item id " + item.id);
        if (!kb.file_manifest.contains(item.file_path)) {
            throw std::runtime_error("item " + item.id + " refers to unlisted file " + item.file_path);
        }
        kb.items.push_back(std::move(item));
    }
    return kb;
}

}  // namespace coderag
