#pragma once

#include "coderag/python_syntax.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace coderag {

enum class ItemKind { Function, GlobalVariable, ClassVariable, ClassFunction };

std::string_view to_string(ItemKind kind);
std::optional<ItemKind> item_kind_from_string(std::string_view name);

struct LineSpan {
    int start = 0;  // 1-based, inclusive
    int end = 0;

    friend bool operator==(const LineSpan&, const LineSpan&) = default;
};

struct CodeKnowledgeItem {
    std::string id;
    ItemKind kind = ItemKind::Function;
    std::string qualified_name;
    std::string file_path;  // repo-relative, '/'-separated
    LineSpan line_span;
    std::string text;
    std::vector<std::string> identifiers;

    friend bool operator==(const CodeKnowledgeItem&, const CodeKnowledgeItem&) = default;
};

struct FileIssue {
    std::string file_path;
    std::string diagnostic;

    friend bool operator==(const FileIssue&, const FileIssue&) = default;
};

struct IndexReport {
    std::vector<FileIssue> parse_errors;
    std::vector<FileIssue> skipped;  // oversized or unreadable files
    std::size_t files_parsed = 0;

    friend bool operator==(const IndexReport&, const IndexReport&) = default;
};

struct CodeKnowledgeBase {
    std::vector<CodeKnowledgeItem> items;
    std::string repo_root;
    std::map<std::string, std::string> file_manifest;  // file_path -> sha256 hex
    IndexReport report;
    std::int64_t build_timestamp = 0;  // seconds since epoch

    std::map<ItemKind, std::size_t> counts_by_kind() const;
    /// KB ordinal of the item with this id.
    std::optional<std::size_t> find(std::string_view id) const;

    friend bool operator==(const CodeKnowledgeBase&, const CodeKnowledgeBase&) = default;
};

class EmptyRepository : public std::runtime_error {
public:
    explicit EmptyRepository(const std::filesystem::path& root)
        : std::runtime_error("no source files under " + root.string()) {}
};

inline constexpr std::string_view kToolVersion = "coderag 1.0.0";
inline constexpr std::uintmax_t kMaxSourceBytes = 1u << 20;

/// Deterministic id for (file_path, line_span, kind).
std::string make_item_id(std::string_view file_path, LineSpan span, ItemKind kind);

std::string sha256_hex(std::string_view data);

/// Module-level functions and assignments, plus class-body methods and
/// assignments of top-level classes. Nested definitions stay inside their
/// enclosing item.
std::vector<CodeKnowledgeItem> extract_items(const python::SyntaxTree& tree,
                                             std::string_view source_text,
                                             const std::string& file_path);

struct BuildOptions {
    std::vector<std::string> extensions{".py"};
    unsigned jobs = 0;  // 0 = hardware concurrency
};

/// Parses every matching file under repo_root. Unparsable and oversized files
/// are recorded in the report and skipped. Items are ordered by file path
/// then line span.
CodeKnowledgeBase build_knowledge_base(const std::filesystem::path& repo_root,
                                       const BuildOptions& options = {});

/// Writes kb.jsonl and manifest.json into dir.
void save_knowledge_base(const CodeKnowledgeBase& kb, const std::filesystem::path& dir);
CodeKnowledgeBase load_knowledge_base(const std::filesystem::path& dir);

}  // namespace coderag
