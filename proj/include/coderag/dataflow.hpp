#pragma once

#include "coderag/code_kb.hpp"
#include "coderag/sparse_index.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace coderag {

enum class OccurrenceKind { Definition, Use, ImportBinding, AttributeUse };

std::string_view to_string(OccurrenceKind kind);

struct DataflowNode {
    std::string name;
    int line = 0;
    OccurrenceKind kind = OccurrenceKind::Use;
    int scope = 0;          // 0 = module, otherwise one id per top-level def/class
    std::size_t statement = 0;

    // Definition / ImportBinding details.
    bool declares_callable = false;              // def or class statement
    std::vector<std::string> type_names;         // annotation or enclosing class for `self`
    std::optional<std::size_t> callee;           // use node of the constructor call on the right-hand side
    std::string callee_attribute;                // `m.Foo()` -> "Foo"
    std::optional<std::size_t> alias_of;         // `b = a` -> use node of a
    std::vector<std::size_t> value_uses;         // uses on the right-hand side
    std::string imported_symbol;                 // `from m import x as y` -> "x"
    bool module_import = false;                  // `import m`

    // AttributeUse: the node this attribute is read from.
    std::optional<std::size_t> base;
};

struct DataflowEdge {
    std::size_t definition = 0;
    std::size_t use = 0;

    friend bool operator==(const DataflowEdge&, const DataflowEdge&) = default;
};

/// Def-use graph of an unfinished file. Uses bind to the nearest preceding
/// definition in their scope, falling back to module scope.
struct DataflowGraph {
    std::vector<DataflowNode> nodes;
    std::vector<DataflowEdge> edges;
    std::vector<std::size_t> last_line_uses;  // Use nodes of the final statement
    int last_statement_line = 0;

    std::optional<std::size_t> definition_of(std::size_t use) const;
    /// First attribute read directly from `node` (`a.b` -> b).
    std::optional<std::size_t> attribute_of(std::size_t node) const;
    std::string to_dot() const;
};

class GraphUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Error-tolerant: an incomplete last line is lexed for names. Throws
/// GraphUnavailable only when the text cannot be lexed at all.
DataflowGraph build_dataflow_graph(std::string_view prefix_text);

inline constexpr int kDefaultWalkDepth = 4;

/// Names reachable from the final statement's uses by following up to
/// `depth` definition edges: imported symbols, defined callables, and
/// "Class.attr" forms for attributes read from constructed objects.
std::vector<std::string> dependency_names(const DataflowGraph& graph, int depth = kDefaultWalkDepth);

/// The single best KB item named by dependency_names, or empty. Preference:
/// ClassFunction, Function, ClassVariable, GlobalVariable; then shorter
/// qualified name; then KB order. The score is +inf (provenance only).
/// Items flagged in `excluded` (indexed by KB ordinal) are never chosen.
std::vector<ScoredItem> dataflow_retrieve(const DataflowGraph& graph, const CodeKnowledgeBase& kb,
                                          int depth = kDefaultWalkDepth, const std::vector<char>* excluded = nullptr);

}  // namespace coderag
