#include "coderag/dataflow.hpp"

#include "coderag/python_lexer.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace coderag {
namespace {

using python::Token;
using python::TokenKind;
using Tokens = std::vector<Token>;

constexpr std::array<std::string_view, 12> kAugmentedOps = {
    "+=", "-=", "*=", "/=", "//=", "%=", "**=", ">>=", "<<=", "&=", "|=", "^="};

bool is_op(const Token& t, std::string_view op) { return t.kind == TokenKind::Op && t.text == op; }
bool is_word(const Token& t, std::string_view w) { return t.kind == TokenKind::Name && t.text == w; }
bool is_identifier(const Token& t) { return t.kind == TokenKind::Name && !python::is_keyword(t.text); }
bool opens(const Token& t) { return t.kind == TokenKind::Op && (t.text == "(" || t.text == "[" || t.text == "{"); }
bool closes(const Token& t) { return t.kind == TokenKind::Op && (t.text == ")" || t.text == "]" || t.text == "}"); }

struct Range {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive
    bool empty() const { return begin >= end; }
};

// First depth-0 position in [r.begin, r.end) where pred holds, or r.end.
template <typename Pred>
std::size_t find_top(const Tokens& toks, Range r, Pred pred) {
    int depth = 0;
    for (std::size_t i = r.begin; i < r.end; ++i) {
        if (depth == 0 && pred(toks[i])) return i;
        if (opens(toks[i])) ++depth;
        else if (closes(toks[i])) depth = std::max(0, depth - 1);
    }
    return r.end;
}

std::vector<Range> split_top(const Tokens& toks, Range r, std::string_view op) {
    std::vector<Range> out;
    std::size_t begin = r.begin;
    int depth = 0;
    for (std::size_t i = r.begin; i < r.end; ++i) {
        if (opens(toks[i])) ++depth;
        else if (closes(toks[i])) depth = std::max(0, depth - 1);
        else if (depth == 0 && is_op(toks[i], op)) {
            out.push_back({begin, i});
            begin = i + 1;
        }
    }
    out.push_back({begin, r.end});
    return out;
}

class GraphBuilder {
public:
    DataflowGraph build(std::string_view text) {
        auto lexed = python::tokenize(python::normalize_newlines(text));
        if (lexed.fatal) throw GraphUnavailable(lexed.errors.front().message);

        std::vector<Tokens> lines;
        Tokens current;
        for (auto& tok : lexed.tokens) {
            switch (tok.kind) {
                case TokenKind::Comment:
                case TokenKind::NonLogicalNewline:
                case TokenKind::Indent:
                case TokenKind::Dedent:
                case TokenKind::Error:
                    break;
                case TokenKind::Newline:
                case TokenKind::EndOfFile:
                    if (!current.empty()) lines.push_back(std::move(current));
                    current.clear();
                    break;
                default:
                    current.push_back(std::move(tok));
            }
        }
        for (std::size_t i = 0; i < lines.size(); ++i) {
            statement_ = i;
            process_line(lines[i]);
            commit();
        }
        if (!lines.empty()) {
            graph_.last_statement_line = lines.back().front().line;
            for (std::size_t n = 0; n < graph_.nodes.size(); ++n) {
                const auto& node = graph_.nodes[n];
                if (node.statement == lines.size() - 1 && node.kind == OccurrenceKind::Use) {
                    graph_.last_line_uses.push_back(n);
                }
            }
        }
        return std::move(graph_);
    }

private:
    enum class BlockKind { Def, Class, Other };
    struct Block {
        int indent;
        BlockKind kind;
        std::string name;
        int scope;
    };

    DataflowGraph graph_;
    std::vector<Block> blocks_;
    int next_scope_ = 1;
    std::size_t statement_ = 0;
    std::map<std::pair<int, std::string>, std::size_t> bindings_;  // latest committed definition
    std::vector<std::size_t> pending_;                             // definitions of the current statement

    int current_scope() const {
        for (const auto& b : blocks_) {
            if (b.kind != BlockKind::Other) return b.scope;
        }
        return 0;
    }

    bool inside_definition() const {
        return std::any_of(blocks_.begin(), blocks_.end(), [](const Block& b) { return b.kind != BlockKind::Other; });
    }

    std::size_t add_node(const Token& tok, OccurrenceKind kind, int scope) {
        DataflowNode node;
        node.name = tok.text;
        node.line = tok.line;
        node.kind = kind;
        node.scope = scope;
        node.statement = statement_;
        graph_.nodes.push_back(std::move(node));
        return graph_.nodes.size() - 1;
    }

    std::size_t add_definition(const Token& tok, OccurrenceKind kind, int scope) {
        const std::size_t id = add_node(tok, kind, scope);
        pending_.push_back(id);
        return id;
    }

    void commit() {
        for (auto id : pending_) {
            const auto& node = graph_.nodes[id];
            bindings_[{node.scope, node.name}] = id;
        }
        pending_.clear();
    }

    std::size_t add_use(const Token& tok, int scope) {
        const std::size_t id = add_node(tok, OccurrenceKind::Use, scope);
        auto it = bindings_.find({scope, tok.text});
        if (it == bindings_.end() && scope != 0) it = bindings_.find({0, tok.text});
        if (it != bindings_.end()) graph_.edges.push_back({it->second, id});
        return id;
    }

    // Records uses (and walrus / comprehension definitions) in r; returns the
    // node ids created for plain uses, in order.
    std::vector<std::size_t> uses(const Tokens& toks, Range r, int scope) {
        std::vector<std::size_t> created;
        int depth = 0;
        std::optional<std::size_t> chain;
        bool in_lambda_params = false;
        int lambda_depth = 0;
        bool in_comprehension_target = false;
        for (std::size_t i = r.begin; i < r.end; ++i) {
            const Token& t = toks[i];
            if (opens(t)) ++depth;
            if (closes(t)) depth = std::max(0, depth - 1);
            if (in_lambda_params) {
                if (is_op(t, ":") && depth == lambda_depth) in_lambda_params = false;
                chain.reset();
                continue;
            }
            if (is_word(t, "lambda")) {
                in_lambda_params = true;
                lambda_depth = depth;
                continue;
            }
            if (is_word(t, "for") && depth > 0) {
                in_comprehension_target = true;
                chain.reset();
                continue;
            }
            if (is_word(t, "in") && in_comprehension_target) {
                in_comprehension_target = false;
                continue;
            }
            if (!is_identifier(t)) {
                if (!is_op(t, ".")) chain.reset();
                continue;
            }
            const bool after_dot = i > r.begin && is_op(toks[i - 1], ".");
            if (after_dot) {
                const std::size_t id = add_node(t, OccurrenceKind::AttributeUse, scope);
                graph_.nodes[id].base = chain;
                chain = id;
                continue;
            }
            if (in_comprehension_target) {
                add_definition(t, OccurrenceKind::Definition, scope);
                chain.reset();
                continue;
            }
            const bool next_is = i + 1 < r.end && toks[i + 1].kind == TokenKind::Op;
            if (next_is && depth > 0 && toks[i + 1].text == "=") {
                chain.reset();  // keyword argument name
                continue;
            }
            if (next_is && toks[i + 1].text == ":=") {
                add_definition(t, OccurrenceKind::Definition, scope);
                chain.reset();
                continue;
            }
            const std::size_t id = add_use(t, scope);
            created.push_back(id);
            chain = id;
        }
        return created;
    }

    static std::string annotation_type(const Tokens& toks, Range r) {
        std::string type;
        for (std::size_t i = r.begin; i < r.end; ++i) {
            if (opens(toks[i]) || is_op(toks[i], "|")) break;
            if (is_identifier(toks[i])) type = toks[i].text;  // last segment of a dotted name
        }
        return type;
    }

    void process_line(const Tokens& toks) {
        const int col = toks.front().column;
        while (!blocks_.empty() && blocks_.back().indent >= col) blocks_.pop_back();
        process_statement(toks, {0, toks.size()}, col);
    }

    void process_statement(const Tokens& toks, Range r, int col) {
        if (r.empty()) return;
        std::size_t head = r.begin;
        if (is_word(toks[head], "async") && head + 1 < r.end) ++head;
        const Token& first = toks[head];
        const int scope = current_scope();

        if (is_op(first, "@")) {
            uses(toks, {head + 1, r.end}, scope);
            return;
        }
        if (is_word(first, "def")) return handle_def(toks, {head, r.end}, col);
        if (is_word(first, "class")) return handle_class(toks, {head, r.end}, col);
        if (is_word(first, "import")) return handle_import(toks, {head + 1, r.end}, scope);
        if (is_word(first, "from")) return handle_from(toks, {head + 1, r.end}, scope);
        if (is_word(first, "global") || is_word(first, "nonlocal")) return;

        static constexpr std::array<std::string_view, 12> headers = {
            "if", "elif", "else", "while", "for", "with", "try", "except", "finally", "match", "case", "async"};
        const bool is_header = first.kind == TokenKind::Name &&
                               std::find(headers.begin(), headers.end(), first.text) != headers.end();
        if (is_header) {
            const std::size_t colon = find_top(toks, {head + 1, r.end}, [](const Token& t) { return is_op(t, ":"); });
            if ((first.text == "match" || first.text == "case") && colon + 1 != r.end) {
                handle_simple(toks, r, scope);  // soft keyword used as a name
                return;
            }
            blocks_.push_back({col, BlockKind::Other, first.text, scope});
            const Range header{head + 1, colon};
            if (first.text == "for") {
                const std::size_t in_at = find_top(toks, header, [](const Token& t) { return is_word(t, "in"); });
                uses(toks, {in_at + 1, header.end}, scope);
                bind_targets(toks, {header.begin, in_at}, scope, {});
            } else if (first.text == "with") {
                for (auto item : split_top(toks, header, ",")) {
                    const std::size_t as_at = find_top(toks, item, [](const Token& t) { return is_word(t, "as"); });
                    auto value = analyze_value(toks, {item.begin, as_at}, scope);
                    if (as_at < item.end) bind_targets(toks, {as_at + 1, item.end}, scope, value);
                }
            } else if (first.text == "except") {
                const std::size_t as_at = find_top(toks, header, [](const Token& t) { return is_word(t, "as"); });
                uses(toks, {header.begin, as_at}, scope);
                if (as_at + 1 < header.end && is_identifier(toks[as_at + 1])) {
                    const auto id = add_definition(toks[as_at + 1], OccurrenceKind::Definition, scope);
                    const auto type = annotation_type(toks, {header.begin, as_at});
                    if (!type.empty()) graph_.nodes[id].type_names.push_back(type);
                }
            } else {
                uses(toks, header, scope);
            }
            if (colon + 1 < r.end) {
                commit();
                process_statement(toks, {colon + 1, r.end}, col + 1);
            }
            return;
        }
        for (auto part : split_top(toks, r, ";")) handle_simple(toks, part, scope);
    }

    struct ValueInfo {
        std::vector<std::size_t> uses;
        std::optional<std::size_t> callee;
        std::string callee_attribute;
        std::optional<std::size_t> alias_of;
    };

    ValueInfo analyze_value(const Tokens& toks, Range r, int scope) {
        ValueInfo info;
        std::size_t start = r.begin;
        while (start < r.end && is_word(toks[start], "await")) ++start;
        const std::size_t nodes_before = graph_.nodes.size();
        info.uses = uses(toks, r, scope);
        if (start < r.end && is_identifier(toks[start])) {
            // Dotted chain Name(.Name)* directly followed by '(' is a constructor call.
            std::size_t i = start + 1;
            std::string last_attr;
            while (i + 1 < r.end && is_op(toks[i], ".") && is_identifier(toks[i + 1])) {
                last_attr = toks[i + 1].text;
                i += 2;
            }
            std::optional<std::size_t> base_node;
            for (std::size_t n = nodes_before; n < graph_.nodes.size(); ++n) {
                if (graph_.nodes[n].kind == OccurrenceKind::Use && graph_.nodes[n].line == toks[start].line &&
                    graph_.nodes[n].name == toks[start].text) {
                    base_node = n;
                    break;
                }
            }
            if (i < r.end && is_op(toks[i], "(")) {
                info.callee = base_node;
                info.callee_attribute = last_attr;
            } else if (i == r.end && start + 1 == r.end) {
                info.alias_of = base_node;
            }
        }
        return info;
    }

    void bind_targets(const Tokens& toks, Range target, int scope, const ValueInfo& value) {
        if (target.empty()) return;
        bool plain = true;
        std::size_t names = 0;
        for (std::size_t i = target.begin; i < target.end; ++i) {
            const Token& t = toks[i];
            if (is_identifier(t)) {
                ++names;
            } else if (!(t.kind == TokenKind::Op &&
                         (t.text == "," || t.text == "(" || t.text == ")" || t.text == "[" || t.text == "]" ||
                          t.text == "*"))) {
                plain = false;
            }
        }
        if (!plain) {
            uses(toks, target, scope);  // `self.x = ...`, `d[k] = ...`
            return;
        }
        for (std::size_t i = target.begin; i < target.end; ++i) {
            if (!is_identifier(toks[i])) continue;
            const auto id = add_definition(toks[i], OccurrenceKind::Definition, scope);
            auto& node = graph_.nodes[id];
            node.value_uses = value.uses;
            if (names == 1) {
                node.callee = value.callee;
                node.callee_attribute = value.callee_attribute;
                node.alias_of = value.alias_of;
            }
        }
    }

    void handle_simple(const Tokens& toks, Range r, int scope) {
        if (r.empty()) return;
        if (toks[r.begin].kind == TokenKind::Name && python::is_keyword(toks[r.begin].text) &&
            !is_word(toks[r.begin], "await") && !is_word(toks[r.begin], "lambda")) {
            uses(toks, {r.begin + 1, r.end}, scope);  // return/yield/raise/assert/del/...
            return;
        }
        const std::size_t aug = find_top(toks, r, [](const Token& t) {
            return t.kind == TokenKind::Op &&
                   std::find(kAugmentedOps.begin(), kAugmentedOps.end(), t.text) != kAugmentedOps.end();
        });
        if (aug < r.end) {
            uses(toks, {r.begin, aug}, scope);
            uses(toks, {aug + 1, r.end}, scope);
            if (aug == r.begin + 1 && is_identifier(toks[r.begin])) {
                add_definition(toks[r.begin], OccurrenceKind::Definition, scope);
            }
            return;
        }
        const std::size_t lambda_at = find_top(toks, r, [](const Token& t) { return is_word(t, "lambda"); });
        auto segments = split_top(toks, {r.begin, lambda_at}, "=");
        if (segments.size() == 1) {
            // `x: T` declaration or a bare expression.
            const std::size_t colon = find_top(toks, r, [](const Token& t) { return is_op(t, ":"); });
            if (colon == r.begin + 1 && is_identifier(toks[r.begin]) && colon + 1 < r.end) {
                uses(toks, {colon + 1, r.end}, scope);
                const auto id = add_definition(toks[r.begin], OccurrenceKind::Definition, scope);
                const auto type = annotation_type(toks, {colon + 1, r.end});
                if (!type.empty()) graph_.nodes[id].type_names.push_back(type);
                return;
            }
            uses(toks, r, scope);
            return;
        }
        const Range value_range{segments.back().begin, r.end};
        const ValueInfo value = analyze_value(toks, value_range, scope);
        for (std::size_t s = 0; s + 1 < segments.size(); ++s) {
            Range target = segments[s];
            std::string type;
            const std::size_t colon = find_top(toks, target, [](const Token& t) { return is_op(t, ":"); });
            if (colon < target.end) {
                uses(toks, {colon + 1, target.end}, scope);
                type = annotation_type(toks, {colon + 1, target.end});
                target.end = colon;
            }
            const std::size_t before = graph_.nodes.size();
            bind_targets(toks, target, scope, value);
            if (!type.empty()) {
                for (std::size_t n = before; n < graph_.nodes.size(); ++n) {
                    if (graph_.nodes[n].kind == OccurrenceKind::Definition) graph_.nodes[n].type_names.push_back(type);
                }
            }
        }
    }

    void handle_def(const Tokens& toks, Range r, int col) {
        const int outer_scope = current_scope();
        const bool is_method = !blocks_.empty() && blocks_.back().kind == BlockKind::Class;
        const std::string class_name = is_method ? blocks_.back().name : std::string{};
        const int inner_scope = inside_definition() ? outer_scope : next_scope_++;
        std::size_t i = r.begin + 1;
        if (i >= r.end || !is_identifier(toks[i])) return;
        const Token& name = toks[i];
        const auto def_id = add_definition(name, OccurrenceKind::Definition, outer_scope);
        graph_.nodes[def_id].declares_callable = true;
        ++i;
        if (i < r.end && is_op(toks[i], "[")) {
            while (i < r.end && !is_op(toks[i], "]")) ++i;
            ++i;
        }
        blocks_.push_back({col, BlockKind::Def, name.text, inner_scope});
        if (i >= r.end || !is_op(toks[i], "(")) return;

        // Parameters: name [":" annotation] ["=" default] separated by depth-1 commas.
        std::size_t close = r.end;
        int depth = 0;
        for (std::size_t k = i; k < r.end; ++k) {
            if (opens(toks[k])) ++depth;
            else if (closes(toks[k]) && --depth == 0) {
                close = k;
                break;
            }
        }
        bool first_param = true;
        for (auto param : split_top(toks, {i + 1, close}, ",")) {
            std::size_t p = param.begin;
            while (p < param.end && (is_op(toks[p], "*") || is_op(toks[p], "**") || is_op(toks[p], "/"))) ++p;
            if (p >= param.end || !is_identifier(toks[p])) continue;
            const std::size_t eq = find_top(toks, {p + 1, param.end}, [](const Token& t) { return is_op(t, "="); });
            std::string type;
            if (p + 1 < param.end && is_op(toks[p + 1], ":")) {
                uses(toks, {p + 2, eq}, outer_scope);
                type = annotation_type(toks, {p + 2, eq});
            }
            if (eq < param.end) uses(toks, {eq + 1, param.end}, outer_scope);
            const auto id = add_definition(toks[p], OccurrenceKind::Definition, inner_scope);
            if (!type.empty()) {
                graph_.nodes[id].type_names.push_back(type);
            } else if (first_param && is_method) {
                graph_.nodes[id].type_names.push_back(class_name);
            }
            first_param = false;
        }
        if (close >= r.end) return;
        std::size_t colon = find_top(toks, {close + 1, r.end}, [](const Token& t) { return is_op(t, ":"); });
        if (close + 1 < r.end && is_op(toks[close + 1], "->")) uses(toks, {close + 2, colon}, outer_scope);
        if (colon + 1 < r.end) {
            commit();
            process_statement(toks, {colon + 1, r.end}, col + 1);
        }
    }

    void handle_class(const Tokens& toks, Range r, int col) {
        const int outer_scope = current_scope();
        const int inner_scope = inside_definition() ? outer_scope : next_scope_++;
        const std::size_t i = r.begin + 1;
        if (i >= r.end || !is_identifier(toks[i])) return;
        const auto id = add_definition(toks[i], OccurrenceKind::Definition, outer_scope);
        graph_.nodes[id].declares_callable = true;
        const std::size_t colon = find_top(toks, {i + 1, r.end}, [](const Token& t) { return is_op(t, ":"); });
        uses(toks, {i + 1, colon}, outer_scope);
        blocks_.push_back({col, BlockKind::Class, toks[i].text, inner_scope});
        if (colon + 1 < r.end) {
            commit();
            process_statement(toks, {colon + 1, r.end}, col + 1);
        }
    }

    void handle_import(const Tokens& toks, Range r, int scope) {
        for (auto part : split_top(toks, r, ",")) {
            std::string path;
            std::size_t k = part.begin;
            const Token* binding = nullptr;
            while (k < part.end && !is_word(toks[k], "as")) {
                if (is_identifier(toks[k])) {
                    if (!binding) binding = &toks[k];
                    path += path.empty() ? toks[k].text : "." + toks[k].text;
                }
                ++k;
            }
            if (k + 1 < part.end && is_identifier(toks[k + 1])) binding = &toks[k + 1];
            if (!binding) continue;
            const auto id = add_definition(*binding, OccurrenceKind::ImportBinding, scope);
            graph_.nodes[id].module_import = true;
            graph_.nodes[id].imported_symbol = path;
        }
    }

    void handle_from(const Tokens& toks, Range r, int scope) {
        const std::size_t import_at = find_top(toks, r, [](const Token& t) { return is_word(t, "import"); });
        Range names{import_at + 1, r.end};
        for (auto part : split_top(toks, names, ",")) {
            std::size_t k = part.begin;
            while (k < part.end && (is_op(toks[k], "(") || is_op(toks[k], ")"))) ++k;
            if (k >= part.end || !is_identifier(toks[k])) continue;
            const Token& symbol = toks[k];
            const Token* binding = &symbol;
            if (k + 2 < part.end && is_word(toks[k + 1], "as") && is_identifier(toks[k + 2])) binding = &toks[k + 2];
            const auto id = add_definition(*binding, OccurrenceKind::ImportBinding, scope);
            graph_.nodes[id].imported_symbol = symbol.text;
        }
    }
};

class Walker {
public:
    Walker(const DataflowGraph& graph, int depth) : g_(graph), depth_(depth) {}

    std::vector<std::string> run() {
        for (auto use : g_.last_line_uses) {
            std::string attr;
            if (auto a = g_.attribute_of(use)) attr = g_.nodes[*a].name;
            visit(use, attr, 0);
        }
        return names_;
    }

private:
    const DataflowGraph& g_;
    int depth_;
    std::vector<std::string> names_;
    std::set<std::string> seen_;
    std::set<std::pair<std::size_t, std::string>> visited_;

    void add(const std::string& name) {
        if (!name.empty() && seen_.insert(name).second) names_.push_back(name);
    }

    void add_typed(const std::string& type, const std::string& attr) {
        if (!attr.empty()) add(type + "." + attr);
        add(type);
    }

    void visit(std::size_t use, const std::string& attr, int hops) {
        if (!visited_.insert({use, attr}).second) return;
        const auto& node = g_.nodes[use];
        const auto def = g_.definition_of(use);
        if (!def) {
            add_typed(node.name, attr);
            return;
        }
        if (hops + 1 > depth_) return;
        const auto& d = g_.nodes[*def];
        if (d.kind == OccurrenceKind::ImportBinding) {
            if (d.module_import) {
                add(attr);
            } else {
                add_typed(d.imported_symbol, attr);
            }
            return;
        }
        if (d.declares_callable) {
            add_typed(d.name, attr);
            return;
        }
        if (d.scope == 0) add(d.name);
        for (const auto& type : types_of(*def, hops + 1)) add_typed(type, attr);
        for (auto v : d.value_uses) visit(v, "", hops + 1);
    }

    std::vector<std::string> types_of(std::size_t def, int hops) {
        const auto& d = g_.nodes[def];
        std::vector<std::string> types = d.type_names;
        if (d.callee) {
            if (!d.callee_attribute.empty()) {
                types.push_back(d.callee_attribute);
            } else {
                const auto cd = g_.definition_of(*d.callee);
                if (cd && g_.nodes[*cd].kind == OccurrenceKind::ImportBinding && !g_.nodes[*cd].module_import) {
                    types.push_back(g_.nodes[*cd].imported_symbol);
                } else {
                    types.push_back(g_.nodes[*d.callee].name);
                }
            }
        }
        if (d.alias_of && hops < depth_) {
            if (const auto ad = g_.definition_of(*d.alias_of)) {
                const auto& a = g_.nodes[*ad];
                if (a.kind == OccurrenceKind::ImportBinding) {
                    if (!a.module_import) types.push_back(a.imported_symbol);
                } else if (a.declares_callable) {
                    types.push_back(a.name);
                } else {
                    auto more = types_of(*ad, hops + 1);
                    types.insert(types.end(), more.begin(), more.end());
                }
            }
        }
        return types;
    }
};

int kind_rank(ItemKind kind) {
    switch (kind) {
        case ItemKind::ClassFunction: return 0;
        case ItemKind::Function: return 1;
        case ItemKind::ClassVariable: return 2;
        case ItemKind::GlobalVariable: return 3;
    }
    return 4;
}

}  // namespace

std::string_view to_string(OccurrenceKind kind) {
    switch (kind) {
        case OccurrenceKind::Definition: return "definition";
        case OccurrenceKind::Use: return "use";
        case OccurrenceKind::ImportBinding: return "import-binding";
        case OccurrenceKind::AttributeUse: return "attribute-use";
    }
    return "use";
}

std::optional<std::size_t> DataflowGraph::definition_of(std::size_t use) const {
    for (const auto& e : edges) {
        if (e.use == use) return e.definition;
    }
    return std::nullopt;
}

std::optional<std::size_t> DataflowGraph::attribute_of(std::size_t node) const {
    for (std::size_t i = node + 1; i < nodes.size(); ++i) {
        if (nodes[i].kind == OccurrenceKind::AttributeUse && nodes[i].base == node) return i;
    }
    return std::nullopt;
}

std::string DataflowGraph::to_dot() const {
    std::ostringstream out;
    out << "digraph dataflow {\n";
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        out << "  n" << i << " [label=\"" << n.name << "@" << n.line << "\\n" << to_string(n.kind) << "\"";
        if (std::find(last_line_uses.begin(), last_line_uses.end(), i) != last_line_uses.end()) {
            out << ", style=bold";
        }
        out << "];\n";
    }
    for (const auto& e : edges) out << "  n" << e.definition << " -> n" << e.use << ";\n";
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].base) out << "  n" << *nodes[i].base << " -> n" << i << " [style=dashed];\n";
    }
    out << "}\n";
    return out.str();
}

DataflowGraph build_dataflow_graph(std::string_view prefix_text) {
    return GraphBuilder().build(prefix_text);
}

std::vector<std::string> dependency_names(const DataflowGraph& graph, int depth) {
    return Walker(graph, depth).run();
}

std::vector<ScoredItem> dataflow_retrieve(const DataflowGraph& graph, const CodeKnowledgeBase& kb, int depth,
                                          const std::vector<char>* excluded) {
    const auto names = dependency_names(graph, depth);
    if (names.empty()) return {};
    const std::set<std::string> wanted(names.begin(), names.end());
    std::optional<std::size_t> best;
    auto better = [&](std::size_t a, std::size_t b) {
        const auto& x = kb.items[a];
        const auto& y = kb.items[b];
        if (kind_rank(x.kind) != kind_rank(y.kind)) return kind_rank(x.kind) < kind_rank(y.kind);
        if (x.qualified_name.size() != y.qualified_name.size()) return x.qualified_name.size() < y.qualified_name.size();
        return a < b;
    };
    for (std::size_t i = 0; i < kb.items.size(); ++i) {
        if (!wanted.contains(kb.items[i].qualified_name)) continue;
        if (excluded && i < excluded->size() && (*excluded)[i]) continue;
        if (!best || better(i, *best)) best = i;
    }
    if (!best) return {};
    return {ScoredItem{*best, std::numeric_limits<double>::infinity()}};
}

}  // namespace coderag
