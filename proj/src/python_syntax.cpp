#include "coderag/python_syntax.hpp"

#include "coderag/python_lexer.hpp"

#include <algorithm>
#include <array>
#include <span>

namespace coderag::python {
namespace {

constexpr std::array<std::string_view, 11> kCompoundKeywords = {
    "if", "elif", "else", "for", "while", "try", "except", "finally", "with", "async", "match"};

bool is_op(const Token& tok, std::string_view op) {
    return tok.kind == TokenKind::Op && tok.text == op;
}

bool is_name(const Token& tok, std::string_view word) {
    return tok.kind == TokenKind::Name && tok.text == word;
}

bool opens(const Token& tok) {
    return tok.kind == TokenKind::Op && (tok.text == "(" || tok.text == "[" || tok.text == "{");
}

bool closes(const Token& tok) {
    return tok.kind == TokenKind::Op && (tok.text == ")" || tok.text == "]" || tok.text == "}");
}

// Index of the first bracket-depth-0 token satisfying `pred` at or after `from`.
template <typename Pred>
std::size_t find_top_level(std::span<const Token> toks, std::size_t from, Pred pred) {
    int depth = 0;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (i >= from && depth == 0 && pred(toks[i])) return i;
        if (opens(toks[i])) ++depth;
        else if (closes(toks[i])) depth = std::max(0, depth - 1);
    }
    return toks.size();
}

std::vector<std::span<const Token>> split_top_level(std::span<const Token> toks, std::string_view op) {
    std::vector<std::span<const Token>> parts;
    std::size_t begin = 0;
    int depth = 0;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (opens(toks[i])) ++depth;
        else if (closes(toks[i])) depth = std::max(0, depth - 1);
        else if (depth == 0 && is_op(toks[i], op)) {
            parts.push_back(toks.subspan(begin, i - begin));
            begin = i + 1;
        }
    }
    parts.push_back(toks.subspan(begin));
    return parts;
}

// Names bound by a target like `a`, `a, b`, `(a, *rest)`. Targets with
// attributes or subscripts bind no plain names.
bool collect_plain_targets(std::span<const Token> target, std::vector<std::string>& out) {
    if (target.empty()) return false;
    std::vector<std::string> names;
    for (const auto& tok : target) {
        if (tok.kind == TokenKind::Name) {
            if (is_keyword(tok.text)) return false;
            names.push_back(tok.text);
        } else if (tok.kind == TokenKind::Op &&
                   (tok.text == "," || tok.text == "(" || tok.text == ")" || tok.text == "[" ||
                    tok.text == "]" || tok.text == "*")) {
            continue;
        } else {
            return false;
        }
    }
    if (names.empty()) return false;
    out.insert(out.end(), names.begin(), names.end());
    return true;
}

SyntaxNode analyze_simple(std::span<const Token> toks) {
    SyntaxNode node;
    node.kind = NodeKind::Statement;
    node.start_line = toks.front().line;
    node.end_line = toks.back().end_line;
    if (toks.front().kind == TokenKind::Name && is_keyword(toks.front().text)) return node;

    // `=` signs after a top-level lambda are parameter defaults.
    const std::size_t lambda_at =
        find_top_level(toks, 0, [](const Token& t) { return is_name(t, "lambda"); });
    auto head = toks.subspan(0, lambda_at);
    auto segments = split_top_level(head, "=");
    if (segments.size() > 1) {
        for (std::size_t s = 0; s + 1 < segments.size(); ++s) {
            auto seg = segments[s];
            const std::size_t colon =
                find_top_level(seg, 0, [](const Token& t) { return is_op(t, ":"); });
            if (colon < seg.size()) seg = seg.subspan(0, colon);
            collect_plain_targets(seg, node.targets);
        }
    } else {
        const std::size_t colon =
            find_top_level(toks, 0, [](const Token& t) { return is_op(t, ":"); });
        if (colon == 1 && toks.size() > 2 && toks[0].kind == TokenKind::Name) {
            node.targets.push_back(toks[0].text);
        }
    }
    if (!node.targets.empty()) node.kind = NodeKind::Assignment;
    return node;
}

class Parser {
public:
    Parser(std::vector<Token> tokens, std::string path) : path_(std::move(path)) {
        for (auto& tok : tokens) {
            if (tok.kind != TokenKind::Comment && tok.kind != TokenKind::NonLogicalNewline) {
                toks_.push_back(std::move(tok));
            }
        }
    }

    SyntaxNode parse_module() {
        SyntaxNode root;
        root.kind = NodeKind::Module;
        root.start_line = 1;
        root.body = parse_block(false);
        root.end_line = root.body.empty() ? 0 : root.body.back().end_line;
        return root;
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::string path_;

    const Token& cur() const { return toks_[pos_]; }

    [[noreturn]] void fail(int line, const std::string& message) const {
        throw ParseError(path_, line, message);
    }

    // Tokens of the current logical line, excluding its NEWLINE; advances past it.
    std::span<const Token> take_logical_line() {
        const std::size_t begin = pos_;
        while (cur().kind != TokenKind::Newline && cur().kind != TokenKind::EndOfFile) {
            if (cur().kind == TokenKind::Indent || cur().kind == TokenKind::Dedent) {
                fail(cur().line, "unexpected indentation inside a statement");
            }
            ++pos_;
        }
        std::span<const Token> line(toks_.data() + begin, pos_ - begin);
        if (cur().kind == TokenKind::Newline) ++pos_;
        return line;
    }

    std::vector<SyntaxNode> parse_block(bool indented) {
        std::vector<SyntaxNode> body;
        while (true) {
            const Token& tok = cur();
            if (tok.kind == TokenKind::EndOfFile) return body;
            if (tok.kind == TokenKind::Dedent) {
                if (!indented) fail(tok.line, "unexpected dedent");
                ++pos_;
                return body;
            }
            if (tok.kind == TokenKind::Indent) fail(tok.line, "unexpected indent");
            if (tok.kind == TokenKind::Newline) {
                ++pos_;
                continue;
            }
            parse_statement(body);
        }
    }

    // Body after a header's colon: inline statements or an indented block.
    int parse_suite(std::span<const Token> after_colon, int header_line, SyntaxNode& node) {
        if (!after_colon.empty()) {
            for (auto part : split_top_level(after_colon, ";")) {
                if (!part.empty()) node.body.push_back(analyze_simple(part));
            }
            return after_colon.back().end_line;
        }
        if (cur().kind != TokenKind::Indent) fail(header_line, "expected an indented block");
        ++pos_;
        node.body = parse_block(true);
        if (node.body.empty()) fail(header_line, "expected an indented block");
        return node.body.back().end_line;
    }

    void parse_statement(std::vector<SyntaxNode>& out) {
        int decorator_line = 0;
        while (is_op(cur(), "@")) {
            auto deco = take_logical_line();
            if (decorator_line == 0) decorator_line = deco.front().line;
            if (deco.size() < 2) fail(deco.front().line, "invalid decorator");
            if (cur().kind == TokenKind::Indent) fail(cur().line, "unexpected indent");
        }
        auto line = take_logical_line();
        if (line.empty()) {
            if (decorator_line != 0) fail(decorator_line, "decorator without a definition");
            return;
        }
        const Token& first = line.front();
        const bool is_async = is_name(first, "async") && line.size() > 1;
        const Token& head = is_async ? line[1] : first;

        if (is_name(head, "def") || is_name(head, "class")) {
            out.push_back(parse_definition(line, is_async ? 2 : 1, decorator_line));
            return;
        }
        if (decorator_line != 0) fail(decorator_line, "decorator must precede def or class");

        if (head.kind == TokenKind::Name &&
            std::find(kCompoundKeywords.begin(), kCompoundKeywords.end(), head.text) !=
                kCompoundKeywords.end()) {
            if (head.text != "match" || (is_op(line.back(), ":") && cur().kind == TokenKind::Indent)) {
                out.push_back(parse_compound(line));
                return;
            }
        }
        if (is_name(head, "case") && is_op(line.back(), ":") && cur().kind == TokenKind::Indent) {
            out.push_back(parse_compound(line));
            return;
        }
        for (auto part : split_top_level(line, ";")) {
            if (!part.empty()) out.push_back(analyze_simple(part));
        }
    }

    SyntaxNode parse_definition(std::span<const Token> line, std::size_t name_at, int decorator_line) {
        const bool is_def = line[name_at - 1].text == "def";
        SyntaxNode node;
        node.kind = is_def ? NodeKind::FunctionDef : NodeKind::ClassDef;
        node.start_line = decorator_line != 0 ? decorator_line : line.front().line;
        const int header_line = line.front().line;
        if (name_at >= line.size() || line[name_at].kind != TokenKind::Name ||
            is_keyword(line[name_at].text)) {
            fail(header_line, "invalid syntax: expected a name after '" + line[name_at - 1].text + "'");
        }
        node.name = line[name_at].text;
        std::size_t i = name_at + 1;
        if (is_def) {
            // Python 3.12 type parameters.
            if (i < line.size() && is_op(line[i], "[")) i = skip_brackets(line, i);
            if (i >= line.size() || !is_op(line[i], "(")) fail(header_line, "invalid syntax: expected '('");
            i = skip_brackets(line, i);
            if (i < line.size() && is_op(line[i], "->")) {
                const std::size_t colon =
                    find_top_level(line, i + 1, [](const Token& t) { return is_op(t, ":"); });
                if (colon == i + 1) fail(header_line, "invalid syntax: missing return annotation");
                i = colon;
            }
        } else {
            if (i < line.size() && is_op(line[i], "[")) i = skip_brackets(line, i);
            if (i < line.size() && is_op(line[i], "(")) i = skip_brackets(line, i);
        }
        if (i >= line.size() || !is_op(line[i], ":")) fail(header_line, "expected ':'");
        node.end_line = parse_suite(line.subspan(i + 1), header_line, node);
        return node;
    }

    // Given the index of an opening bracket, returns the index just past its match.
    std::size_t skip_brackets(std::span<const Token> line, std::size_t open) const {
        int depth = 0;
        for (std::size_t i = open; i < line.size(); ++i) {
            if (opens(line[i])) ++depth;
            else if (closes(line[i]) && --depth == 0) return i + 1;
        }
        fail(line[open].line, "'" + line[open].text + "' was never closed");
    }

    SyntaxNode parse_compound(std::span<const Token> line) {
        SyntaxNode node;
        node.kind = NodeKind::Compound;
        node.name = line.front().text;
        node.start_line = line.front().line;
        const std::size_t colon =
            find_top_level(line, 1, [](const Token& t) { return is_op(t, ":"); });
        if (colon >= line.size()) fail(line.front().line, "expected ':'");
        node.end_line = parse_suite(line.subspan(colon + 1), line.front().line, node);
        return node;
    }
};

}  // namespace

SyntaxTree parse_file(std::string_view source_text, const std::string& file_path) {
    const std::string normalized = normalize_newlines(source_text);
    LexResult lexed = tokenize(normalized);
    if (!lexed.errors.empty()) {
        throw ParseError(file_path, lexed.errors.front().line, lexed.errors.front().message);
    }
    Parser parser(std::move(lexed.tokens), file_path);
    return SyntaxTree{file_path, parser.parse_module()};
}

}  // namespace coderag::python
