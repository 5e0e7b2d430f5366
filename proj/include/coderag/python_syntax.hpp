#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace coderag::python {

enum class NodeKind {
    Module,
    FunctionDef,
    ClassDef,
    Assignment,  // `x = ...`, `x: T = ...`, `x: T`
    Compound,    // if/for/while/try/with/match blocks
    Statement,   // any other simple statement
};

struct SyntaxNode {
    NodeKind kind = NodeKind::Statement;
    std::string name;                  // def/class name
    std::vector<std::string> targets;  // plain names bound by an assignment
    int start_line = 0;                // first decorator line for decorated defs
    int end_line = 0;
    std::vector<SyntaxNode> body;
};

struct SyntaxTree {
    std::string file_path;
    SyntaxNode root;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::string file_path, int line, std::string diagnostic)
        : std::runtime_error(file_path + ":" + std::to_string(line) + ": " + diagnostic),
          file_path_(std::move(file_path)),
          line_(line),
          diagnostic_(std::move(diagnostic)) {}

    const std::string& file_path() const noexcept { return file_path_; }
    int line() const noexcept { return line_; }
    const std::string& diagnostic() const noexcept { return diagnostic_; }

private:
    std::string file_path_;
    int line_;
    std::string diagnostic_;
};

/// Builds a statement-level syntax tree. Throws ParseError on lexical errors
/// and on malformed block structure (bad def/class headers, missing colons,
/// missing or unexpected indentation).
SyntaxTree parse_file(std::string_view source_text, const std::string& file_path);

}  // namespace coderag::python
