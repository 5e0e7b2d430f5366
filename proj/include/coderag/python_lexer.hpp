#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace coderag::python {

enum class TokenKind {
    Name,
    Number,
    String,
    Op,
    Comment,
    Newline,  // end of a logical line
    NonLogicalNewline,
    Indent,
    Dedent,
    Error,
    EndOfFile,
};

struct Token {
    TokenKind kind;
    std::string text;
    int line = 0;      // 1-based line of the first character
    int column = 0;    // 0-based byte column
    int end_line = 0;  // line of the last character
};

struct LexDiagnostic {
    int line = 0;
    std::string message;
};

struct LexResult {
    std::vector<Token> tokens;
    std::vector<LexDiagnostic> errors;
    bool fatal = false;  // input is not text (NUL bytes)
};

/// Tokenizes Python source following the CPython tokenizer's layout rules
/// (INDENT/DEDENT, implicit joining inside brackets, backslash continuation).
/// Never throws; problems are collected in LexResult::errors and the lexer
/// recovers so that partial programs (an editor prefix) still yield tokens.
LexResult tokenize(std::string_view source);

bool is_keyword(std::string_view word);

/// Name tokens of `source` that are not keywords, in order of appearance.
/// Literals and comments are skipped.
std::vector<std::string> identifier_tokens(std::string_view source);

/// CRLF and lone CR become LF.
std::string normalize_newlines(std::string_view text);

/// Splits on '\n'. A trailing newline does not produce an extra empty line;
/// the empty string has zero lines.
std::vector<std::string> split_lines(std::string_view text);

}  // namespace coderag::python
