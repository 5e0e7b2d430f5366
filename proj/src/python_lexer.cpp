#include "coderag/python_lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace coderag::python {
namespace {

constexpr std::array<std::string_view, 35> kKeywords = {
    "False", "None",   "True",    "and",      "as",       "assert", "async",
    "await", "break",  "class",   "continue", "def",      "del",    "elif",
    "else",  "except", "finally", "for",      "from",     "global", "if",
    "import", "in",    "is",      "lambda",   "nonlocal", "not",    "or",
    "pass",  "raise",  "return",  "try",      "while",    "with",   "yield",
};

constexpr std::array<std::string_view, 5> kThreeCharOps = {"**=", "//=", ">>=", "<<=", "..."};
constexpr std::array<std::string_view, 22> kTwoCharOps = {
    "==", "!=", "<=", ">=", "**", "//", "<<", ">>", "+=", "-=", "*=",
    "/=", "%=", "&=", "|=", "^=", "->", ":=", "@=", "<>", "~=", "!~",
};
constexpr std::string_view kSingleCharOps = "+-*/%@&|^~<>()[]{},:;.=";

bool is_name_start(unsigned char c) {
    return std::isalpha(c) || c == '_' || c >= 0x80;
}

bool is_name_char(unsigned char c) {
    return std::isalnum(c) || c == '_' || c >= 0x80;
}

bool is_string_prefix(std::string_view word) {
    if (word.size() > 2) return false;
    std::string lower;
    for (char c : word) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    static constexpr std::array<std::string_view, 10> prefixes = {
        "r", "u", "b", "f", "br", "rb", "fr", "rf", "t", "tr"};
    return std::find(prefixes.begin(), prefixes.end(), lower) != prefixes.end();
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    LexResult run() {
        if (src_.find('\0') != std::string_view::npos) {
            result_.fatal = true;
            result_.errors.push_back({1, "source contains NUL bytes"});
            push(TokenKind::EndOfFile, "", 1, 0, 1);
            return std::move(result_);
        }
        while (pos_ < src_.size()) {
            if (at_line_start_) {
                if (!handle_line_start()) continue;
            }
            lex_token();
        }
        finish();
        return std::move(result_);
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    std::size_t line_begin_ = 0;
    bool at_line_start_ = true;
    bool line_has_tokens_ = false;
    bool continuation_ = false;
    std::vector<int> indents_{0};
    std::vector<char> brackets_;
    LexResult result_;

    char peek(std::size_t offset = 0) const {
        return pos_ + offset < src_.size() ? src_[pos_ + offset] : '\0';
    }

    int column_of(std::size_t p) const { return static_cast<int>(p - line_begin_); }

    void push(TokenKind kind, std::string text, int line, int column, int end_line) {
        result_.tokens.push_back(Token{kind, std::move(text), line, column, end_line});
    }

    void error(int line, std::string message) {
        result_.errors.push_back({line, std::move(message)});
    }

    void newline_char() {
        ++pos_;
        ++line_;
        line_begin_ = pos_;
    }

    // Returns false when the whole line was consumed (blank or comment-only).
    bool handle_line_start() {
        at_line_start_ = false;
        if (!brackets_.empty() || continuation_) {
            continuation_ = false;
            return true;
        }
        int width = 0;
        std::size_t p = pos_;
        while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t' || src_[p] == '\f')) {
            if (src_[p] == '\t') width = (width / 8 + 1) * 8;
            else if (src_[p] == ' ') ++width;
            else width = 0;
            ++p;
        }
        if (p >= src_.size() || src_[p] == '\n' || src_[p] == '#' ||
            (src_[p] == '\\' && p + 1 < src_.size() && src_[p + 1] == '\n')) {
            // Blank or comment-only lines do not affect indentation.
            pos_ = p;
            if (pos_ < src_.size() && src_[pos_] == '#') lex_comment();
            if (pos_ < src_.size() && src_[pos_] == '\\') {
                pos_ += 1;
                newline_char();
                at_line_start_ = true;
                return false;
            }
            if (pos_ < src_.size()) {
                push(TokenKind::NonLogicalNewline, "\n", line_, column_of(pos_), line_);
                newline_char();
            }
            at_line_start_ = true;
            return false;
        }
        pos_ = p;
        if (width > indents_.back()) {
            indents_.push_back(width);
            push(TokenKind::Indent, "", line_, 0, line_);
        } else {
            while (width < indents_.back()) {
                indents_.pop_back();
                push(TokenKind::Dedent, "", line_, 0, line_);
            }
            if (width != indents_.back()) {
                error(line_, "unindent does not match any outer indentation level");
                indents_.push_back(width);
            }
        }
        return true;
    }

    void lex_comment() {
        std::size_t start = pos_;
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
        push(TokenKind::Comment, std::string(src_.substr(start, pos_ - start)), line_,
             column_of(start), line_);
    }

    void end_of_line() {
        if (brackets_.empty() && line_has_tokens_) {
            push(TokenKind::Newline, "\n", line_, column_of(pos_), line_);
            line_has_tokens_ = false;
        } else {
            push(TokenKind::NonLogicalNewline, "\n", line_, column_of(pos_), line_);
        }
        newline_char();
        at_line_start_ = true;
    }

    void lex_token() {
        char c = peek();
        if (c == ' ' || c == '\t' || c == '\f') {
            ++pos_;
            return;
        }
        if (c == '\n') {
            end_of_line();
            return;
        }
        if (c == '#') {
            lex_comment();
            return;
        }
        if (c == '\\') {
            if (peek(1) == '\n') {
                pos_ += 1;
                newline_char();
                continuation_ = true;
                at_line_start_ = true;
                return;
            }
            if (pos_ + 1 >= src_.size()) {
                ++pos_;
                error(line_, "unexpected end of file after line continuation");
                return;
            }
        }
        line_has_tokens_ = true;
        const unsigned char uc = static_cast<unsigned char>(c);
        if (is_name_start(uc)) {
            std::size_t start = pos_;
            while (pos_ < src_.size() && is_name_char(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            std::string_view word = src_.substr(start, pos_ - start);
            if ((peek() == '\'' || peek() == '"') && is_string_prefix(word)) {
                lex_string(start);
                return;
            }
            push(TokenKind::Name, std::string(word), line_, column_of(start), line_);
            return;
        }
        if (std::isdigit(uc) || (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
            lex_number();
            return;
        }
        if (c == '\'' || c == '"') {
            lex_string(pos_);
            return;
        }
        lex_operator();
    }

    void lex_number() {
        std::size_t start = pos_;
        while (pos_ < src_.size()) {
            char ch = src_[pos_];
            if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.') {
                ++pos_;
                if ((ch == 'e' || ch == 'E') && (peek() == '+' || peek() == '-') &&
                    !(src_.substr(start, 2) == "0x" || src_.substr(start, 2) == "0X")) {
                    ++pos_;
                }
                continue;
            }
            break;
        }
        push(TokenKind::Number, std::string(src_.substr(start, pos_ - start)), line_,
             column_of(start), line_);
    }

    void lex_string(std::size_t start) {
        const int start_line = line_;
        const int start_col = column_of(start);
        const char quote = peek();
        const bool triple = peek(1) == quote && peek(2) == quote;
        pos_ += triple ? 3 : 1;
        while (true) {
            if (pos_ >= src_.size()) {
                error(start_line, triple ? "unterminated triple-quoted string literal"
                                         : "unterminated string literal");
                break;
            }
            char ch = src_[pos_];
            if (ch == '\\') {
                if (peek(1) == '\n') {
                    pos_ += 1;
                    newline_char();
                } else {
                    pos_ += std::min<std::size_t>(2, src_.size() - pos_);
                }
                continue;
            }
            if (ch == '\n') {
                if (!triple) {
                    error(start_line, "unterminated string literal");
                    break;
                }
                newline_char();
                continue;
            }
            if (ch == quote) {
                if (!triple) {
                    ++pos_;
                    break;
                }
                if (peek(1) == quote && peek(2) == quote) {
                    pos_ += 3;
                    break;
                }
            }
            ++pos_;
        }
        push(TokenKind::String, std::string(src_.substr(start, pos_ - start)), start_line, start_col,
             line_);
    }

    void lex_operator() {
        const std::size_t start = pos_;
        const std::string_view rest = src_.substr(pos_);
        std::size_t len = 0;
        for (auto op : kThreeCharOps) {
            if (rest.substr(0, 3) == op) len = 3;
        }
        if (len == 0) {
            for (auto op : kTwoCharOps) {
                if (rest.substr(0, 2) == op) len = 2;
            }
        }
        if (len == 0 && kSingleCharOps.find(rest[0]) != std::string_view::npos) len = 1;
        if (len == 0) {
            ++pos_;
            // Consume the rest of a multi-byte sequence so errors are reported once.
            push(TokenKind::Error, std::string(rest.substr(0, 1)), line_, column_of(start), line_);
            error(line_, "invalid character '" + std::string(rest.substr(0, 1)) + "'");
            return;
        }
        std::string_view op = rest.substr(0, len);
        if (op == "<>" || op == "~=" || op == "!~") {
            // Not Python operators; emit the first character alone.
            len = 1;
            op = rest.substr(0, 1);
        }
        pos_ += len;
        if (op == "(" || op == "[" || op == "{") {
            brackets_.push_back(op[0]);
        } else if (op == ")" || op == "]" || op == "}") {
            const char open = op == ")" ? '(' : op == "]" ? '[' : '{';
            if (brackets_.empty()) {
                error(line_, "unmatched '" + std::string(op) + "'");
            } else if (brackets_.back() != open) {
                error(line_, "closing parenthesis '" + std::string(op) +
                                 "' does not match opening parenthesis '" +
                                 std::string(1, brackets_.back()) + "'");
                brackets_.pop_back();
            } else {
                brackets_.pop_back();
            }
        }
        push(TokenKind::Op, std::string(op), line_, column_of(start), line_);
    }

    void finish() {
        if (!brackets_.empty()) {
            error(line_, "'" + std::string(1, brackets_.back()) + "' was never closed");
        }
        if (line_has_tokens_) {
            push(TokenKind::Newline, "", line_, column_of(pos_), line_);
        }
        const int last = line_;
        while (indents_.size() > 1) {
            indents_.pop_back();
            push(TokenKind::Dedent, "", last, 0, last);
        }
        push(TokenKind::EndOfFile, "", last, 0, last);
    }
};

}  // namespace

LexResult tokenize(std::string_view source) {
    return Lexer(source).run();
}

bool is_keyword(std::string_view word) {
    return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

std::vector<std::string> identifier_tokens(std::string_view source) {
    std::vector<std::string> out;
    for (auto& tok : tokenize(source).tokens) {
        if (tok.kind == TokenKind::Name && !is_keyword(tok.text)) out.push_back(std::move(tok.text));
    }
    return out;
}

std::string normalize_newlines(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\r') {
            out.push_back('\n');
            if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        } else {
            out.push_back(text[i]);
        }
    }
    return out;
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.emplace_back(text.substr(start));
            break;
        }
        lines.emplace_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

}  // namespace coderag::python
