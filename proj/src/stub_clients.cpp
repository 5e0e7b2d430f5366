#include "coderag/stub_clients.hpp"

#include "coderag/python_lexer.hpp"
#include "coderag/sparse_index.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace coderag {
namespace {

bool is_word(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

}  // namespace

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::size_t approximate_token_count(std::string_view text) {
    std::size_t count = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (is_word(c) || static_cast<unsigned char>(c) >= 0x80) {
            while (i < text.size() && (is_word(text[i]) || static_cast<unsigned char>(text[i]) >= 0x80)) ++i;
            ++count;
        } else {
            ++i;
            ++count;
        }
    }
    return count;
}

double StubProbe::greedy_score(std::string_view prompt, int steps) {
    if (steps <= 0) return 0.0;
    // The chunk_lines-th newline separates context from target.
    std::size_t cut = std::string_view::npos;
    std::size_t from = 0;
    for (int line = 0; line < chunk_lines_; ++line) {
        cut = prompt.find('\n', from);
        if (cut == std::string_view::npos) break;
        from = cut + 1;
    }
    const std::string_view context = cut == std::string_view::npos ? prompt : prompt.substr(0, cut);
    const std::string_view target = cut == std::string_view::npos ? std::string_view{} : prompt.substr(cut + 1);
    const auto ctx = python::identifier_tokens(context);
    const auto tgt = python::identifier_tokens(target);
    const std::set<std::string> context_ids(ctx.begin(), ctx.end());
    const std::set<std::string> target_ids(tgt.begin(), tgt.end());
    std::size_t unshared = 0;
    for (const auto& id : context_ids) unshared += target_ids.contains(id) ? 0 : 1;
    return -static_cast<double>(unshared);
}

std::vector<float> StubEmbedder::embed(std::string_view text) {
    std::vector<float> v(dim_, 0.0f);
    for (const auto& term : search_terms(text)) {
        std::mt19937_64 gen(fnv1a64(term) ^ seed_);
        for (std::size_t k = 0; k < dim_; k += 64) {
            const std::uint64_t bits = gen();
            for (std::size_t b = 0; b < 64 && k + b < dim_; ++b) {
                v[k + b] += ((bits >> b) & 1u) ? 1.0f : -1.0f;
            }
        }
    }
    return v;
}

std::optional<std::size_t> StubPicker::pick(std::string_view query, std::span<const std::string> window) {
    if (window.empty()) return std::nullopt;
    const auto q = search_terms(query);
    const std::set<std::string> query_terms(q.begin(), q.end());
    std::size_t best = 0;
    double best_score = -1.0;
    for (std::size_t i = 0; i < window.size(); ++i) {
        const auto s = search_terms(window[i]);
        const std::set<std::string> terms(s.begin(), s.end());
        std::size_t shared = 0;
        for (const auto& t : terms) shared += query_terms.contains(t) ? 1 : 0;
        const double score = terms.empty() ? 0.0 : shared / std::sqrt(static_cast<double>(terms.size()));
        if (score > best_score) {
            best_score = score;
            best = i;
        }
    }
    return best;
}

std::optional<std::size_t> ScoreOraclePicker::pick(std::string_view, std::span<const std::string> window) {
    if (window.empty()) return std::nullopt;
    std::size_t best = 0;
    double best_score = score_(window[0]);
    for (std::size_t i = 1; i < window.size(); ++i) {
        const double s = score_(window[i]);
        if (s > best_score) {
            best_score = s;
            best = i;
        }
    }
    return best;
}

std::optional<std::size_t> RandomPicker::pick(std::string_view, std::span<const std::string> window) {
    if (window.empty()) return std::nullopt;
    std::uniform_int_distribution<std::size_t> dist(0, window.size() - 1);
    return dist(rng_);
}

std::string EchoGenerator::generate(std::string_view prompt, const GenerationConfig& config) {
    std::size_t frag_begin = prompt.size();
    while (frag_begin > 0 && is_word(prompt[frag_begin - 1])) --frag_begin;
    const std::string_view fragment = prompt.substr(frag_begin);
    if (fragment.empty()) return {};

    const std::string_view context = prompt.substr(0, frag_begin);
    std::size_t i = 0;
    while (i < context.size()) {
        if (!is_word(context[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < context.size() && is_word(context[j])) ++j;
        const std::string_view word = context.substr(i, j - i);
        if (word.size() > fragment.size() && word.starts_with(fragment)) {
            std::size_t eol = context.find('\n', j);
            if (eol == std::string_view::npos) eol = context.size();
            std::string completion(word.substr(fragment.size()));
            completion += context.substr(j, eol - j);
            while (!completion.empty() && (completion.back() == ':' || std::isspace(static_cast<unsigned char>(completion.back())))) {
                completion.pop_back();
            }
            while (!completion.empty() &&
                   approximate_token_count(completion) > static_cast<std::size_t>(std::max(0, config.max_new_tokens))) {
                completion.pop_back();
            }
            return completion;
        }
        i = j;
    }
    return {};
}

}  // namespace coderag
