#include "coderag/sparse_index.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace coderag {
namespace {

bool is_word_byte(unsigned char c) {
    return std::isalnum(c) || c >= 0x80;
}

bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }
bool is_lower(char c) { return std::islower(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

void split_camel(std::string_view word, std::vector<std::string>& out) {
    std::size_t begin = 0;
    for (std::size_t i = 1; i < word.size(); ++i) {
        const char prev = word[i - 1];
        const char c = word[i];
        const bool lower_to_upper = (is_lower(prev) || is_digit(prev)) && is_upper(c);
        const bool acronym_end = is_upper(prev) && is_upper(c) && i + 1 < word.size() && is_lower(word[i + 1]);
        if (lower_to_upper || acronym_end) {
            out.emplace_back(word.substr(begin, i - begin));
            begin = i;
        }
    }
    out.emplace_back(word.substr(begin));
}

}  // namespace

std::vector<std::string> search_terms(std::string_view text) {
    std::vector<std::string> terms;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_word_byte(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
        split_camel(text.substr(i, j - i), terms);
        i = j;
    }
    for (auto& t : terms) {
        std::transform(t.begin(), t.end(), t.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    }
    return terms;
}

SparseIndex SparseIndex::build(const CodeKnowledgeBase& kb) {
    std::vector<std::string> docs;
    docs.reserve(kb.items.size());
    for (const auto& item : kb.items) docs.push_back(item.text);
    return build(docs);
}

SparseIndex SparseIndex::build(const std::vector<std::string>& documents) {
    std::vector<std::map<std::string, std::uint32_t>> counts(documents.size());
    std::map<std::string, std::uint32_t> df;
    for (std::size_t d = 0; d < documents.size(); ++d) {
        for (auto& term : search_terms(documents[d])) ++counts[d][std::move(term)];
        for (const auto& [term, tf] : counts[d]) ++df[term];
    }

    SparseIndex index;
    index.terms_.reserve(df.size());
    std::map<std::string, std::uint32_t> ids;
    for (const auto& [term, freq] : df) {
        ids.emplace(term, static_cast<std::uint32_t>(index.terms_.size()));
        index.terms_.push_back(term);
        index.idf_.push_back(std::log(static_cast<double>(documents.size()) / freq) + 1.0);
    }
    index.postings_.resize(index.terms_.size());
    for (std::size_t d = 0; d < documents.size(); ++d) {
        for (const auto& [term, tf] : counts[d]) {
            index.postings_[ids.at(term)].push_back({static_cast<std::uint32_t>(d), tf});
        }
    }
    // Norms accumulate in ascending term order.
    std::vector<double> sq(documents.size(), 0.0);
    for (std::size_t t = 0; t < index.postings_.size(); ++t) {
        for (const auto& p : index.postings_[t]) {
            const double w = static_cast<double>(p.tf) * index.idf_[t];
            sq[p.item] += w * w;
        }
    }
    index.item_norms_.resize(documents.size());
    std::transform(sq.begin(), sq.end(), index.item_norms_.begin(), [](double s) { return std::sqrt(s); });
    return index;
}

std::optional<std::uint32_t> SparseIndex::term_id(std::string_view term) const {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), term);
    if (it == terms_.end() || *it != term) return std::nullopt;
    return static_cast<std::uint32_t>(it - terms_.begin());
}

std::size_t SparseIndex::document_frequency(std::string_view term) const {
    auto id = term_id(term);
    return id ? postings_[*id].size() : 0;
}

double SparseIndex::idf(std::string_view term) const {
    auto id = term_id(term);
    if (!id) throw std::out_of_range("term not in vocabulary: " + std::string(term));
    return idf_[*id];
}

std::vector<ScoredItem> SparseIndex::retrieve(std::string_view query_text, std::size_t j) const {
    if (j == 0) throw std::invalid_argument("sparse retrieval needs j >= 1");
    std::map<std::uint32_t, std::uint32_t> query_tf;
    for (const auto& term : search_terms(query_text)) {
        if (auto id = term_id(term)) ++query_tf[*id];
    }
    if (query_tf.empty()) return {};

    double query_sq = 0.0;
    std::vector<double> dot(item_norms_.size(), 0.0);
    std::vector<std::uint32_t> touched;
    for (const auto& [term, tf] : query_tf) {
        const double qw = static_cast<double>(tf) * idf_[term];
        query_sq += qw * qw;
        for (const auto& p : postings_[term]) {
            if (dot[p.item] == 0.0) touched.push_back(p.item);
            dot[p.item] += qw * (static_cast<double>(p.tf) * idf_[term]);
        }
    }
    const double query_norm = std::sqrt(query_sq);
    std::vector<ScoredItem> scored;
    scored.reserve(touched.size());
    for (auto item : touched) {
        const double norm = item_norms_[item];
        if (norm <= 0.0 || dot[item] <= 0.0) continue;
        scored.push_back({item, std::min(1.0, dot[item] / (query_norm * norm))});
    }
    auto better = [](const ScoredItem& a, const ScoredItem& b) {
        return a.score != b.score ? a.score > b.score : a.item < b.item;
    };
    const std::size_t keep = std::min(j, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(), better);
    scored.resize(keep);
    return scored;
}

void SparseIndex::save(const std::filesystem::path& file) const {
    nlohmann::json j;
    j["format"] = "coderag-sparse";
    j["version"] = 1;
    j["terms"] = terms_;
    j["idf"] = idf_;
    auto& postings = j["postings"] = nlohmann::json::array();
    for (const auto& list : postings_) {
        auto arr = nlohmann::json::array();
        for (const auto& p : list) arr.push_back({p.item, p.tf});
        postings.push_back(std::move(arr));
    }
    j["norms"] = item_norms_;
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
}

SparseIndex SparseIndex::load(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + file.string());
    const auto j = nlohmann::json::parse(in);
    if (j.at("format") != "coderag-sparse" || j.at("version") != 1) {
        throw std::runtime_error("unsupported sparse index format in " + file.string());
    }
    SparseIndex index;
    index.terms_ = j.at("terms").get<std::vector<std::string>>();
    index.idf_ = j.at("idf").get<std::vector<double>>();
    for (const auto& list : j.at("postings")) {
        auto& out = index.postings_.emplace_back();
        for (const auto& p : list) out.push_back({p.at(0).get<std::uint32_t>(), p.at(1).get<std::uint32_t>()});
    }
    index.item_norms_ = j.at("norms").get<std::vector<double>>();
    if (index.idf_.size() != index.terms_.size() || index.postings_.size() != index.terms_.size()) {
        throw std::runtime_error("corrupt sparse index " + file.string());
    }
    return index;
}

}  // namespace coderag
