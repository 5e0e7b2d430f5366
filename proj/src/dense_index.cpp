#include "coderag/dense_index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace coderag {
namespace {

constexpr char kMagic[4] = {'C', 'R', 'D', 'V'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
T to_little_endian(T value) {
    if constexpr (std::endian::native == std::endian::little) {
        return value;
    } else {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
}

void write_u32(std::ostream& out, std::uint32_t v) {
    v = to_little_endian(v);
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("truncated dense.vec");
    return to_little_endian(v);
}

}  // namespace

bool normalize(std::vector<float>& v) {
    double sq = 0.0;
    for (float x : v) sq += static_cast<double>(x) * x;
    if (sq == 0.0 || !std::isfinite(sq)) {
        std::fill(v.begin(), v.end(), 0.0f);
        return false;
    }
    const double norm = std::sqrt(sq);
    for (float& x : v) x = static_cast<float>(x / norm);
    return true;
}

DenseIndex::DenseIndex(std::size_t dim, std::vector<std::string> ids, std::vector<float> rows)
    : dim_(dim), ids_(std::move(ids)), rows_(std::move(rows)) {
    if (rows_.size() != dim_ * ids_.size()) throw std::invalid_argument("dense rows do not match dim x count");
    zero_.resize(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        auto r = row(i);
        zero_[i] = std::all_of(r.begin(), r.end(), [](float x) { return x == 0.0f; }) ? 1 : 0;
    }
}

DenseIndex DenseIndex::from_vectors(std::vector<std::string> ids, const std::vector<std::vector<float>>& raw) {
    if (ids.size() != raw.size()) throw std::invalid_argument("one id per vector required");
    const std::size_t dim = raw.empty() ? 0 : raw.front().size();
    std::vector<float> rows;
    rows.reserve(dim * raw.size());
    for (auto v : raw) {
        if (v.size() != dim) throw std::invalid_argument("embedding dimension mismatch");
        normalize(v);
        rows.insert(rows.end(), v.begin(), v.end());
    }
    return DenseIndex(dim, std::move(ids), std::move(rows));
}

DenseIndex DenseIndex::build(const CodeKnowledgeBase& kb, EmbedderClient& embedder) {
    const std::size_t dim = embedder.dimension();
    std::vector<std::string> ids;
    std::vector<float> rows;
    rows.reserve(dim * kb.items.size());
    for (std::size_t i = 0; i < kb.items.size(); ++i) {
        const auto& item = kb.items[i];
        // Functions are embedded whole; variables are their own (few) lines,
        // so item.text is the right unit for both.
        std::vector<float> v;
        try {
            v = embedder.embed(item.text);
        } catch (const ClientUnavailable& e) {
            throw EmbedderUnavailable("dense index build stopped after " + std::to_string(i) + " of " +
                                      std::to_string(kb.items.size()) + " items: " + e.what());
        }
        if (v.size() != dim) throw EmbedderUnavailable("embedder returned wrong dimension for " + item.id);
        normalize(v);
        ids.push_back(item.id);
        rows.insert(rows.end(), v.begin(), v.end());
    }
    return DenseIndex(dim, std::move(ids), std::move(rows));
}

std::vector<ScoredItem> DenseIndex::search(std::span<const float> query, std::size_t j) const {
    if (j == 0) throw std::invalid_argument("dense retrieval needs j >= 1");
    if (query.size() != dim_) throw std::invalid_argument("query dimension mismatch");
    std::vector<float> q(query.begin(), query.end());
    if (!normalize(q)) return {};
    std::vector<ScoredItem> scored;
    scored.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (zero_[i]) continue;
        auto r = row(i);
        double dot = 0.0;
        for (std::size_t k = 0; k < dim_; ++k) dot += static_cast<double>(q[k]) * r[k];
        scored.push_back({i, dot});
    }
    auto better = [](const ScoredItem& a, const ScoredItem& b) {
        return a.score != b.score ? a.score > b.score : a.item < b.item;
    };
    const std::size_t keep = std::min(j, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(), better);
    scored.resize(keep);
    return scored;
}

std::vector<ScoredItem> DenseIndex::retrieve(std::string_view query_text, EmbedderClient& embedder,
                                             std::size_t j) const {
    auto q = embedder.embed(query_text);
    return search(q, j);
}

void DenseIndex::save(const std::filesystem::path& file) const {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out.write(kMagic, sizeof kMagic);
    write_u32(out, kVersion);
    write_u32(out, static_cast<std::uint32_t>(dim_));
    write_u32(out, static_cast<std::uint32_t>(ids_.size()));
    for (float x : rows_) write_u32(out, std::bit_cast<std::uint32_t>(x));
    for (const auto& id : ids_) {
        write_u32(out, static_cast<std::uint32_t>(id.size()));
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
    }
}

DenseIndex DenseIndex::load(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + file.string());
    char magic[4] = {};
    in.read(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw std::runtime_error("not a dense.vec file: " + file.string());
    if (read_u32(in) != kVersion) throw std::runtime_error("unsupported dense.vec version");
    const std::size_t dim = read_u32(in);
    const std::size_t count = read_u32(in);
    std::vector<float> rows(dim * count);
    for (auto& x : rows) x = std::bit_cast<float>(read_u32(in));
    std::vector<std::string> ids(count);
    for (auto& id : ids) {
        id.resize(read_u32(in));
        if (!in.read(id.data(), static_cast<std::streamsize>(id.size()))) throw std::runtime_error("truncated dense.vec");
    }
    return DenseIndex(dim, std::move(ids), std::move(rows));
}

}  // namespace coderag
