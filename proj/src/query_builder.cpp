#include "coderag/query_builder.hpp"

#include "coderag/parallel.hpp"
#include "coderag/python_lexer.hpp"

#include <algorithm>
#include <numeric>

namespace coderag {
namespace {

ChunkedFile chunk_lines_of(const std::vector<std::string>& lines, int chunk_lines, int cursor_line) {
    if (lines.empty()) throw EmptyFile();
    if (chunk_lines < 1) throw std::invalid_argument("chunk length f must be >= 1");
    if (cursor_line < 1 || cursor_line > static_cast<int>(lines.size())) {
        throw std::invalid_argument("cursor line " + std::to_string(cursor_line) + " outside 1.." +
                                    std::to_string(lines.size()));
    }
    ChunkedFile out;
    const int total = static_cast<int>(lines.size());
    for (int start = 1; start <= total; start += chunk_lines) {
        Chunk chunk;
        chunk.index = out.chunks.size();
        chunk.line_span = {start, std::min(total, start + chunk_lines - 1)};
        for (int l = chunk.line_span.start; l <= chunk.line_span.end; ++l) {
            if (l != chunk.line_span.start) chunk.text.push_back('\n');
            chunk.text += lines[static_cast<std::size_t>(l - 1)];
        }
        if (cursor_line >= chunk.line_span.start && cursor_line <= chunk.line_span.end) {
            out.target_index = chunk.index;
        }
        out.chunks.push_back(std::move(chunk));
    }
    return out;
}

}  // namespace

ChunkedFile chunk_file(std::string_view file_text, int chunk_lines, int cursor_line) {
    return chunk_lines_of(python::split_lines(python::normalize_newlines(file_text)), chunk_lines, cursor_line);
}

std::vector<ChunkScore> score_chunks(const std::vector<Chunk>& chunks, std::size_t target_index,
                                     ProbeClient& probe, int probe_steps, unsigned jobs) {
    std::vector<std::size_t> todo;
    for (const auto& chunk : chunks) {
        if (chunk.index != target_index) todo.push_back(chunk.index);
    }
    std::vector<ChunkScore> scores(todo.size());
    const std::string& target = chunks.at(target_index).text;
    parallel_for(todo.size(), probe.concurrent_safe() ? jobs : 1, [&](std::size_t k) {
        const auto& chunk = chunks[todo[k]];
        try {
            scores[k] = {chunk.index, probe.greedy_score(chunk.text + "\n" + target, probe_steps)};
        } catch (const ClientUnavailable& e) {
            throw ProbeUnavailable("probing chunk " + std::to_string(chunk.index) + " (lines " +
                                   std::to_string(chunk.line_span.start) + "-" +
                                   std::to_string(chunk.line_span.end) + "): " + e.what());
        }
    });
    return scores;
}

RetrievalQuery construct_query(std::string_view file_text, int cursor_line, const QueryParams& params,
                               ProbeClient& probe, unsigned jobs) {
    if (params.selected < 0) throw std::invalid_argument("g must be >= 0");
    const std::string normalized = python::normalize_newlines(file_text);
    auto lines = python::split_lines(normalized);
    // A trailing newline puts the cursor on a fresh empty line.
    if (!normalized.empty() && normalized.back() == '\n' && cursor_line == static_cast<int>(lines.size()) + 1) {
        lines.emplace_back();
    }
    if (lines.empty()) throw EmptyFile();
    if (cursor_line >= 1 && cursor_line < static_cast<int>(lines.size())) {
        lines.resize(static_cast<std::size_t>(cursor_line));
    }
    const ChunkedFile chunked = chunk_lines_of(lines, params.chunk_lines, cursor_line);

    RetrievalQuery query;
    query.target_chunk = chunked.chunks[chunked.target_index].text;
    if (chunked.chunks.size() >= 2 && params.selected > 0) {
        query.scores = score_chunks(chunked.chunks, chunked.target_index, probe, params.probe_steps, jobs);
        std::vector<ChunkScore> ranked = query.scores;
        std::stable_sort(ranked.begin(), ranked.end(), [](const ChunkScore& a, const ChunkScore& b) {
            return a.confidence != b.confidence ? a.confidence > b.confidence : a.chunk_index < b.chunk_index;
        });
        ranked.resize(std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(params.selected)));
        for (const auto& s : ranked) query.selected_indices.push_back(s.chunk_index);
        std::sort(query.selected_indices.begin(), query.selected_indices.end());
        for (auto idx : query.selected_indices) {
            query.selected_chunks.push_back(chunked.chunks[idx].text);
            query.combined_text += chunked.chunks[idx].text;
            query.combined_text.push_back('\n');
        }
    }
    query.combined_text += query.target_chunk;
    return query;
}

}  // namespace coderag
