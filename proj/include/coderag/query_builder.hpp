#pragma once

#include "coderag/clients.hpp"
#include "coderag/code_kb.hpp"

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace coderag {

struct Chunk {
    std::size_t index = 0;
    LineSpan line_span;
    std::string text;

    friend bool operator==(const Chunk&, const Chunk&) = default;
};

struct ChunkScore {
    std::size_t chunk_index = 0;
    double confidence = 0.0;

    friend bool operator==(const ChunkScore&, const ChunkScore&) = default;
};

struct RetrievalQuery {
    std::vector<std::string> selected_chunks;  // file order
    std::vector<std::size_t> selected_indices;
    std::string target_chunk;
    std::string combined_text;
    std::vector<ChunkScore> scores;

    friend bool operator==(const RetrievalQuery&, const RetrievalQuery&) = default;
};

struct QueryParams {
    int chunk_lines = 3;    // f
    int probe_steps = 8;    // m
    int selected = 1;       // g
};

class EmptyFile : public std::invalid_argument {
public:
    EmptyFile() : std::invalid_argument("file has no lines") {}
};

struct ChunkedFile {
    std::vector<Chunk> chunks;
    std::size_t target_index = 0;
};

/// Partitions the file into runs of `chunk_lines` lines ("\r\n" normalized)
/// and locates the chunk containing cursor_line.
ChunkedFile chunk_file(std::string_view file_text, int chunk_lines, int cursor_line);

/// Probes every non-target chunk with prompt = chunk + "\n" + target.
/// Calls run concurrently when the probe declares itself safe for it.
std::vector<ChunkScore> score_chunks(const std::vector<Chunk>& chunks, std::size_t target_index,
                                     ProbeClient& probe, int probe_steps, unsigned jobs = 1);

/// Lines after cursor_line are dropped first, so the target chunk ends at the
/// cursor. The top-g chunks by confidence (ties toward the lower index) are
/// concatenated in file order, followed by the target chunk.
RetrievalQuery construct_query(std::string_view file_text, int cursor_line, const QueryParams& params,
                               ProbeClient& probe, unsigned jobs = 1);

}  // namespace coderag
