#pragma once

#include "coderag/clients.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace coderag {

struct Snippet {
    std::string id;
    std::string text;

    friend bool operator==(const Snippet&, const Snippet&) = default;
};

/// One query with its initial retrieval list, as read from lists.jsonl.
struct DistillationInput {
    std::string query;
    std::vector<Snippet> candidates;
};

struct DistillationSample {
    std::string query;
    std::vector<Snippet> snippets;
    std::string chosen_id;
    std::array<std::string, 5> votes;  // chosen id per trial

    friend bool operator==(const DistillationSample&, const DistillationSample&) = default;
};

struct DistillParams {
    std::vector<std::size_t> sample_sizes{2, 3, 4, 5, 6, 7};  // N
    std::size_t subsets_per_size = 3;
    std::size_t min_agreement = 4;  // of 5 votes
    std::uint64_t seed = 0;
    bool shuffle_between_votes = false;
};

struct DistillStats {
    std::size_t subsets = 0;
    std::size_t skipped = 0;  // (query, size) iterations where the list was too short
    std::size_t emitted = 0;
};

/// True when some id holds at least `min_agreement` of the votes and equals chosen_id.
bool verify_consensus(const DistillationSample& sample, std::size_t min_agreement = 4);

/// For every query and every size i in N, draws `subsets_per_size` random
/// subsets of i distinct candidates, asks the picker five times, and keeps
/// the subset when one candidate wins at least four votes. Lists shorter
/// than i skip that size. PickerUnavailable propagates; samples emitted so far
/// are in `partial` when given.
std::vector<DistillationSample> build_distillation_data(const std::vector<DistillationInput>& inputs,
                                                        PickerClient& picker, const DistillParams& params,
                                                        DistillStats* stats = nullptr,
                                                        std::vector<DistillationSample>* partial = nullptr);

std::vector<DistillationInput> load_distillation_inputs(const std::filesystem::path& file);
std::string to_jsonl(const std::vector<DistillationSample>& samples);

}  // namespace coderag
