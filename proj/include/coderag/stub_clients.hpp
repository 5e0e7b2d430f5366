#pragma once

#include "coderag/clients.hpp"

#include <cstdint>
#include <functional>
#include <random>

namespace coderag {

/// Deterministic stand-in for the probe LM. The prompt is read as a context
/// chunk (its first `chunk_lines` lines) followed by the target chunk; the
/// confidence is minus the number of distinct identifiers of the context
/// that do not occur in the target. Always <= 0.
class StubProbe final : public ProbeClient {
public:
    explicit StubProbe(int chunk_lines) : chunk_lines_(chunk_lines) {}
    double greedy_score(std::string_view prompt, int steps) override;
    bool concurrent_safe() const override { return true; }

private:
    int chunk_lines_;
};

/// Token-hash bag projection: each search term contributes a pseudo-random
/// +-1 vector derived from (term, seed).
class StubEmbedder final : public EmbedderClient {
public:
    explicit StubEmbedder(std::size_t dim = 64, std::uint64_t seed = 0x5eed) : dim_(dim), seed_(seed) {}
    std::vector<float> embed(std::string_view text) override;
    std::size_t dimension() override { return dim_; }
    bool concurrent_safe() const override { return true; }

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

/// Picks the snippet whose distinct search terms best overlap the query's
/// (|Q n S| / sqrt(|S|)), ties toward the earlier window position.
class StubPicker final : public PickerClient {
public:
    std::optional<std::size_t> pick(std::string_view query, std::span<const std::string> window) override;
};

/// Argmax of a caller-supplied score, ties toward the earlier position.
class ScoreOraclePicker final : public PickerClient {
public:
    explicit ScoreOraclePicker(std::function<double(std::string_view)> score) : score_(std::move(score)) {}
    std::optional<std::size_t> pick(std::string_view query, std::span<const std::string> window) override;

private:
    std::function<double(std::string_view)> score_;
};

/// Uniformly random choice; used to measure consensus filtering.
class RandomPicker final : public PickerClient {
public:
    explicit RandomPicker(std::uint64_t seed) : rng_(seed) {}
    std::optional<std::size_t> pick(std::string_view query, std::span<const std::string> window) override;

private:
    std::mt19937_64 rng_;
};

/// Completes the identifier fragment at the end of the prompt by copying the
/// first longer identifier in the prompt that extends it, followed by the rest
/// of that source line. Returns "" when nothing matches.
class EchoGenerator final : public GeneratorClient {
public:
    std::string generate(std::string_view prompt, const GenerationConfig& config) override;
    std::size_t count_tokens(std::string_view text) override { return approximate_token_count(text); }
};

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace coderag
