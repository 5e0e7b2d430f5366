#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace coderag {

class ClientUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ProbeUnavailable : public ClientUnavailable {
public:
    using ClientUnavailable::ClientUnavailable;
};

class EmbedderUnavailable : public ClientUnavailable {
public:
    using ClientUnavailable::ClientUnavailable;
};

class PickerUnavailable : public ClientUnavailable {
public:
    using ClientUnavailable::ClientUnavailable;
};

class GeneratorUnavailable : public ClientUnavailable {
public:
    using ClientUnavailable::ClientUnavailable;
};

struct GenerationConfig {
    int max_new_tokens = 48;
    double temperature = 0.0;
    int max_input_tokens = 2048;
};

/// Scores a prompt by greedy generation: the model generates `steps` tokens
/// at temperature 0 and returns the sum of the per-step maximum
/// log-probability over the vocabulary.
class ProbeClient {
public:
    virtual ~ProbeClient() = default;
    virtual double greedy_score(std::string_view prompt, int steps) = 0;
    /// Whether greedy_score may be called from several threads at once.
    virtual bool concurrent_safe() const { return false; }
};

class EmbedderClient {
public:
    virtual ~EmbedderClient() = default;
    virtual std::vector<float> embed(std::string_view text) = 0;
    virtual std::size_t dimension() = 0;
    virtual bool concurrent_safe() const { return false; }
};

/// Chooses the most helpful snippet of a window for the query.
/// Returns nullopt when the reply cannot be read as a selection; the caller
/// validates the index against the window size.
class PickerClient {
public:
    virtual ~PickerClient() = default;
    virtual std::optional<std::size_t> pick(std::string_view query, std::span<const std::string> window) = 0;
};

class GeneratorClient {
public:
    virtual ~GeneratorClient() = default;
    virtual std::string generate(std::string_view prompt, const GenerationConfig& config) = 0;
    virtual std::size_t count_tokens(std::string_view text) = 0;
    /// False when count_tokens is an approximation of the model's tokenizer.
    virtual bool exact_token_count() const { return false; }
};

/// Whitespace-and-punctuation approximation of a code tokenizer: every run of
/// word characters counts as one token, every other non-space byte as one.
std::size_t approximate_token_count(std::string_view text);

}  // namespace coderag
