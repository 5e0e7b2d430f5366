#pragma once

#include "coderag/clients.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace coderag {

inline constexpr int kWireVersion = 1;

/// Request body sent to the LM endpoint. `prompt` travels as "text" for
/// embed requests and as "prompt" otherwise.
struct LmRequest {
    std::string type;  // generate | score | embed | chat
    std::string prompt;
    int max_tokens = 0;
    double temperature = 0.0;
    bool want_logprobs = false;
};

struct LmResponse {
    std::string text;
    std::vector<double> token_logprobs;
    std::vector<float> embedding;
};

std::string encode_request(const LmRequest& request);
/// Throws std::runtime_error on malformed JSON or a version mismatch.
LmRequest decode_request(std::string_view body);
std::string encode_response(const LmResponse& response);
LmResponse decode_response(std::string_view body);

/// An "http://host[:port][/path]" endpoint. Throws std::invalid_argument for
/// anything else.
struct Endpoint {
    std::string host;
    int port = 80;
    std::string path = "/";

    static Endpoint parse(std::string_view url);
};

/// `configured` unless it is empty, then CODERAG_LM_ENDPOINT, then "stub".
std::string resolve_endpoint(std::string_view configured);

/// One POST per call; throws ClientUnavailable on transport or HTTP failure.
class LmTransport {
public:
    explicit LmTransport(Endpoint endpoint, int timeout_seconds = 60)
        : endpoint_(std::move(endpoint)), timeout_seconds_(timeout_seconds) {}
    LmResponse call(const LmRequest& request) const;

private:
    Endpoint endpoint_;
    int timeout_seconds_;
};

/// Sends a `score` request for `steps` greedy tokens and sums the returned
/// per-step log-probabilities.
class RemoteProbe final : public ProbeClient {
public:
    explicit RemoteProbe(Endpoint endpoint, int timeout_seconds = 60)
        : transport_(std::move(endpoint), timeout_seconds) {}
    double greedy_score(std::string_view prompt, int steps) override;
    bool concurrent_safe() const override { return true; }

private:
    LmTransport transport_;
};

class RemoteEmbedder final : public EmbedderClient {
public:
    explicit RemoteEmbedder(Endpoint endpoint, int timeout_seconds = 60)
        : transport_(std::move(endpoint), timeout_seconds) {}
    std::vector<float> embed(std::string_view text) override;
    /// Learned from the first embedding; one request is made if none was seen yet.
    std::size_t dimension() override;
    bool concurrent_safe() const override { return false; }

private:
    LmTransport transport_;
    std::size_t dim_ = 0;
};

inline constexpr std::size_t kDefaultSnippetChars = 1200;
inline constexpr std::string_view kTruncationMarker = "\n# ... [truncated]";

/// Keeps the head of `text`; cuts from the tail and appends the marker so the
/// result is at most max_chars bytes (never splitting a UTF-8 sequence).
std::string truncate_snippet(std::string_view text, std::size_t max_chars);

/// Default reranking prompt. {query} and {snippets} are substituted.
extern const std::string_view kDefaultPickerTemplate;

/// Snippets are numbered from 1 as "[i]" blocks.
std::string render_picker_prompt(std::string_view tmpl, std::string_view query, std::span<const std::string> window,
                                 std::size_t max_chars = kDefaultSnippetChars);

/// Reads "[C] = N" (1-based) from a reply. Returns the 0-based index, or
/// nullopt when no such selection is present.
std::optional<std::size_t> parse_pick_reply(std::string_view reply);

class RemotePicker final : public PickerClient {
public:
    RemotePicker(Endpoint endpoint, std::string tmpl = std::string(kDefaultPickerTemplate),
                 std::size_t max_chars = kDefaultSnippetChars)
        : transport_(std::move(endpoint)), template_(std::move(tmpl)), max_chars_(max_chars) {}
    std::optional<std::size_t> pick(std::string_view query, std::span<const std::string> window) override;

private:
    LmTransport transport_;
    std::string template_;
    std::size_t max_chars_;
};

/// Token counts use approximate_token_count.
class RemoteGenerator final : public GeneratorClient {
public:
    explicit RemoteGenerator(Endpoint endpoint, int timeout_seconds = 60)
        : transport_(std::move(endpoint), timeout_seconds) {}
    std::string generate(std::string_view prompt, const GenerationConfig& config) override;
    std::size_t count_tokens(std::string_view text) override { return approximate_token_count(text); }

private:
    LmTransport transport_;
};

}  // namespace coderag
