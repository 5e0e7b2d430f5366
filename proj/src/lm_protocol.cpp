#include "coderag/lm_protocol.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cstdlib>
#include <regex>

namespace coderag {

std::string encode_request(const LmRequest& request) {
    nlohmann::ordered_json j;
    j["version"] = kWireVersion;
    j["type"] = request.type;
    j[request.type == "embed" ? "text" : "prompt"] = request.prompt;
    j["max_tokens"] = request.max_tokens;
    j["temperature"] = request.temperature;
    j["want_logprobs"] = request.want_logprobs;
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

namespace {

nlohmann::json parse_versioned(std::string_view body) {
    auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw std::runtime_error("LM message is not a JSON object");
    if (j.contains("version") && j.at("version").get<int>() != kWireVersion) {
        throw std::runtime_error("unsupported LM wire version " + j.at("version").dump());
    }
    return j;
}

}  // namespace

LmRequest decode_request(std::string_view body) {
    const auto j = parse_versioned(body);
    LmRequest r;
    r.type = j.at("type").get<std::string>();
    if (r.type != "generate" && r.type != "score" && r.type != "embed" && r.type != "chat") {
        throw std::runtime_error("unknown LM request type '" + r.type + "'");
    }
    r.prompt = j.value(r.type == "embed" ? "text" : "prompt", std::string{});
    r.max_tokens = j.value("max_tokens", 0);
    r.temperature = j.value("temperature", 0.0);
    r.want_logprobs = j.value("want_logprobs", false);
    return r;
}

std::string encode_response(const LmResponse& response) {
    nlohmann::ordered_json j;
    j["version"] = kWireVersion;
    j["text"] = response.text;
    j["token_logprobs"] = response.token_logprobs;
    j["embedding"] = response.embedding;
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

LmResponse decode_response(std::string_view body) {
    const auto j = parse_versioned(body);
    LmResponse r;
    r.text = j.value("text", std::string{});
    if (j.contains("token_logprobs") && !j.at("token_logprobs").is_null()) {
        r.token_logprobs = j.at("token_logprobs").get<std::vector<double>>();
    }
    if (j.contains("embedding") && !j.at("embedding").is_null()) {
        r.embedding = j.at("embedding").get<std::vector<float>>();
    }
    return r;
}

Endpoint Endpoint::parse(std::string_view url) {
    constexpr std::string_view scheme = "http://";
    if (url.substr(0, scheme.size()) != scheme) {
        throw std::invalid_argument("LM endpoint must start with http://, got '" + std::string(url) + "'");
    }
    auto rest = url.substr(scheme.size());
    Endpoint e;
    const auto slash = rest.find('/');
    if (slash != std::string_view::npos) {
        e.path = std::string(rest.substr(slash));
        rest = rest.substr(0, slash);
    }
    const auto colon = rest.rfind(':');
    if (colon != std::string_view::npos) {
        const std::string port(rest.substr(colon + 1));
        char* end = nullptr;
        const long value = std::strtol(port.c_str(), &end, 10);
        if (port.empty() || *end != '\0' || value <= 0 || value > 65535) {
            throw std::invalid_argument("bad port in LM endpoint '" + std::string(url) + "'");
        }
        e.port = static_cast<int>(value);
        rest = rest.substr(0, colon);
    }
    if (rest.empty()) throw std::invalid_argument("missing host in LM endpoint '" + std::string(url) + "'");
    e.host = std::string(rest);
    return e;
}

std::string resolve_endpoint(std::string_view configured) {
    if (!configured.empty()) return std::string(configured);
    if (const char* env = std::getenv("CODERAG_LM_ENDPOINT"); env && *env) return env;
    return "stub";
}

LmResponse LmTransport::call(const LmRequest& request) const {
    httplib::Client client(endpoint_.host, endpoint_.port);
    client.set_connection_timeout(timeout_seconds_, 0);
    client.set_read_timeout(timeout_seconds_, 0);
    client.set_write_timeout(timeout_seconds_, 0);
    const auto res = client.Post(endpoint_.path, encode_request(request), "application/json");
    const std::string where = endpoint_.host + ":" + std::to_string(endpoint_.port) + endpoint_.path;
    if (!res) throw ClientUnavailable(where + ": " + httplib::to_string(res.error()));
    if (res->status != 200) throw ClientUnavailable(where + ": HTTP " + std::to_string(res->status));
    try {
        return decode_response(res->body);
    } catch (const std::exception& e) {
        throw ClientUnavailable(where + ": " + e.what());
    }
}

double RemoteProbe::greedy_score(std::string_view prompt, int steps) {
    if (steps <= 0) return 0.0;
    try {
        const auto res = transport_.call({"score", std::string(prompt), steps, 0.0, true});
        if (res.token_logprobs.empty()) throw ClientUnavailable("score response carries no token_logprobs");
        double sum = 0.0;
        for (double lp : res.token_logprobs) sum += lp;
        return sum;
    } catch (const ClientUnavailable& e) {
        throw ProbeUnavailable(e.what());
    }
}

std::vector<float> RemoteEmbedder::embed(std::string_view text) {
    try {
        auto res = transport_.call({"embed", std::string(text), 0, 0.0, false});
        if (res.embedding.empty()) throw ClientUnavailable("embed response carries no embedding");
        if (dim_ == 0) dim_ = res.embedding.size();
        if (res.embedding.size() != dim_) {
            throw ClientUnavailable("embedding dimension changed from " + std::to_string(dim_) + " to " +
                                    std::to_string(res.embedding.size()));
        }
        return std::move(res.embedding);
    } catch (const ClientUnavailable& e) {
        throw EmbedderUnavailable(e.what());
    }
}

std::size_t RemoteEmbedder::dimension() {
    if (dim_ == 0) embed("dimension probe");
    return dim_;
}

std::string truncate_snippet(std::string_view text, std::size_t max_chars) {
    if (text.size() <= max_chars) return std::string(text);
    if (max_chars <= kTruncationMarker.size()) return std::string(kTruncationMarker.substr(0, max_chars));
    std::size_t keep = max_chars - kTruncationMarker.size();
    while (keep > 0 && (static_cast<unsigned char>(text[keep]) & 0xc0) == 0x80) --keep;
    return std::string(text.substr(0, keep)) + std::string(kTruncationMarker);
}

const std::string_view kDefaultPickerTemplate =
    "You are given a code completion query and several code snippets retrieved from the same repository.\n"
    "Pick the most relevant code snippet to the query, i.e. the one that helps most to complete the code.\n"
    "\n"
    "Query:\n"
    "{query}\n"
    "\n"
    "Code snippets:\n"
    "{snippets}\n"
    "Answer with exactly one selection in the form [C] = <number> and nothing else.\n";

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

}  // namespace

std::string render_picker_prompt(std::string_view tmpl, std::string_view query, std::span<const std::string> window,
                                 std::size_t max_chars) {
    std::string snippets;
    for (std::size_t i = 0; i < window.size(); ++i) {
        snippets += "[" + std::to_string(i + 1) + "]\n";
        snippets += truncate_snippet(window[i], max_chars);
        if (snippets.back() != '\n') snippets.push_back('\n');
    }
    // {query} is substituted around the snippet block, never inside it.
    std::string out(tmpl);
    const auto query_pos = out.find("{query}");
    const auto snip_pos = out.find("{snippets}");
    if (query_pos == std::string::npos || snip_pos == std::string::npos) {
        throw std::invalid_argument("picker template needs {query} and {snippets}");
    }
    std::string head = out.substr(0, snip_pos);
    std::string tail = out.substr(snip_pos + std::string_view("{snippets}").size());
    replace_all(head, "{query}", query);
    replace_all(tail, "{query}", query);
    return head + snippets + tail;
}

std::optional<std::size_t> parse_pick_reply(std::string_view reply) {
    static const std::regex pattern(R"(\[C\]\s*=\s*\[?(\d+)\]?)");
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_search(reply.begin(), reply.end(), m, pattern)) return std::nullopt;
    const std::string digits = m[1].str();
    if (digits.size() > 9) return std::nullopt;
    const std::size_t n = std::stoul(digits);
    if (n == 0) return std::nullopt;
    return n - 1;
}

std::optional<std::size_t> RemotePicker::pick(std::string_view query, std::span<const std::string> window) {
    try {
        const auto res = transport_.call({"chat", render_picker_prompt(template_, query, window, max_chars_), 16, 0.0,
                                          false});
        return parse_pick_reply(res.text);
    } catch (const ClientUnavailable& e) {
        throw PickerUnavailable(e.what());
    }
}

std::string RemoteGenerator::generate(std::string_view prompt, const GenerationConfig& config) {
    try {
        return transport_.call({"generate", std::string(prompt), config.max_new_tokens, config.temperature, false})
            .text;
    } catch (const ClientUnavailable& e) {
        throw GeneratorUnavailable(e.what());
    }
}

}  // namespace coderag
