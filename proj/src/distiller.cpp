#include "coderag/distiller.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

namespace coderag {

bool verify_consensus(const DistillationSample& sample, std::size_t min_agreement) {
    const auto agree = static_cast<std::size_t>(std::count(sample.votes.begin(), sample.votes.end(), sample.chosen_id));
    const bool listed = std::any_of(sample.snippets.begin(), sample.snippets.end(),
                                    [&](const Snippet& s) { return s.id == sample.chosen_id; });
    return listed && agree >= min_agreement;
}

std::vector<DistillationSample> build_distillation_data(const std::vector<DistillationInput>& inputs,
                                                        PickerClient& picker, const DistillParams& params,
                                                        DistillStats* stats,
                                                        std::vector<DistillationSample>* partial) {
    std::vector<DistillationSample> samples;
    DistillStats local;
    std::mt19937_64 rng(params.seed);
    try {
        for (std::size_t q = 0; q < inputs.size(); ++q) {
            const auto& input = inputs[q];
            for (std::size_t size : params.sample_sizes) {
                if (size == 0 || input.candidates.size() < size) {
                    spdlog::info("query {}: list of {} candidates is shorter than sample size {}; skipped", q,
                                 input.candidates.size(), size);
                    ++local.skipped;
                    continue;
                }
                for (std::size_t j = 0; j < params.subsets_per_size; ++j) {
                    // Partial Fisher-Yates: the first `size` slots are a uniform
                    // draw without replacement, in draw order.
                    std::vector<std::size_t> order(input.candidates.size());
                    std::iota(order.begin(), order.end(), 0);
                    for (std::size_t k = 0; k < size; ++k) {
                        std::uniform_int_distribution<std::size_t> dist(k, order.size() - 1);
                        std::swap(order[k], order[dist(rng)]);
                    }
                    DistillationSample sample;
                    sample.query = input.query;
                    for (std::size_t k = 0; k < size; ++k) sample.snippets.push_back(input.candidates[order[k]]);
                    ++local.subsets;

                    std::map<std::string, std::size_t> tally;
                    for (std::size_t z = 0; z < sample.votes.size(); ++z) {
                        std::vector<std::size_t> view(size);
                        std::iota(view.begin(), view.end(), 0);
                        if (params.shuffle_between_votes) std::shuffle(view.begin(), view.end(), rng);
                        std::vector<std::string> window;
                        for (auto v : view) window.push_back(sample.snippets[v].text);
                        const auto pick = picker.pick(input.query, window);
                        std::string vote;
                        if (pick && *pick < window.size()) vote = sample.snippets[view[*pick]].id;
                        sample.votes[z] = vote;
                        if (!vote.empty()) ++tally[vote];
                    }
                    for (const auto& [id, count] : tally) {
                        if (count >= params.min_agreement) sample.chosen_id = id;
                    }
                    if (!sample.chosen_id.empty()) {
                        samples.push_back(std::move(sample));
                        ++local.emitted;
                    }
                }
            }
        }
    } catch (const ClientUnavailable&) {
        if (partial) *partial = samples;
        if (stats) *stats = local;
        throw;
    }
    if (stats) *stats = local;
    return samples;
}

std::vector<DistillationInput> load_distillation_inputs(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot read " + file.string());
    std::vector<DistillationInput> inputs;
    for (std::string line; std::getline(in, line);) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto j = nlohmann::json::parse(line);
        DistillationInput input;
        input.query = j.at("query").get<std::string>();
        for (const auto& c : j.at("candidates")) {
            input.candidates.push_back({c.at("id").get<std::string>(), c.at("text").get<std::string>()});
        }
        inputs.push_back(std::move(input));
    }
    return inputs;
}

std::string to_jsonl(const std::vector<DistillationSample>& samples) {
    std::string out;
    for (const auto& s : samples) {
        nlohmann::ordered_json j;
        j["query"] = s.query;
        auto& snippets = j["snippets"] = nlohmann::ordered_json::array();
        for (const auto& snip : s.snippets) snippets.push_back({{"id", snip.id}, {"text", snip.text}});
        j["chosen_id"] = s.chosen_id;
        j["votes"] = s.votes;
        out += j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
        out.push_back('\n');
    }
    return out;
}

}  // namespace coderag
