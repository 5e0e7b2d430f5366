#pragma once

#include "coderag/clients.hpp"

#include <map>
#include <mutex>
#include <string>

/// Probe whose confidence is looked up by the context chunk (the prompt up
/// to the first "\n" that precedes the target), so distinct chunks get
/// whatever distinct scores the test assigns.
class TableProbe final : public coderag::ProbeClient {
public:
    TableProbe(std::map<std::string, double> scores, std::string target)
        : scores_(std::move(scores)), suffix_("\n" + std::move(target)) {}

    double greedy_score(std::string_view prompt, int) override {
        std::lock_guard lock(mutex_);
        ++calls;
        if (prompt.size() < suffix_.size() || prompt.substr(prompt.size() - suffix_.size()) != suffix_) {
            throw std::logic_error("prompt does not end with the target chunk");
        }
        return scores_.at(std::string(prompt.substr(0, prompt.size() - suffix_.size())));
    }
    bool concurrent_safe() const override { return true; }

    int calls = 0;

private:
    std::map<std::string, double> scores_;
    std::string suffix_;
    std::mutex mutex_;
};
