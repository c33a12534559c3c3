#include "kgrag/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "kgrag/text.hpp"

namespace kgrag {

namespace {

const std::unordered_set<std::string> kStopwords = {
    "a",   "an",  "the",  "of",    "is",    "are",  "was", "were", "what", "which", "who",
    "whom", "where", "when", "how", "does", "do",   "did", "in",   "on",   "to",    "for",
    "by",  "with", "and", "or",    "that",  "this", "me",  "tell", "s"};

} // namespace

std::vector<std::string> LexicalRanker::query_terms(std::string_view query) {
    std::vector<std::string> terms;
    for (auto& t : text::tokenize(query)) {
        if (kStopwords.count(t)) continue;
        if (std::find(terms.begin(), terms.end(), t) == terms.end()) terms.push_back(std::move(t));
    }
    return terms;
}

std::vector<double> LexicalRanker::score(std::string_view query, std::span<const std::string> candidates) const {
    std::vector<double> scores(candidates.size(), 0.0);
    if (candidates.empty()) return scores;
    const auto terms = query_terms(query);
    if (terms.empty()) return scores;

    // term -> per-candidate frequency for the query terms only
    std::unordered_map<std::string, std::size_t> term_index;
    for (std::size_t i = 0; i < terms.size(); ++i) term_index.emplace(terms[i], i);

    const std::size_t n = candidates.size();
    std::vector<std::size_t> lengths(n, 0);
    std::vector<std::vector<std::uint32_t>> tf(n, std::vector<std::uint32_t>(terms.size(), 0));
    std::vector<std::size_t> df(terms.size(), 0);
    std::size_t total_length = 0;
    for (std::size_t c = 0; c < n; ++c) {
        const auto tokens = text::tokenize(candidates[c]);
        lengths[c] = tokens.size();
        total_length += tokens.size();
        for (const auto& tok : tokens) {
            auto it = term_index.find(tok);
            if (it != term_index.end()) ++tf[c][it->second];
        }
        for (std::size_t t = 0; t < terms.size(); ++t) df[t] += tf[c][t] > 0 ? 1 : 0;
    }
    if (total_length == 0) return scores;
    const double avg_length = static_cast<double>(total_length) / static_cast<double>(n);

    std::vector<double> idf(terms.size());
    for (std::size_t t = 0; t < terms.size(); ++t) {
        const double d = static_cast<double>(df[t]);
        idf[t] = std::log(1.0 + (static_cast<double>(n) - d + 0.5) / (d + 0.5));
    }
    for (std::size_t c = 0; c < n; ++c) {
        const double norm = params_.k1 * (1.0 - params_.b + params_.b * static_cast<double>(lengths[c]) / avg_length);
        double s = 0.0;
        for (std::size_t t = 0; t < terms.size(); ++t) {
            if (tf[c][t] == 0) continue;
            const double f = tf[c][t];
            s += idf[t] * f * (params_.k1 + 1.0) / (f + norm);
        }
        scores[c] = s;
    }
    return scores;
}

RemoteRanker::RemoteRanker(RemoteRankerConfig config, std::shared_ptr<http::Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
    if (!transport_) transport_ = std::make_shared<http::HttplibTransport>();
    http::parse_endpoint(config_.url);
}

std::vector<double> RemoteRanker::score(std::string_view query, std::span<const std::string> candidates) const {
    if (candidates.empty()) return {};
    nlohmann::json request = {{"query", std::string(query)},
                              {"candidates", std::vector<std::string>(candidates.begin(), candidates.end())}};
    const auto res = transport_->post(config_.url, request.dump(), {}, config_.timeout);

    std::string problem;
    if (!res.transport_ok) {
        problem = "transport failure: " + res.error;
    } else if (res.status != 200) {
        problem = "HTTP status " + std::to_string(res.status);
    } else {
        auto reply = nlohmann::json::parse(res.body, nullptr, false);
        if (reply.is_discarded() || !reply.is_object() || !reply.contains("scores") || !reply["scores"].is_array()) {
            problem = "malformed reply";
        } else if (reply["scores"].size() != candidates.size()) {
            problem = "score count does not match candidate count";
        } else {
            std::vector<double> scores;
            scores.reserve(candidates.size());
            for (const auto& s : reply["scores"]) {
                if (!s.is_number()) {
                    problem = "non-numeric score";
                    break;
                }
                scores.push_back(s.get<double>());
            }
            if (problem.empty()) return scores;
        }
    }
    ++fallbacks_;
    spdlog::warn("remote ranker at {} failed ({}); using lexical scores", config_.url, problem);
    return fallback_.score(query, candidates);
}

} // namespace kgrag
