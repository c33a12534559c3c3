#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgrag/http.hpp"

namespace kgrag {

/// Scores candidate texts against a query; higher means more relevant.
/// Serves as both the edge ranking model and the path ranking model.
class TextRanker {
public:
    virtual ~TextRanker() = default;
    virtual std::string_view name() const = 0;
    /// One score per candidate, same order.
    virtual std::vector<double> score(std::string_view query, std::span<const std::string> candidates) const = 0;
};

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Okapi BM25 treating the candidate list as the collection. Document
/// frequencies and the average length come from integer counts, so a
/// candidate's score does not depend on where it sits in the list.
/// Common question words are dropped from the query.
class LexicalRanker final : public TextRanker {
public:
    explicit LexicalRanker(Bm25Params params = {}) : params_(params) {}
    std::string_view name() const override { return "lexical"; }
    std::vector<double> score(std::string_view query, std::span<const std::string> candidates) const override;

    static std::vector<std::string> query_terms(std::string_view query);

private:
    Bm25Params params_;
};

struct RemoteRankerConfig {
    std::string url;
    std::chrono::milliseconds timeout{2000};
};

/// POSTs {"query", "candidates"} and expects {"scores"}. Any transport or
/// protocol failure degrades to the lexical ranker with a warning.
class RemoteRanker final : public TextRanker {
public:
    RemoteRanker(RemoteRankerConfig config, std::shared_ptr<http::Transport> transport = nullptr);
    std::string_view name() const override { return "remote"; }
    std::vector<double> score(std::string_view query, std::span<const std::string> candidates) const override;

    std::size_t fallbacks() const noexcept { return fallbacks_.load(); }

private:
    RemoteRankerConfig config_;
    std::shared_ptr<http::Transport> transport_;
    LexicalRanker fallback_;
    mutable std::atomic<std::size_t> fallbacks_{0};
};

} // namespace kgrag
