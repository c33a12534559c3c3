#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgrag/path_retrieval.hpp"
#include "kgrag/ranker.hpp"

namespace kgrag {

inline constexpr std::size_t kDefaultTopPaths = 32;

struct RankedPath {
    ReasoningPath path;
    std::string text; ///< same rendering that goes into the prompt
    double score = 0.0;
};

/// Best-first; ties ordered by path text.
struct RankedPaths {
    std::vector<RankedPath> entries;
    std::size_t u = kDefaultTopPaths;

    std::vector<std::string> texts() const;
};

/// Score each rendered path against the query and keep the top u.
/// Throws InvalidArgument for u == 0.
RankedPaths rank_paths(const KnowledgeGraph& g, std::string_view query, std::span<const ReasoningPath> paths,
                       const TextRanker& ranker, std::size_t u = kDefaultTopPaths);

} // namespace kgrag
